#pragma once

#include <array>
#include <string>
#include <unordered_map>
#include <vector>

namespace segtr {

enum class MorphVariant {
  Lemma,
  LemmaSuffix,
  LemmaSuffixMeta,
  Stem,
  StemSuffix,
  StemSuffixMeta,
  TokenMeta,
};

inline constexpr std::array<MorphVariant, 7> kMorphVariants = {
    MorphVariant::Lemma,          MorphVariant::LemmaSuffix,
    MorphVariant::LemmaSuffixMeta, MorphVariant::Stem,
    MorphVariant::StemSuffix,      MorphVariant::StemSuffixMeta,
    MorphVariant::TokenMeta,
};

// One precomputed analysis per surface form. Unknown words pass through
// unchanged in lemma/stem/suffix views and render as "Unk" in meta views.
struct MorphEntry {
  std::string surface;
  bool known = false;
  std::vector<std::string> lemma;
  std::vector<std::string> lemma_suffix;
  std::vector<std::string> lemma_meta;
  std::vector<std::string> stem;
  std::vector<std::string> stem_suffix;
  std::vector<std::string> stem_meta;
  std::vector<std::string> token_meta;

  static MorphEntry unknown(std::string surface);
  const std::vector<std::string>& view(MorphVariant variant) const;
};

class MorphDictionary {
 public:
  MorphDictionary() = default;

  // TSV, 9 columns: surface, known(0|1), lemma, lemma_suffix, lemma_meta,
  // stem, stem_suffix, stem_meta, token_meta. Token lists are
  // space-separated; columns may be empty only on known=0 rows. Duplicate
  // surfaces: last row wins.
  static MorphDictionary load(const std::string& path);

  // Lookup never fails: absent surfaces get a synthesized unknown entry.
  // Surfaces are matched after Turkish-aware lowercasing.
  MorphEntry lookup(const std::string& surface) const;

  bool contains(const std::string& surface) const;
  std::size_t size() const { return entries_.size(); }
  std::size_t duplicate_count() const { return duplicates_; }

  void insert(MorphEntry entry);

 private:
  std::unordered_map<std::string, MorphEntry> entries_;
  std::size_t duplicates_ = 0;
};

// Per-word expansion of the chosen variant, concatenated in input order.
std::vector<std::string> segment_morph(const MorphDictionary& dict,
                                       MorphVariant variant,
                                       const std::vector<std::string>& words);

}  // namespace segtr
