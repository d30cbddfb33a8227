#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "segtr/bpe.hpp"
#include "segtr/morphdict.hpp"

namespace segtr {

enum class SegmentationMethod {
  WordToken,
  Lemma,
  LemmaSuffix,
  LemmaSuffixMeta,
  Stem,
  StemSuffix,
  StemSuffixMeta,
  TokenMeta,
  Character,
  Syllable,
  Bpe1k,
  Bpe5k,
  Bpe30k,
  Hybrid,
};

inline constexpr std::array<SegmentationMethod, 14> kAllMethods = {
    SegmentationMethod::WordToken,      SegmentationMethod::Lemma,
    SegmentationMethod::LemmaSuffix,    SegmentationMethod::LemmaSuffixMeta,
    SegmentationMethod::Stem,           SegmentationMethod::StemSuffix,
    SegmentationMethod::StemSuffixMeta, SegmentationMethod::TokenMeta,
    SegmentationMethod::Character,      SegmentationMethod::Syllable,
    SegmentationMethod::Bpe1k,          SegmentationMethod::Bpe5k,
    SegmentationMethod::Bpe30k,         SegmentationMethod::Hybrid,
};

std::string method_name(SegmentationMethod method);
std::optional<SegmentationMethod> parse_method(std::string_view name);

bool method_needs_dictionary(SegmentationMethod method);
bool method_is_bpe(SegmentationMethod method);
// Canonical vocabulary target of a BPE method (1000/5000/30000).
std::size_t bpe_default_limit(SegmentationMethod method);

// Turkish-aware lowercasing plus punctuation split: every punctuation
// character becomes its own token. Tokens are non-empty and whitespace-free.
std::vector<std::string> tokenize_words(std::string_view text);

// One token per grapheme of every word, order preserved.
std::vector<std::string> segment_characters(
    const std::vector<std::string>& words);

struct SegmenterDeps {
  const MorphDictionary* dict = nullptr;
  const BpeModel* bpe1k = nullptr;
  const BpeModel* bpe5k = nullptr;
  const BpeModel* bpe30k = nullptr;
  BpeResidue on_residue = BpeResidue::Discard;

  const BpeModel* bpe_model(SegmentationMethod method) const;
};

// Unified dispatch over all 14 methods. Morph variants need dict, BPE
// methods need the matching trained model; a missing dependency throws
// ConfigError naming the method. Hybrid keeps dictionary-known words whole
// and decomposes unknown ones to characters.
std::vector<std::string> segment(SegmentationMethod method,
                                 std::string_view text,
                                 const SegmenterDeps& deps);

}  // namespace segtr
