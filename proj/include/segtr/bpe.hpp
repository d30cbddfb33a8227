#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace segtr {

enum class BpeResidue { Discard, Unk };

// Characters not covered by the trained token set are handled per
// BpeResidue; this marker stands in for them under the Unk policy.
inline constexpr const char* kBpeResidueToken = "<UNK>";

struct SubwordToken {
  std::string text;
  std::size_t word_index = 0;
};

// Greedy pair-merge vocabulary. tokens holds every single character seen in
// training plus every merge product, capped at vocab_limit.
struct BpeModel {
  std::size_t vocab_limit = 0;
  std::vector<std::pair<std::string, std::string>> merges;
  std::unordered_set<std::string> tokens;

  bool operator==(const BpeModel& other) const {
    return vocab_limit == other.vocab_limit && merges == other.merges &&
           tokens == other.tokens;
  }
};

// Starts from per-word character sequences (no end-of-word marker; merges
// never cross words) and repeatedly merges the most frequent adjacent pair,
// ties broken lexicographically by (left, right). Stops when the token set
// would exceed vocab_limit or no pair occurs at least twice.
BpeModel bpe_train(const std::vector<std::string>& word_tokens,
                   std::size_t vocab_limit);
BpeModel bpe_train(const std::unordered_map<std::string, std::size_t>& counts,
                   std::size_t vocab_limit);

// Splits each word into characters, replays the merges in training order,
// then resolves residue characters per policy. Order preserved.
std::vector<SubwordToken> bpe_encode(const BpeModel& model,
                                     const std::vector<std::string>& words,
                                     BpeResidue on_residue = BpeResidue::Discard);

// Merges file: "#bpe v1 limit=<N>", an "#alphabet ..." header line carrying
// the single-character tokens (they are not recoverable from the merge list
// alone), then one "left right" merge per line in application order.
void save_bpe_model(const BpeModel& model, const std::string& path);
BpeModel load_bpe_model(const std::string& path);

}  // namespace segtr
