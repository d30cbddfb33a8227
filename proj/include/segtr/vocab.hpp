#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace segtr {

inline constexpr const char* kPadToken = "<PAD>";
inline constexpr const char* kUnkToken = "<UNK>";

// Token ids assigned by descending frequency then lexicographic order, with
// PAD=0 and UNK=1 always reserved. Tokens below min_frequency are dropped
// and encode to UNK later.
class Vocabulary {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;

  Vocabulary() = default;

  int id_of(const std::string& token) const;  // absent -> kUnkId
  const std::string& token_of(int id) const;
  std::size_t frequency_of(const std::string& token) const;
  bool contains(const std::string& token) const;
  std::size_t size() const { return id_to_token_.size(); }
  int min_frequency() const { return min_frequency_; }

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  friend Vocabulary build_vocabulary(
      const std::vector<std::vector<std::string>>& corpus, int min_frequency);

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::unordered_map<std::string, std::size_t> frequencies_;
  std::vector<std::string> id_to_token_;
  int min_frequency_ = 1;
};

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& corpus,
                            int min_frequency = 3);

struct EncodedSequence {
  std::vector<int> ids;  // fixed length, padded with kPadId
  std::size_t true_length = 0;
  std::int64_t review_id = 0;
  int sentence_index = 0;
};

// Maps tokens to ids (absent -> UNK), right-truncates sequences longer than
// max_length and pads the rest with PAD.
EncodedSequence encode(const Vocabulary& vocab,
                       const std::vector<std::string>& tokens,
                       std::size_t max_length);

// Inverse of encode up to UNK substitution; PAD positions are dropped.
std::vector<std::string> decode(const Vocabulary& vocab,
                                const EncodedSequence& seq);

}  // namespace segtr
