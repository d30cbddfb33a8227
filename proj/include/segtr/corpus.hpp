#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace segtr {

enum class Polarity : int { Negative = 0, Positive = 1 };

enum class RatingScheme { MovieReviews, ProductReviews };

struct Review {
  std::int64_t id = 0;
  Polarity label = Polarity::Negative;
  std::string text;
};

struct SentenceRecord {
  std::int64_t review_id = 0;
  int index = 0;
  std::string text;
  Polarity label = Polarity::Negative;
};

struct DatasetStats {
  std::size_t vocab_size = 0;
  double avg_sentence_length = 0.0;
  std::size_t max_review_size = 0;
};

struct SplitSpec {
  double train_ratio = 0.8;
  double val_ratio = 0.1;
  double test_ratio = 0.1;
  std::uint64_t seed = 1;

  void validate() const;  // ratios positive, sum to 1 within 1e-9
};

struct SplitResult {
  std::vector<Review> train;
  std::vector<Review> val;
  std::vector<Review> test;
};

// MovieReviews ratings 0.5..5.0 in half steps: 0.5-2.0 negative, 2.5-3.5
// neutral (nullopt), 4.0-5.0 positive. ProductReviews integer 1..5: 1-3
// negative, 4-5 positive. Out-of-scale ratings throw InputError.
std::optional<Polarity> map_rating_to_polarity(double rating,
                                               RatingScheme scheme);

// Rule-based splitter: a sentence ends after a run of '.', '!', '?' or '…'
// followed by whitespace or end of text. A '.' between two digits does not
// terminate. Worst case the whole review is one sentence. Joining the
// returned texts with single spaces reproduces normalize_ws(review.text).
std::vector<SentenceRecord> split_sentences(const Review& review);

// Word counting inside this module is whitespace-delimited: punctuation
// stays attached to its word, matching the raw-corpus statistics the
// pipeline reports before any segmentation runs.
std::size_t word_count(std::string_view text);

// Nearest-rank percentile cutoff L* over the sentence word-count multiset;
// sentences longer than L* become consecutive windows of L* words (last one
// may be shorter). Order and lineage preserved, indices renumbered per
// review.
std::vector<SentenceRecord> break_long_sentences(
    const std::vector<SentenceRecord>& sentences, double percentile = 0.995);

// The cutoff used by break_long_sentences, exposed for reporting.
std::size_t nearest_rank_cutoff(std::vector<std::size_t> lengths,
                                double percentile);

DatasetStats compute_stats(const std::vector<Review>& reviews);

// Review-granular split: val and test get floor(n*ratio) reviews each, the
// remainder goes to train. Deterministic for a given seed. n < 3 throws.
SplitResult split_dataset(const std::vector<Review>& reviews,
                          const SplitSpec& spec);

// --- corpus file I/O -------------------------------------------------------
// One review per line: label <TAB> text. label is "0"/"1", or "r:<rating>"
// which requires a rating scheme. Neutral ratings are dropped and counted.

struct CorpusLoadResult {
  std::vector<Review> reviews;
  std::size_t excluded_neutral = 0;
  std::vector<std::string> skipped;  // "<line>: <reason>" under lenient mode
};

CorpusLoadResult load_corpus(const std::string& path,
                             std::optional<RatingScheme> scheme,
                             bool lenient);

void write_corpus(std::ostream& os, const std::vector<Review>& reviews);

std::string format_stats(const DatasetStats& stats, bool csv);

}  // namespace segtr
