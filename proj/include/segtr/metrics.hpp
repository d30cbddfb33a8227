#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "segtr/corpus.hpp"

namespace segtr {

struct Prediction {
  std::int64_t review_id = 0;
  int sentence_index = 0;
  Polarity label = Polarity::Negative;
  double score = 0.0;  // sigmoid output in [0, 1]
};

struct ReviewScore {
  std::int64_t review_id = 0;
  double mean_score = 0.0;
  std::size_t sentence_count = 0;
  Polarity predicted = Polarity::Negative;
  Polarity label = Polarity::Negative;
};

struct Histogram {
  static constexpr std::size_t kBins = 50;
  std::vector<double> bin_edges;       // 51 uniform edges over [0, 1]
  std::vector<std::size_t> counts_neg; // 50 per class
  std::vector<std::size_t> counts_pos;
};

// Fraction of predictions with (score > threshold) == (label positive).
double sentence_accuracy(const std::vector<Prediction>& preds,
                         double threshold = 0.5);

// Review-level decision: mean of the member sentence scores thresholded at
// 0.5, exact ties breaking negative. Grouped by review id, ascending.
std::vector<ReviewScore> majority_vote(const std::vector<Prediction>& preds);

double review_accuracy(const std::vector<ReviewScore>& scores);

// The mass where the positive- and negative-labeled score distributions
// intersect: 1 - accuracy.
double overlap_ratio(double accuracy);

// 50 uniform bins per class over [0, 1]; score 1.0 lands in the last bin.
Histogram histogram(const std::vector<Prediction>& preds);

struct CltResult {
  double sigma_population = 0.0;  // sigma_0
  double sigma_empirical = 0.0;   // std of the sampled group means
  double sigma_predicted = 0.0;   // sigma_0 / sqrt(n)
  double mean_population = 0.0;
  double mean_of_means = 0.0;
};

// Draws `trials` groups of size n with replacement (seeded) and compares the
// spread of their means against the sigma_0/sqrt(n) prediction.
CltResult clt_check(const std::vector<double>& population_scores,
                    std::size_t group_size, std::size_t trials,
                    std::uint64_t seed);

// review_id <TAB> sentence_index <TAB> label <TAB> score (4 decimals).
void write_predictions(std::ostream& os, const std::vector<Prediction>& preds);
std::vector<Prediction> read_predictions(const std::string& path);

// bin_lo,bin_hi,neg_count,pos_count header plus 50 rows.
void write_histogram_csv(std::ostream& os, const Histogram& hist);

}  // namespace segtr
