#include "segtr/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include "segtr/errors.hpp"
#include "segtr/rng.hpp"

namespace segtr {

double sentence_accuracy(const std::vector<Prediction>& preds,
                         double threshold) {
  if (preds.empty()) {
    throw InputError("sentence accuracy is undefined on zero predictions");
  }
  std::size_t correct = 0;
  for (const auto& p : preds) {
    if ((p.score > threshold) == (p.label == Polarity::Positive)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

std::vector<ReviewScore> majority_vote(const std::vector<Prediction>& preds) {
  // Sentence scores are summed in sentence order so the result does not
  // depend on the order predictions arrive in.
  std::map<std::int64_t, std::vector<const Prediction*>> groups;
  for (const auto& p : preds) groups[p.review_id].push_back(&p);

  std::vector<ReviewScore> out;
  out.reserve(groups.size());
  for (auto& [review_id, members] : groups) {
    std::sort(members.begin(), members.end(),
              [](const Prediction* a, const Prediction* b) {
                return a->sentence_index < b->sentence_index;
              });
    double sum = 0.0;
    for (const Prediction* p : members) sum += p->score;
    ReviewScore rs;
    rs.review_id = review_id;
    rs.sentence_count = members.size();
    rs.mean_score = sum / static_cast<double>(members.size());
    rs.predicted =
        rs.mean_score > 0.5 ? Polarity::Positive : Polarity::Negative;
    rs.label = members.front()->label;
    out.push_back(rs);
  }
  return out;
}

double review_accuracy(const std::vector<ReviewScore>& scores) {
  if (scores.empty()) {
    throw InputError("review accuracy is undefined on zero reviews");
  }
  std::size_t correct = 0;
  for (const auto& s : scores) {
    if (s.predicted == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double overlap_ratio(double accuracy) {
  if (accuracy < 0.0 || accuracy > 1.0) {
    throw InputError("accuracy must lie in [0, 1]");
  }
  return 1.0 - accuracy;
}

Histogram histogram(const std::vector<Prediction>& preds) {
  Histogram hist;
  hist.bin_edges.resize(Histogram::kBins + 1);
  for (std::size_t i = 0; i <= Histogram::kBins; ++i) {
    hist.bin_edges[i] =
        static_cast<double>(i) / static_cast<double>(Histogram::kBins);
  }
  hist.counts_neg.assign(Histogram::kBins, 0);
  hist.counts_pos.assign(Histogram::kBins, 0);
  for (const auto& p : preds) {
    if (!std::isfinite(p.score) || p.score < 0.0 || p.score > 1.0) {
      throw InputError("prediction score outside [0, 1]");
    }
    auto bin = static_cast<std::size_t>(p.score * Histogram::kBins);
    bin = std::min(bin, Histogram::kBins - 1);  // score 1.0 -> last bin
    if (p.label == Polarity::Positive) {
      ++hist.counts_pos[bin];
    } else {
      ++hist.counts_neg[bin];
    }
  }
  return hist;
}

namespace {

// Population-style standard deviation (N divisor).
double population_std(const std::vector<double>& values, double mean) {
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

double mean_of(const std::vector<double>& values) {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

}  // namespace

CltResult clt_check(const std::vector<double>& population_scores,
                    std::size_t group_size, std::size_t trials,
                    std::uint64_t seed) {
  if (group_size < 1) throw InputError("clt_check: group size must be >= 1");
  if (trials < 1000) throw InputError("clt_check: need at least 1000 trials");
  if (population_scores.empty()) {
    throw InputError("clt_check: empty population");
  }

  CltResult result;
  result.mean_population = mean_of(population_scores);
  result.sigma_population =
      population_std(population_scores, result.mean_population);
  result.sigma_predicted =
      result.sigma_population / std::sqrt(static_cast<double>(group_size));

  Rng rng(seed);
  std::vector<double> means;
  means.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    double sum = 0.0;
    for (std::size_t i = 0; i < group_size; ++i) {
      sum += population_scores[rng.next_index(population_scores.size())];
    }
    means.push_back(sum / static_cast<double>(group_size));
  }
  result.mean_of_means = mean_of(means);
  result.sigma_empirical = population_std(means, result.mean_of_means);
  return result;
}

void write_predictions(std::ostream& os, const std::vector<Prediction>& preds) {
  char buf[32];
  for (const auto& p : preds) {
    std::snprintf(buf, sizeof(buf), "%.4f", p.score);
    os << p.review_id << '\t' << p.sentence_index << '\t'
       << static_cast<int>(p.label) << '\t' << buf << '\n';
  }
}

std::vector<Prediction> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open predictions file: " + path);
  std::vector<Prediction> preds;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Prediction p;
    int label = 0;
    int fields = 0;
    const char* ptr = line.data();
    const char* end = line.data() + line.size();
    const auto next_tab = [&]() -> const char* {
      const char* t = ptr;
      while (t < end && *t != '\t') ++t;
      return t;
    };
    const char* t1 = next_tab();
    auto r1 = std::from_chars(ptr, t1, p.review_id);
    fields += (r1.ec == std::errc() && t1 < end);
    ptr = t1 + 1;
    const char* t2 = next_tab();
    auto r2 = std::from_chars(ptr, t2, p.sentence_index);
    fields += (r2.ec == std::errc() && t2 < end);
    ptr = t2 + 1;
    const char* t3 = next_tab();
    auto r3 = std::from_chars(ptr, t3, label);
    fields += (r3.ec == std::errc() && t3 < end);
    ptr = t3 + 1;
    auto r4 = std::from_chars(ptr, end, p.score);
    fields += (r4.ec == std::errc());
    if (fields != 4 || (label != 0 && label != 1) ||
        !std::isfinite(p.score) || p.score < 0.0 || p.score > 1.0) {
      throw ParseError(path, line_no, "bad prediction row");
    }
    p.label = label == 1 ? Polarity::Positive : Polarity::Negative;
    preds.push_back(p);
  }
  return preds;
}

void write_histogram_csv(std::ostream& os, const Histogram& hist) {
  os << "bin_lo,bin_hi,neg_count,pos_count\n";
  char lo[32], hi[32];
  for (std::size_t i = 0; i < Histogram::kBins; ++i) {
    std::snprintf(lo, sizeof(lo), "%.2f", hist.bin_edges[i]);
    std::snprintf(hi, sizeof(hi), "%.2f", hist.bin_edges[i + 1]);
    os << lo << ',' << hi << ',' << hist.counts_neg[i] << ','
       << hist.counts_pos[i] << '\n';
  }
}

}  // namespace segtr
