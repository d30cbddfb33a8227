#include "segtr/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <unordered_set>

#include "segtr/errors.hpp"
#include "segtr/rng.hpp"
#include "segtr/text.hpp"

namespace segtr {

void SplitSpec::validate() const {
  if (train_ratio <= 0 || val_ratio <= 0 || test_ratio <= 0) {
    throw ConfigError("split ratios must be positive");
  }
  if (std::fabs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
}

std::optional<Polarity> map_rating_to_polarity(double rating,
                                               RatingScheme scheme) {
  if (scheme == RatingScheme::MovieReviews) {
    const double doubled = rating * 2.0;
    if (rating < 0.5 || rating > 5.0 ||
        std::fabs(doubled - std::round(doubled)) > 1e-9) {
      throw InputError("movie rating must be 0.5..5.0 in half steps, got " +
                       std::to_string(rating));
    }
    if (rating <= 2.0) return Polarity::Negative;
    if (rating <= 3.5) return std::nullopt;  // neutral band
    return Polarity::Positive;
  }
  if (rating < 1 || rating > 5 ||
      std::fabs(rating - std::round(rating)) > 1e-9) {
    throw InputError("product rating must be an integer 1..5, got " +
                     std::to_string(rating));
  }
  return rating <= 3 ? Polarity::Negative : Polarity::Positive;
}

namespace {

bool is_terminator(Codepoint cp) {
  return cp == U'.' || cp == U'!' || cp == U'?' || cp == U'…';
}

}  // namespace

std::vector<SentenceRecord> split_sentences(const Review& review) {
  const std::string normalized = normalize_ws(review.text);
  const auto cps = decode_utf8(normalized);
  std::vector<SentenceRecord> out;
  std::size_t start = 0;
  std::size_t i = 0;
  const auto emit = [&](std::size_t end) {
    while (start < end && is_space_cp(cps[start])) ++start;
    if (start >= end) return;
    SentenceRecord rec;
    rec.review_id = review.id;
    rec.index = static_cast<int>(out.size());
    rec.text = encode_utf8(
        std::span<const Codepoint>(cps.data() + start, end - start));
    rec.label = review.label;
    out.push_back(std::move(rec));
    start = end;
  };
  while (i < cps.size()) {
    if (!is_terminator(cps[i])) {
      ++i;
      continue;
    }
    // A dot inside a decimal number does not end the sentence.
    if (cps[i] == U'.' && i > 0 && i + 1 < cps.size() &&
        is_digit_cp(cps[i - 1]) && is_digit_cp(cps[i + 1])) {
      ++i;
      continue;
    }
    // Consecutive terminators ("!?", "...") stay with the sentence.
    while (i + 1 < cps.size() && is_terminator(cps[i + 1])) ++i;
    ++i;
    if (i >= cps.size() || is_space_cp(cps[i])) emit(i);
  }
  emit(cps.size());
  return out;
}

std::size_t word_count(std::string_view text) {
  return split_ws(text).size();
}

std::size_t nearest_rank_cutoff(std::vector<std::size_t> lengths,
                                double percentile) {
  if (lengths.empty()) return 0;
  std::sort(lengths.begin(), lengths.end());
  const double n = static_cast<double>(lengths.size());
  std::size_t rank = static_cast<std::size_t>(std::ceil(percentile * n));
  rank = std::clamp<std::size_t>(rank, 1, lengths.size());
  return lengths[rank - 1];
}

std::vector<SentenceRecord> break_long_sentences(
    const std::vector<SentenceRecord>& sentences, double percentile) {
  if (sentences.empty()) return {};
  std::vector<std::size_t> lengths;
  lengths.reserve(sentences.size());
  for (const auto& s : sentences) lengths.push_back(word_count(s.text));
  const std::size_t cutoff =
      std::max<std::size_t>(1, nearest_rank_cutoff(lengths, percentile));

  std::vector<SentenceRecord> out;
  out.reserve(sentences.size());
  std::map<std::int64_t, int> next_index;
  for (std::size_t k = 0; k < sentences.size(); ++k) {
    const auto& s = sentences[k];
    int& idx = next_index.try_emplace(s.review_id, 0).first->second;
    if (lengths[k] <= cutoff) {
      SentenceRecord rec = s;
      rec.index = idx++;
      out.push_back(std::move(rec));
      continue;
    }
    const auto words = split_ws(s.text);
    for (std::size_t w = 0; w < words.size(); w += cutoff) {
      const std::size_t n = std::min(cutoff, words.size() - w);
      SentenceRecord rec;
      rec.review_id = s.review_id;
      rec.index = idx++;
      rec.text = join({words.data() + w, n}, " ");
      rec.label = s.label;
      out.push_back(std::move(rec));
    }
  }
  return out;
}

DatasetStats compute_stats(const std::vector<Review>& reviews) {
  DatasetStats stats;
  std::unordered_set<std::string> vocab;
  std::size_t total_words = 0;
  std::size_t total_sentences = 0;
  for (const auto& review : reviews) {
    const auto words = split_ws(review.text);
    stats.max_review_size = std::max(stats.max_review_size, words.size());
    vocab.insert(words.begin(), words.end());
    for (const auto& sentence : split_sentences(review)) {
      total_words += word_count(sentence.text);
      ++total_sentences;
    }
  }
  stats.vocab_size = vocab.size();
  if (total_sentences > 0) {
    stats.avg_sentence_length =
        static_cast<double>(total_words) / static_cast<double>(total_sentences);
  }
  return stats;
}

SplitResult split_dataset(const std::vector<Review>& reviews,
                          const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = reviews.size();
  if (n < 3) {
    throw InputError("need at least 3 reviews to split, got " +
                     std::to_string(n));
  }
  const std::size_t n_val =
      static_cast<std::size_t>(std::floor(spec.val_ratio * n));
  const std::size_t n_test =
      static_cast<std::size_t>(std::floor(spec.test_ratio * n));
  const std::size_t n_train = n - n_val - n_test;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(spec.seed);
  rng.shuffle(order);

  SplitResult result;
  result.train.reserve(n_train);
  result.val.reserve(n_val);
  result.test.reserve(n_test);
  for (std::size_t i = 0; i < n; ++i) {
    const Review& r = reviews[order[i]];
    if (i < n_train) {
      result.train.push_back(r);
    } else if (i < n_train + n_val) {
      result.val.push_back(r);
    } else {
      result.test.push_back(r);
    }
  }
  return result;
}

namespace {

std::string render_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

CorpusLoadResult load_corpus(const std::string& path,
                             std::optional<RatingScheme> scheme,
                             bool lenient) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus file: " + path);

  CorpusLoadResult result;
  std::string line;
  long line_no = 0;
  const auto fail = [&](const std::string& msg) {
    if (!lenient) throw ParseError(path, line_no, msg);
    result.skipped.push_back(std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      fail("expected label<TAB>text");
      continue;
    }
    const std::string label_field = line.substr(0, tab);
    const std::string text = line.substr(tab + 1);
    if (normalize_ws(text).empty()) {
      fail("empty review text");
      continue;
    }

    std::optional<Polarity> label;
    if (label_field == "0") {
      label = Polarity::Negative;
    } else if (label_field == "1") {
      label = Polarity::Positive;
    } else if (label_field.rfind("r:", 0) == 0) {
      if (!scheme) {
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": rating label needs --scheme");
      }
      double rating = 0;
      const char* first = label_field.data() + 2;
      const char* last = label_field.data() + label_field.size();
      const auto res = std::from_chars(first, last, rating);
      if (res.ec != std::errc() || res.ptr != last) {
        fail("bad rating: " + label_field);
        continue;
      }
      try {
        label = map_rating_to_polarity(rating, *scheme);
      } catch (const InputError& e) {
        fail(e.what());
        continue;
      }
      if (!label) {
        ++result.excluded_neutral;
        continue;
      }
    } else {
      fail("bad label: " + label_field);
      continue;
    }

    Review review;
    review.id = static_cast<std::int64_t>(result.reviews.size());
    review.label = *label;
    review.text = text;
    result.reviews.push_back(std::move(review));
  }
  return result;
}

void write_corpus(std::ostream& os, const std::vector<Review>& reviews) {
  for (const auto& r : reviews) {
    os << static_cast<int>(r.label) << '\t' << r.text << '\n';
  }
}

std::string format_stats(const DatasetStats& stats, bool csv) {
  if (csv) {
    return std::to_string(stats.vocab_size) + "," +
           render_double(stats.avg_sentence_length) + "," +
           std::to_string(stats.max_review_size) + "\n";
  }
  return "vocab_size\t" + std::to_string(stats.vocab_size) +
         "\navg_sentence_length\t" + render_double(stats.avg_sentence_length) +
         "\nmax_review_size\t" + std::to_string(stats.max_review_size) + "\n";
}

}  // namespace segtr
