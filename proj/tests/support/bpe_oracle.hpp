#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "segtr/text.hpp"

namespace segtr_test {

// Brute-force greedy pair merging, kept independent of the library's
// trainer: it works over every word occurrence (no frequency aggregation)
// and recounts pairs from scratch each round via an ordered map.
struct OracleBpe {
  std::vector<std::pair<std::string, std::string>> merges;
  std::set<std::string> tokens;
};

inline OracleBpe oracle_bpe_train(const std::vector<std::string>& words,
                                  std::size_t limit) {
  std::vector<std::vector<std::string>> seqs;
  OracleBpe model;
  for (const auto& w : words) {
    seqs.push_back(segtr::split_graphemes(w));
    for (const auto& g : seqs.back()) model.tokens.insert(g);
  }
  while (true) {
    std::map<std::pair<std::string, std::string>, std::size_t> counts;
    for (const auto& seq : seqs) {
      for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        ++counts[{seq[i], seq[i + 1]}];
      }
    }
    std::pair<std::string, std::string> best;
    std::size_t best_count = 0;
    for (const auto& [pair, count] : counts) {
      if (count >= 2 && count > best_count) {
        best = pair;
        best_count = count;
      }
    }
    if (best_count == 0) break;
    const std::string product = best.first + best.second;
    if (model.tokens.count(product) == 0 &&
        model.tokens.size() + 1 > limit) {
      break;
    }
    model.merges.push_back(best);
    model.tokens.insert(product);
    for (auto& seq : seqs) {
      std::vector<std::string> next;
      std::size_t i = 0;
      while (i < seq.size()) {
        if (i + 1 < seq.size() && seq[i] == best.first &&
            seq[i + 1] == best.second) {
          next.push_back(product);
          i += 2;
        } else {
          next.push_back(seq[i]);
          ++i;
        }
      }
      seq = std::move(next);
    }
  }
  return model;
}

}  // namespace segtr_test
