#include "segtr/bpe.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "segtr/errors.hpp"
#include "segtr/text.hpp"

namespace segtr {

namespace {

using TokenSeq = std::vector<std::string>;
using Pair = std::pair<std::string, std::string>;

// One left-to-right pass replacing non-overlapping (left, right) pairs.
TokenSeq apply_merge(const TokenSeq& seq, const Pair& merge,
                     const std::string& product) {
  TokenSeq out;
  out.reserve(seq.size());
  std::size_t i = 0;
  while (i < seq.size()) {
    if (i + 1 < seq.size() && seq[i] == merge.first &&
        seq[i + 1] == merge.second) {
      out.push_back(product);
      i += 2;
    } else {
      out.push_back(seq[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace

BpeModel bpe_train(const std::vector<std::string>& word_tokens,
                   std::size_t vocab_limit) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& w : word_tokens) ++counts[w];
  return bpe_train(counts, vocab_limit);
}

BpeModel bpe_train(const std::unordered_map<std::string, std::size_t>& counts,
                   std::size_t vocab_limit) {
  if (counts.empty()) throw InputError("bpe_train: empty corpus");

  BpeModel model;
  model.vocab_limit = vocab_limit;

  struct Word {
    TokenSeq seq;
    std::size_t count;
  };
  std::vector<Word> words;
  words.reserve(counts.size());
  for (const auto& [w, c] : counts) {
    words.push_back({split_graphemes(w), c});
  }
  for (const auto& w : words) {
    for (const auto& g : w.seq) model.tokens.insert(g);
  }
  if (model.tokens.size() > vocab_limit) {
    throw ConfigError("bpe vocab limit " + std::to_string(vocab_limit) +
                      " is below the distinct character count " +
                      std::to_string(model.tokens.size()));
  }

  while (true) {
    std::map<Pair, std::size_t> pair_counts;
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.seq.size(); ++i) {
        pair_counts[{w.seq[i], w.seq[i + 1]}] += w.count;
      }
    }

    // Highest count wins; the map's (left, right) ordering makes ties
    // resolve to the lexicographically smallest pair.
    const Pair* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [pair, count] : pair_counts) {
      if (count >= 2 && count > best_count) {
        best = &pair;
        best_count = count;
      }
    }
    if (best == nullptr) break;

    const std::string product = best->first + best->second;
    const bool is_new = model.tokens.count(product) == 0;
    if (is_new && model.tokens.size() + 1 > vocab_limit) break;

    model.merges.push_back(*best);
    model.tokens.insert(product);
    for (auto& w : words) {
      w.seq = apply_merge(w.seq, model.merges.back(), product);
    }
  }
  return model;
}

std::vector<SubwordToken> bpe_encode(const BpeModel& model,
                                     const std::vector<std::string>& words,
                                     BpeResidue on_residue) {
  std::vector<SubwordToken> out;
  for (std::size_t wi = 0; wi < words.size(); ++wi) {
    TokenSeq seq = split_graphemes(words[wi]);
    for (const auto& merge : model.merges) {
      if (seq.size() < 2) break;
      seq = apply_merge(seq, merge, merge.first + merge.second);
    }
    for (auto& tok : seq) {
      if (model.tokens.count(tok) > 0) {
        out.push_back({std::move(tok), wi});
      } else if (on_residue == BpeResidue::Unk) {
        out.push_back({kBpeResidueToken, wi});
      }
      // Discard: residue characters are dropped.
    }
  }
  return out;
}

void save_bpe_model(const BpeModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write merges file: " + path);

  std::vector<std::string> alphabet;
  for (const auto& tok : model.tokens) {
    if (split_graphemes(tok).size() == 1) alphabet.push_back(tok);
  }
  std::sort(alphabet.begin(), alphabet.end());

  out << "#bpe v1 limit=" << model.vocab_limit << '\n';
  out << "#alphabet";
  for (const auto& c : alphabet) out << ' ' << c;
  out << '\n';
  for (const auto& [l, r] : model.merges) out << l << ' ' << r << '\n';
  if (!out) throw ConfigError("failed writing merges file: " + path);
}

BpeModel load_bpe_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open merges file: " + path);

  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw ParseError(path, 1, "empty merges file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();

  BpeModel model;
  std::size_t limit = 0;
  const std::string prefix = "#bpe v1 limit=";
  if (line.rfind(prefix, 0) != 0) {
    throw ParseError(path, 1, "expected header '#bpe v1 limit=<N>'");
  }
  const char* first = line.data() + prefix.size();
  const char* last = line.data() + line.size();
  const auto res = std::from_chars(first, last, limit);
  if (res.ec != std::errc() || res.ptr != last || limit == 0) {
    throw ParseError(path, 1, "bad vocab limit in header");
  }
  model.vocab_limit = limit;

  bool saw_alphabet = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("#alphabet", 0) == 0) {
      saw_alphabet = true;
      for (const auto& c : split_ws(line.substr(9))) model.tokens.insert(c);
      continue;
    }
    const auto space = line.find(' ');
    if (space == std::string::npos || space == 0 || space + 1 >= line.size()) {
      throw ParseError(path, line_no, "expected 'left right' merge pair");
    }
    std::string left = line.substr(0, space);
    std::string right = line.substr(space + 1);
    if (right.find(' ') != std::string::npos) {
      throw ParseError(path, line_no, "merge line has extra fields");
    }
    model.tokens.insert(left + right);
    model.merges.emplace_back(std::move(left), std::move(right));
  }
  if (!saw_alphabet) {
    // Fall back to the characters mentioned by the merges themselves.
    for (const auto& [l, r] : model.merges) {
      for (const auto& c : split_graphemes(l)) model.tokens.insert(c);
      for (const auto& c : split_graphemes(r)) model.tokens.insert(c);
    }
  }
  if (model.tokens.size() > model.vocab_limit) {
    throw ParseError(path, line_no, "token set exceeds the declared limit");
  }
  return model;
}

}  // namespace segtr
