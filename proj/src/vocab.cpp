#include "segtr/vocab.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "segtr/errors.hpp"

namespace segtr {

int Vocabulary::id_of(const std::string& token) const {
  const auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw InputError("token id out of range: " + std::to_string(id));
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::size_t Vocabulary::frequency_of(const std::string& token) const {
  const auto it = frequencies_.find(token);
  return it == frequencies_.end() ? 0 : it->second;
}

bool Vocabulary::contains(const std::string& token) const {
  return token_to_id_.count(token) > 0;
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& corpus,
                            int min_frequency) {
  Vocabulary vocab;
  vocab.min_frequency_ = min_frequency;
  vocab.id_to_token_ = {kPadToken, kUnkToken};
  vocab.token_to_id_[kPadToken] = Vocabulary::kPadId;
  vocab.token_to_id_[kUnkToken] = Vocabulary::kUnkId;

  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& tokens : corpus) {
    for (const auto& tok : tokens) ++counts[tok];
  }

  std::vector<std::pair<std::string, std::size_t>> kept;
  kept.reserve(counts.size());
  for (const auto& [tok, count] : counts) {
    if (count >= static_cast<std::size_t>(min_frequency) &&
        tok != kPadToken && tok != kUnkToken) {
      kept.emplace_back(tok, count);
    }
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (auto& [tok, count] : kept) {
    vocab.token_to_id_[tok] = static_cast<int>(vocab.id_to_token_.size());
    vocab.frequencies_[tok] = count;
    vocab.id_to_token_.push_back(std::move(tok));
  }
  return vocab;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write vocab file: " + path);
  out << "#vocab v1 min_freq=" << min_frequency_ << '\n';
  for (std::size_t id = 0; id < id_to_token_.size(); ++id) {
    out << id_to_token_[id] << '\t' << id << '\t'
        << frequency_of(id_to_token_[id]) << '\n';
  }
  if (!out) throw ConfigError("failed writing vocab file: " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open vocab file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path, 1, "empty vocab file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::string prefix = "#vocab v1 min_freq=";
  if (line.rfind(prefix, 0) != 0) {
    throw ParseError(path, 1, "expected header '#vocab v1 min_freq=<k>'");
  }
  Vocabulary vocab;
  {
    const char* first = line.data() + prefix.size();
    const char* last = line.data() + line.size();
    const auto res = std::from_chars(first, last, vocab.min_frequency_);
    if (res.ec != std::errc() || res.ptr != last) {
      throw ParseError(path, 1, "bad min_freq in header");
    }
  }

  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw ParseError(path, line_no, "expected token<TAB>id<TAB>frequency");
    }
    const std::string token = line.substr(0, t1);
    int id = 0;
    std::size_t freq = 0;
    const auto idr =
        std::from_chars(line.data() + t1 + 1, line.data() + t2, id);
    const auto fqr = std::from_chars(line.data() + t2 + 1,
                                     line.data() + line.size(), freq);
    if (idr.ec != std::errc() || idr.ptr != line.data() + t2 ||
        fqr.ec != std::errc() || fqr.ptr != line.data() + line.size()) {
      throw ParseError(path, line_no, "bad id or frequency");
    }
    if (id != static_cast<int>(vocab.id_to_token_.size())) {
      throw ParseError(path, line_no, "ids must be contiguous from 0");
    }
    vocab.token_to_id_[token] = id;
    if (freq > 0) vocab.frequencies_[token] = freq;
    vocab.id_to_token_.push_back(token);
  }
  if (vocab.id_to_token_.size() < 2 || vocab.id_to_token_[0] != kPadToken ||
      vocab.id_to_token_[1] != kUnkToken) {
    throw ParseError(path, line_no, "vocab must start with PAD and UNK");
  }
  return vocab;
}

EncodedSequence encode(const Vocabulary& vocab,
                       const std::vector<std::string>& tokens,
                       std::size_t max_length) {
  if (max_length < 1) throw InputError("encode: max_length must be >= 1");
  EncodedSequence seq;
  seq.true_length = std::min(tokens.size(), max_length);
  seq.ids.resize(max_length, Vocabulary::kPadId);
  for (std::size_t i = 0; i < seq.true_length; ++i) {
    seq.ids[i] = vocab.id_of(tokens[i]);
  }
  return seq;
}

std::vector<std::string> decode(const Vocabulary& vocab,
                                const EncodedSequence& seq) {
  std::vector<std::string> out;
  out.reserve(seq.true_length);
  for (std::size_t i = 0; i < seq.true_length; ++i) {
    out.push_back(vocab.token_of(seq.ids[i]));
  }
  return out;
}

}  // namespace segtr
