#include "segtr/morphdict.hpp"

#include <fstream>

#include "segtr/errors.hpp"
#include "segtr/text.hpp"

namespace segtr {

MorphEntry MorphEntry::unknown(std::string surface) {
  MorphEntry e;
  e.known = false;
  e.lemma = {surface};
  e.lemma_suffix = {surface};
  e.lemma_meta = {"Unk"};
  e.stem = {surface};
  e.stem_suffix = {surface};
  e.stem_meta = {"Unk"};
  e.token_meta = {"Unk"};
  e.surface = std::move(surface);
  return e;
}

const std::vector<std::string>& MorphEntry::view(MorphVariant variant) const {
  switch (variant) {
    case MorphVariant::Lemma:
      return lemma;
    case MorphVariant::LemmaSuffix:
      return lemma_suffix;
    case MorphVariant::LemmaSuffixMeta:
      return lemma_meta;
    case MorphVariant::Stem:
      return stem;
    case MorphVariant::StemSuffix:
      return stem_suffix;
    case MorphVariant::StemSuffixMeta:
      return stem_meta;
    case MorphVariant::TokenMeta:
      return token_meta;
  }
  return token_meta;  // unreachable
}

namespace {

std::vector<std::string> split_columns(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

}  // namespace

MorphDictionary MorphDictionary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open morph dictionary: " + path);

  MorphDictionary dict;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split_columns(line);
    if (cols.size() != 9) {
      throw ParseError(path, line_no,
                       "expected 9 tab-separated columns, got " +
                           std::to_string(cols.size()));
    }
    if (cols[0].empty()) throw ParseError(path, line_no, "empty surface");
    if (cols[1] != "0" && cols[1] != "1") {
      throw ParseError(path, line_no, "known flag must be 0 or 1");
    }

    MorphEntry entry;
    if (cols[1] == "0") {
      // Unknown rows carry no analysis; the synthesized entry fixes the
      // pass-through/Unk values regardless of what the columns contain.
      entry = MorphEntry::unknown(cols[0]);
    } else {
      entry.surface = cols[0];
      entry.known = true;
      entry.lemma = split_ws(cols[2]);
      entry.lemma_suffix = split_ws(cols[3]);
      entry.lemma_meta = split_ws(cols[4]);
      entry.stem = split_ws(cols[5]);
      entry.stem_suffix = split_ws(cols[6]);
      entry.stem_meta = split_ws(cols[7]);
      entry.token_meta = split_ws(cols[8]);
      for (MorphVariant v : kMorphVariants) {
        if (entry.view(v).empty()) {
          throw ParseError(path, line_no,
                           "known entry has an empty token list");
        }
      }
      if (entry.lemma.size() != 1 || entry.stem.size() != 1 ||
          entry.token_meta.size() != 1) {
        throw ParseError(path, line_no,
                         "lemma, stem and token_meta must be single tokens");
      }
      if (entry.lemma_suffix.front() != entry.lemma.front()) {
        throw ParseError(path, line_no,
                         "lemma_suffix must begin with the lemma");
      }
      if (entry.stem_suffix.front() != entry.stem.front()) {
        throw ParseError(path, line_no,
                         "stem_suffix must begin with the stem");
      }
    }
    dict.insert(std::move(entry));
  }
  return dict;
}

void MorphDictionary::insert(MorphEntry entry) {
  const std::string key = lower_turkish(entry.surface);
  auto [it, inserted] = entries_.insert_or_assign(key, std::move(entry));
  (void)it;
  if (!inserted) ++duplicates_;
}

MorphEntry MorphDictionary::lookup(const std::string& surface) const {
  const auto it = entries_.find(lower_turkish(surface));
  if (it == entries_.end()) return MorphEntry::unknown(surface);
  return it->second;
}

bool MorphDictionary::contains(const std::string& surface) const {
  return entries_.count(lower_turkish(surface)) > 0;
}

std::vector<std::string> segment_morph(const MorphDictionary& dict,
                                       MorphVariant variant,
                                       const std::vector<std::string>& words) {
  std::vector<std::string> out;
  out.reserve(words.size());
  for (const auto& word : words) {
    const MorphEntry entry = dict.lookup(word);
    const auto& tokens = entry.view(variant);
    out.insert(out.end(), tokens.begin(), tokens.end());
  }
  return out;
}

}  // namespace segtr
