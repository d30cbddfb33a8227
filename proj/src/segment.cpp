#include "segtr/segment.hpp"

#include "segtr/errors.hpp"
#include "segtr/syllable.hpp"
#include "segtr/text.hpp"

namespace segtr {

std::string method_name(SegmentationMethod method) {
  switch (method) {
    case SegmentationMethod::WordToken:
      return "word-token";
    case SegmentationMethod::Lemma:
      return "lemma";
    case SegmentationMethod::LemmaSuffix:
      return "lemma-suffix";
    case SegmentationMethod::LemmaSuffixMeta:
      return "lemma-suffix-meta";
    case SegmentationMethod::Stem:
      return "stem";
    case SegmentationMethod::StemSuffix:
      return "stem-suffix";
    case SegmentationMethod::StemSuffixMeta:
      return "stem-suffix-meta";
    case SegmentationMethod::TokenMeta:
      return "token-meta";
    case SegmentationMethod::Character:
      return "character";
    case SegmentationMethod::Syllable:
      return "syllable";
    case SegmentationMethod::Bpe1k:
      return "bpe-1k";
    case SegmentationMethod::Bpe5k:
      return "bpe-5k";
    case SegmentationMethod::Bpe30k:
      return "bpe-30k";
    case SegmentationMethod::Hybrid:
      return "hybrid";
  }
  return "?";
}

std::optional<SegmentationMethod> parse_method(std::string_view name) {
  for (SegmentationMethod m : kAllMethods) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

bool method_needs_dictionary(SegmentationMethod method) {
  switch (method) {
    case SegmentationMethod::Lemma:
    case SegmentationMethod::LemmaSuffix:
    case SegmentationMethod::LemmaSuffixMeta:
    case SegmentationMethod::Stem:
    case SegmentationMethod::StemSuffix:
    case SegmentationMethod::StemSuffixMeta:
    case SegmentationMethod::TokenMeta:
    case SegmentationMethod::Hybrid:
      return true;
    default:
      return false;
  }
}

bool method_is_bpe(SegmentationMethod method) {
  return method == SegmentationMethod::Bpe1k ||
         method == SegmentationMethod::Bpe5k ||
         method == SegmentationMethod::Bpe30k;
}

std::size_t bpe_default_limit(SegmentationMethod method) {
  switch (method) {
    case SegmentationMethod::Bpe1k:
      return 1000;
    case SegmentationMethod::Bpe5k:
      return 5000;
    case SegmentationMethod::Bpe30k:
      return 30000;
    default:
      throw ConfigError(method_name(method) + " is not a BPE method");
  }
}

std::vector<std::string> tokenize_words(std::string_view text) {
  const auto cps = decode_utf8(text);
  std::vector<std::string> out;
  std::string cur;
  const auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  };
  for (Codepoint raw : cps) {
    const Codepoint cp = to_lower_turkish(raw);
    if (is_space_cp(cp)) {
      flush();
    } else if (is_punct_cp(cp)) {
      flush();
      std::string p;
      append_utf8(p, cp);
      out.push_back(std::move(p));
    } else {
      append_utf8(cur, cp);
    }
  }
  flush();
  return out;
}

std::vector<std::string> segment_characters(
    const std::vector<std::string>& words) {
  std::vector<std::string> out;
  for (const auto& word : words) {
    auto graphemes = split_graphemes(word);
    out.insert(out.end(), std::make_move_iterator(graphemes.begin()),
               std::make_move_iterator(graphemes.end()));
  }
  return out;
}

const BpeModel* SegmenterDeps::bpe_model(SegmentationMethod method) const {
  switch (method) {
    case SegmentationMethod::Bpe1k:
      return bpe1k;
    case SegmentationMethod::Bpe5k:
      return bpe5k;
    case SegmentationMethod::Bpe30k:
      return bpe30k;
    default:
      return nullptr;
  }
}

namespace {

MorphVariant variant_of(SegmentationMethod method) {
  switch (method) {
    case SegmentationMethod::Lemma:
      return MorphVariant::Lemma;
    case SegmentationMethod::LemmaSuffix:
      return MorphVariant::LemmaSuffix;
    case SegmentationMethod::LemmaSuffixMeta:
      return MorphVariant::LemmaSuffixMeta;
    case SegmentationMethod::Stem:
      return MorphVariant::Stem;
    case SegmentationMethod::StemSuffix:
      return MorphVariant::StemSuffix;
    case SegmentationMethod::StemSuffixMeta:
      return MorphVariant::StemSuffixMeta;
    default:
      return MorphVariant::TokenMeta;
  }
}

}  // namespace

std::vector<std::string> segment(SegmentationMethod method,
                                 std::string_view text,
                                 const SegmenterDeps& deps) {
  const auto words = tokenize_words(text);
  if (method_needs_dictionary(method) && deps.dict == nullptr) {
    throw ConfigError("method " + method_name(method) +
                      " requires a morph dictionary (--dict)");
  }
  switch (method) {
    case SegmentationMethod::WordToken:
      return words;
    case SegmentationMethod::Character:
      return segment_characters(words);
    case SegmentationMethod::Syllable: {
      std::vector<std::string> out;
      for (const auto& word : words) {
        auto sylls = syllabify_word(word);
        out.insert(out.end(), std::make_move_iterator(sylls.begin()),
                   std::make_move_iterator(sylls.end()));
      }
      return out;
    }
    case SegmentationMethod::Bpe1k:
    case SegmentationMethod::Bpe5k:
    case SegmentationMethod::Bpe30k: {
      const BpeModel* model = deps.bpe_model(method);
      if (model == nullptr) {
        throw ConfigError("method " + method_name(method) +
                          " requires a trained BPE model (--bpe)");
      }
      std::vector<std::string> out;
      for (auto& tok : bpe_encode(*model, words, deps.on_residue)) {
        out.push_back(std::move(tok.text));
      }
      return out;
    }
    case SegmentationMethod::Hybrid: {
      std::vector<std::string> out;
      for (const auto& word : words) {
        if (deps.dict->lookup(word).known) {
          out.push_back(word);
        } else {
          for (auto& g : split_graphemes(word)) out.push_back(std::move(g));
        }
      }
      return out;
    }
    default:
      return segment_morph(*deps.dict, variant_of(method), words);
  }
}

}  // namespace segtr
