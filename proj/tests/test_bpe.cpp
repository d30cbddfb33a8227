#include <algorithm>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "segtr/bpe.hpp"
#include "segtr/errors.hpp"
#include "segtr/rng.hpp"
#include "segtr/text.hpp"
#include "support/bpe_oracle.hpp"

using namespace segtr;

namespace {

std::vector<std::string> encode_texts(const BpeModel& model,
                                      const std::vector<std::string>& words,
                                      BpeResidue residue = BpeResidue::Discard) {
  std::vector<std::string> out;
  for (auto& tok : bpe_encode(model, words, residue)) {
    out.push_back(tok.text);
  }
  return out;
}

std::vector<std::string> repeat(const std::string& word, std::size_t n) {
  return std::vector<std::string>(n, word);
}

}  // namespace

TEST_CASE("abab walkthrough") {
  const auto model = bpe_train(repeat("abab", 5), 4);
  REQUIRE(model.merges.size() == 2);
  CHECK(model.merges[0] == std::pair<std::string, std::string>{"a", "b"});
  CHECK(model.merges[1] == std::pair<std::string, std::string>{"ab", "ab"});
  CHECK(model.tokens ==
        std::unordered_set<std::string>{"a", "b", "ab", "abab"});

  CHECK(encode_texts(model, {"ababab"}) ==
        std::vector<std::string>{"abab", "ab"});
}

TEST_CASE("no pair reaches the frequency floor") {
  const auto model = bpe_train({"xyz"}, 3);
  CHECK(model.merges.empty());
  CHECK(model.tokens == std::unordered_set<std::string>{"x", "y", "z"});
  CHECK(encode_texts(model, {"xyz"}) ==
        std::vector<std::string>{"x", "y", "z"});
}

TEST_CASE("limit below the character count is a configuration error") {
  CHECK_THROWS_AS(bpe_train({"abcd"}, 3), ConfigError);
  CHECK_THROWS_AS(bpe_train(std::vector<std::string>{}, 10), InputError);
}

TEST_CASE("residue policies") {
  const auto model = bpe_train(repeat("abab", 5), 4);
  CHECK(encode_texts(model, {"aXb"}) == std::vector<std::string>{"a", "b"});
  CHECK(encode_texts(model, {"aXb"}, BpeResidue::Unk) ==
        std::vector<std::string>{"a", kBpeResidueToken, "b"});
  // The unknown gap keeps its neighbours apart: no merge across it.
  CHECK(encode_texts(model, {"aXb"}) !=
        std::vector<std::string>{"ab"});
  CHECK(encode_texts(model, {"XY"}).empty());

  SUBCASE("word indices track the source word") {
    const auto toks = bpe_encode(model, {"abab", "ab"});
    REQUIRE(toks.size() == 2);
    CHECK(toks[0].word_index == 0);
    CHECK(toks[1].word_index == 1);
  }
}

TEST_CASE("training matches the brute-force oracle") {
  const std::vector<std::vector<std::string>> corpora = {
      repeat("abab", 5),
      {"merhaba", "merhaba", "marhaba", "mereba", "haba"},
      {"aaaa", "aaa", "aa", "aaaa", "baab"},
      {"kedi", "keder", "kedi", "dede", "dedi", "kedi", "dede"},
      {"ğüşiö", "ğüşiö", "ğüş", "şiö", "ğü"},
      {"para", "parapara", "ra", "pa", "rapara", "para"},
  };
  for (std::size_t ci = 0; ci < corpora.size(); ++ci) {
    CAPTURE(ci);
    for (std::size_t limit : {4u, 6u, 8u, 12u, 30u}) {
      CAPTURE(limit);
      std::size_t distinct_chars = 0;
      {
        std::unordered_set<std::string> chars;
        for (const auto& w : corpora[ci]) {
          for (const auto& g : split_graphemes(w)) chars.insert(g);
        }
        distinct_chars = chars.size();
      }
      if (distinct_chars > limit) continue;
      const auto model = bpe_train(corpora[ci], limit);
      const auto oracle = segtr_test::oracle_bpe_train(corpora[ci], limit);
      CHECK(model.merges == oracle.merges);
      CHECK(model.tokens.size() == oracle.tokens.size());
      CHECK(model.tokens.size() <= limit);
      for (const auto& t : oracle.tokens) CHECK(model.tokens.count(t) == 1);
    }
  }
}

TEST_CASE("structural and round-trip properties") {
  Rng rng(515151);
  const std::string alphabet = "abcğü";
  for (int iter = 0; iter < 30; ++iter) {
    std::vector<std::string> corpus;
    const std::size_t n_words = 3 + rng.next_index(20);
    for (std::size_t w = 0; w < n_words; ++w) {
      std::string word;
      const std::size_t len = 1 + rng.next_index(8);
      for (std::size_t k = 0; k < len; ++k) {
        const auto g = split_graphemes(alphabet);
        word += g[rng.next_index(g.size())];
      }
      corpus.push_back(std::move(word));
    }
    const std::size_t limit = 5 + rng.next_index(20);
    BpeModel model;
    try {
      model = bpe_train(corpus, limit);
    } catch (const ConfigError&) {
      continue;  // limit below alphabet size for this draw
    }

    CHECK(model.tokens.size() <= limit);
    // Every multi-character token is the concatenation of its merge pair.
    for (const auto& [l, r] : model.merges) {
      CHECK(model.tokens.count(l + r) == 1);
    }
    for (const auto& tok : model.tokens) {
      if (split_graphemes(tok).size() > 1) {
        const bool from_merge =
            std::any_of(model.merges.begin(), model.merges.end(),
                        [&](const auto& m) {
                          return m.first + m.second == tok;
                        });
        CHECK(from_merge);
      }
    }
    // Covered words reassemble exactly.
    for (const auto& word : corpus) {
      const auto toks = encode_texts(model, {word});
      std::string glued;
      for (const auto& t : toks) glued += t;
      CHECK(glued == word);
    }
    // Determinism.
    const auto second = bpe_train(corpus, limit);
    CHECK(second.merges == model.merges);
  }
}

TEST_CASE("merges file round trip") {
  const auto model = bpe_train(
      {"merhaba", "merhaba", "marhaba", "mereba", "haba", "xykz"}, 14);
  const std::string path = "test_bpe_tmp.merges";
  save_bpe_model(model, path);
  const auto loaded = load_bpe_model(path);
  CHECK(loaded == model);

  // Byte-exact save/load/save.
  save_bpe_model(loaded, path + "2");
  std::ifstream a(path, std::ios::binary), b(path + "2", std::ios::binary);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("#bpe v1 limit=14\n", 0) == 0);

  std::remove(path.c_str());
  std::remove((path + "2").c_str());

  SUBCASE("bad headers are rejected") {
    const std::string bad = "test_bpe_bad.merges";
    std::ofstream(bad, std::ios::binary) << "#nope\n";
    CHECK_THROWS_AS(load_bpe_model(bad), ParseError);
    std::remove(bad.c_str());
  }
}
