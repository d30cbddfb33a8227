#include <set>

#include "doctest.h"
#include "segtr/rng.hpp"
#include "segtr/syllable.hpp"
#include "segtr/text.hpp"

using namespace segtr;

namespace {

std::string syllables(const std::string& word) {
  return join(syllabify_word(word), " ");
}

}  // namespace

TEST_CASE("paper examples") {
  CHECK(syllables("elimize") == "e li mi ze");
  CHECK(syllables("bulaşıkları") == "bu la şık la rı");
  CHECK(syllables("!") == "!");
  // Initial cluster joins the onset: single vowel, single syllable.
  CHECK(syllables("trren") == "trren");
  CHECK(syllable_form("trren") == "C{C+}VC");
}

TEST_CASE("full running-example words") {
  CHECK(syllables("film") == "film");
  CHECK(syllables("bastan") == "bas tan");
  CHECK(syllables("sona") == "so na");
  CHECK(syllables("duygu") == "duy gu");
  CHECK(syllables("somurusu") == "so mu ru su");
  CHECK(syllables("ama") == "a ma");
  CHECK(syllables("anlayan") == "an la yan");
  CHECK(syllables("nerde") == "ner de");
  CHECK(syllables("geçen") == "ge çen");
  CHECK(syllables("hafta") == "haf ta");
  CHECK(syllables("ulaştı") == "u laş tı");
  CHECK(syllables("kullanımı") == "kul la nı mı");
  CHECK(syllables("kolay") == "ko lay");
  CHECK(syllables("pırıl") == "pı rıl");
  CHECK(syllables("yıkıyor") == "yı kı yor");
}

TEST_CASE("pass-through tokens") {
  CHECK(syllables("1987") == "1987");
  CHECK(syllables("krk") == "krk");      // vowel-free
  CHECK(syllables("web2") == "web2");    // mixed letters and digits
  CHECK(syllable_form("1987") == "pass");
  CHECK(syllable_form("krk") == "pass");
}

TEST_CASE("form classification") {
  CHECK(syllable_form("e") == "V");
  CHECK(syllable_form("ev") == "VC");
  CHECK(syllable_form("ve") == "CV");
  CHECK(syllable_form("ver") == "CVC");
  CHECK(syllable_form("erk") == "VCC");
  CHECK(syllable_form("bre") == "CCV");
  CHECK(syllable_form("mart") == "CVCC");
  CHECK(syllable_form("tren") == "CCVC");
  CHECK(syllable_form("brre") == "C{C+}V");
  CHECK(syllable_form("üfff") == "VC{C+}");
  CHECK(syllable_form("oturr") == "pass");  // two vowels: not one syllable
  CHECK(syllable_form("turr") == "CVCC");  // coda of two is regular
  CHECK(syllable_form("turrr") == "CVC{C+}");
  CHECK(syllable_form("krrakkk") == "C{C+}VC{C+}");
}

TEST_CASE("properties over random Turkish words") {
  const std::set<std::string> allowed = {
      "V",      "VC",      "CV",      "CVC",        "VCC",
      "CCV",    "CVCC",    "CCVC",    "C{C+}V",     "C{C+}VC",
      "VC{C+}", "CVC{C+}", "C{C+}VC{C+}"};
  const auto letters = split_graphemes("abcçdefgğhıijklmnoöprsştuüvyz");
  Rng rng(771177);
  for (int iter = 0; iter < 500; ++iter) {
    std::string word;
    const std::size_t len = 1 + rng.next_index(12);
    for (std::size_t k = 0; k < len; ++k) {
      word += letters[rng.next_index(letters.size())];
    }
    const auto sylls = syllabify_word(word);
    std::string glued;
    for (const auto& s : sylls) glued += s;
    CHECK(glued == word);

    bool has_vowel = false;
    for (const auto cp : decode_utf8(word)) {
      if (is_turkish_vowel(cp)) has_vowel = true;
    }
    if (!has_vowel) {
      CHECK(sylls.size() == 1);
      continue;
    }
    for (const auto& s : sylls) {
      std::size_t vowels = 0;
      for (const auto cp : decode_utf8(s)) {
        if (is_turkish_vowel(cp)) ++vowels;
      }
      CHECK(vowels == 1);
      CHECK_MESSAGE(allowed.count(syllable_form(s)) == 1, "form of ", s);
    }
  }
}
