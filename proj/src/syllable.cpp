#include "segtr/syllable.hpp"

#include <array>

namespace segtr {

bool is_turkish_vowel(Codepoint cp) {
  switch (cp) {
    case U'a':
    case U'e':
    case U'ı':  // ı
    case U'i':
    case U'o':
    case U'ö':
    case U'u':
    case U'ü':
      return true;
    default:
      return false;
  }
}

bool is_turkish_consonant(Codepoint cp) {
  switch (cp) {
    case U'b':
    case U'c':
    case U'ç':
    case U'd':
    case U'f':
    case U'g':
    case U'ğ':
    case U'h':
    case U'j':
    case U'k':
    case U'l':
    case U'm':
    case U'n':
    case U'p':
    case U'r':
    case U's':
    case U'ş':
    case U't':
    case U'v':
    case U'y':
    case U'z':
      return true;
    default:
      return false;
  }
}

std::vector<std::string> syllabify_word(std::string_view word) {
  const auto cps = decode_utf8(word);
  std::vector<std::size_t> vowels;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (is_turkish_vowel(cps[i])) {
      vowels.push_back(i);
    } else if (!is_turkish_consonant(cps[i])) {
      return {std::string(word)};  // digits, punctuation, foreign letters
    }
  }
  if (vowels.empty()) return {std::string(word)};

  std::vector<std::string> out;
  out.reserve(vowels.size());
  std::size_t start = 0;
  for (std::size_t j = 0; j + 1 < vowels.size(); ++j) {
    const std::size_t p = vowels[j];
    const std::size_t q = vowels[j + 1];
    // No consonant between the vowels: break right after the first. One or
    // more: the last consonant opens the next syllable.
    const std::size_t cut = (q - p == 1) ? q : q - 1;
    out.push_back(encode_utf8(
        std::span<const Codepoint>(cps.data() + start, cut - start)));
    start = cut;
  }
  out.push_back(encode_utf8(
      std::span<const Codepoint>(cps.data() + start, cps.size() - start)));
  return out;
}

std::string syllable_form(std::string_view syllable) {
  const auto cps = decode_utf8(syllable);
  std::string shape;
  shape.reserve(cps.size());
  for (Codepoint cp : cps) {
    if (is_turkish_vowel(cp)) {
      shape.push_back('V');
    } else if (is_turkish_consonant(cp)) {
      shape.push_back('C');
    } else {
      return "pass";
    }
  }
  static constexpr std::array<const char*, 8> kRegular = {
      "V", "VC", "CV", "CVC", "VCC", "CCV", "CVCC", "CCVC"};
  for (const char* form : kRegular) {
    if (shape == form) return shape;
  }

  const auto vpos = shape.find('V');
  if (vpos == std::string::npos || shape.find('V', vpos + 1) != std::string::npos) {
    return "pass";  // zero or multiple vowels: not a syllable of ours
  }
  const std::size_t onset = vpos;
  const std::size_t coda = shape.size() - vpos - 1;
  if (onset >= 2 && coda == 0) return "C{C+}V";
  if (onset >= 2 && coda == 1) return "C{C+}VC";
  if (onset >= 2 && coda >= 2) return "C{C+}VC{C+}";
  if (onset == 1 && coda >= 2) return "CVC{C+}";
  if (onset == 0 && coda >= 2) return "VC{C+}";
  return "pass";
}

}  // namespace segtr
