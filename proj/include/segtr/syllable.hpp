#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "segtr/text.hpp"

namespace segtr {

// Turkish letter classes used by the syllabifier.
bool is_turkish_vowel(Codepoint cp);
bool is_turkish_consonant(Codepoint cp);

// Rule-based Turkish syllabification. Every syllable carries exactly one
// vowel; a single consonant before a vowel starts that vowel's syllable,
// longer clusters leave their last consonant to the next syllable and keep
// the rest as coda. Leading/trailing consonants attach to the first/last
// syllable. Tokens containing anything outside the Turkish letter sets (or
// no vowel at all) pass through whole.
std::vector<std::string> syllabify_word(std::string_view word);

// Matched pattern of one syllable: a regular form (V, VC, CV, CVC, VCC,
// CCV, CVCC, CCVC), an irregular cluster form (C{C+}V, C{C+}VC, VC{C+},
// CVC{C+}, C{C+}VC{C+}), or "pass" for pass-through tokens.
std::string syllable_form(std::string_view syllable);

}  // namespace segtr
