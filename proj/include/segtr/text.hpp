#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace segtr {

using Codepoint = char32_t;

// Decodes UTF-8; invalid byte sequences become U+FFFD (one per bad byte).
std::vector<Codepoint> decode_utf8(std::string_view s);
void append_utf8(std::string& out, Codepoint cp);
std::string encode_utf8(std::span<const Codepoint> cps);

// Turkish-aware lowering: 'I' -> 'ı' (dotless), 'İ' -> 'i'. Other Turkish
// capitals and ASCII behave as usual; everything else passes through.
Codepoint to_lower_turkish(Codepoint cp);
std::string lower_turkish(std::string_view s);

bool is_space_cp(Codepoint cp);
bool is_digit_cp(Codepoint cp);
// ASCII punctuation plus the common Latin-1 and General Punctuation marks
// seen in review text (quotes, dashes, ellipsis, guillemets, ...).
bool is_punct_cp(Codepoint cp);
bool is_combining_cp(Codepoint cp);

// Splits a word into grapheme-like units: one codepoint per unit, with
// combining marks glued to the preceding base character.
std::vector<std::string> split_graphemes(std::string_view word);

// Trims and collapses every whitespace run to a single ' '.
std::string normalize_ws(std::string_view text);

// Whitespace-delimited fields of a normalized or raw string.
std::vector<std::string> split_ws(std::string_view text);

std::string join(std::span<const std::string> parts, std::string_view sep);

}  // namespace segtr
