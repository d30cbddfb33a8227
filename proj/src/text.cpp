#include "segtr/text.hpp"

namespace segtr {

std::vector<Codepoint> decode_utf8(std::string_view s) {
  std::vector<Codepoint> out;
  out.reserve(s.size());
  std::size_t i = 0;
  const auto byte = [&](std::size_t k) {
    return static_cast<unsigned char>(s[k]);
  };
  while (i < s.size()) {
    const unsigned char b0 = byte(i);
    std::size_t len = 0;
    Codepoint cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      if ((byte(i + k) & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (byte(i + k) & 0x3F);
    }
    if (!ok || cp > 0x10FFFF) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

void append_utf8(std::string& out, Codepoint cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode_utf8(std::span<const Codepoint> cps) {
  std::string out;
  out.reserve(cps.size());
  for (Codepoint cp : cps) append_utf8(out, cp);
  return out;
}

Codepoint to_lower_turkish(Codepoint cp) {
  switch (cp) {
    case U'I':
      return U'ı';  // ı
    case U'İ':      // İ
      return U'i';
    case U'Ç':
      return U'ç';
    case U'Ğ':
      return U'ğ';
    case U'Ö':
      return U'ö';
    case U'Ş':
      return U'ş';
    case U'Ü':
      return U'ü';
    case U'Â':
      return U'â';
    case U'Î':
      return U'î';
    case U'Û':
      return U'û';
    default:
      if (cp >= U'A' && cp <= U'Z') return cp + 32;
      if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
      return cp;
  }
}

std::string lower_turkish(std::string_view s) {
  const auto cps = decode_utf8(s);
  std::string out;
  out.reserve(s.size());
  for (Codepoint cp : cps) append_utf8(out, to_lower_turkish(cp));
  return out;
}

bool is_space_cp(Codepoint cp) {
  switch (cp) {
    case U' ':
    case U'\t':
    case U'\n':
    case U'\r':
    case U'\f':
    case U'\v':
    case 0x00A0:
    case 0x2028:
    case 0x2029:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_digit_cp(Codepoint cp) { return cp >= U'0' && cp <= U'9'; }

bool is_punct_cp(Codepoint cp) {
  if ((cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
      (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E)) {
    return true;
  }
  switch (cp) {
    case 0xA1:  // ¡
    case 0xA7:  // §
    case 0xAB:  // «
    case 0xB6:  // ¶
    case 0xB7:  // ·
    case 0xBB:  // »
    case 0xBF:  // ¿
      return true;
    default:
      break;
  }
  // General Punctuation block, skipping its space characters.
  if (cp >= 0x2010 && cp <= 0x2027) return true;
  if (cp >= 0x2030 && cp <= 0x205E) return true;
  return false;
}

bool is_combining_cp(Codepoint cp) {
  return (cp >= 0x0300 && cp <= 0x036F) || (cp >= 0x1AB0 && cp <= 0x1AFF) ||
         (cp >= 0x20D0 && cp <= 0x20FF);
}

std::vector<std::string> split_graphemes(std::string_view word) {
  const auto cps = decode_utf8(word);
  std::vector<std::string> out;
  out.reserve(cps.size());
  for (Codepoint cp : cps) {
    if (is_combining_cp(cp) && !out.empty()) {
      append_utf8(out.back(), cp);
    } else {
      std::string g;
      append_utf8(g, cp);
      out.push_back(std::move(g));
    }
  }
  return out;
}

std::string normalize_ws(std::string_view text) {
  const auto cps = decode_utf8(text);
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  bool seen_any = false;
  for (Codepoint cp : cps) {
    if (is_space_cp(cp)) {
      pending_space = seen_any;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    seen_any = true;
    append_utf8(out, cp);
  }
  return out;
}

std::vector<std::string> split_ws(std::string_view text) {
  const auto cps = decode_utf8(text);
  std::vector<std::string> out;
  std::string cur;
  for (Codepoint cp : cps) {
    if (is_space_cp(cp)) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      append_utf8(cur, cp);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string join(std::span<const std::string> parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace segtr
