#pragma once

// Thin ICU wrappers used by tokenization, statistics and tagging.

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "seqeval/errors.hpp"

namespace seqeval::unicode {

using CodePoint = UChar32;

/// Offset of the first byte that does not start a well-formed UTF-8
/// sequence, or nullopt when the whole input is valid.
inline std::optional<std::size_t> first_invalid_utf8(std::string_view s) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    if (p[i] < 0x80) {
      ++i;
      continue;
    }
    // U8_NEXT works on int32_t indices; feed it a bounded window.
    const auto window = static_cast<std::int32_t>(std::min<std::size_t>(n - i, 4));
    std::int32_t j = 0;
    CodePoint c;
    U8_NEXT(p + i, j, window, c);
    if (c < 0) return i;
    i += static_cast<std::size_t>(j);
  }
  return std::nullopt;
}

inline void require_utf8(std::string_view s, std::size_t base_offset = 0) {
  if (auto bad = first_invalid_utf8(s)) {
    throw DecodeError("invalid UTF-8", base_offset + *bad);
  }
}

inline bool is_ascii(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

/// Calls f(code_point, byte_begin, byte_end) for every scalar value.
/// Ill-formed bytes are reported as U+FFFD covering one byte.
template <class F>
void for_each_code_point(std::string_view s, F&& f) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
  const std::size_t n = s.size();
  std::size_t i = 0;
  while (i < n) {
    if (p[i] < 0x80) {
      f(static_cast<CodePoint>(p[i]), i, i + 1);
      ++i;
      continue;
    }
    const auto window = static_cast<std::int32_t>(std::min<std::size_t>(n - i, 4));
    std::int32_t j = 0;
    CodePoint c;
    U8_NEXT(p + i, j, window, c);
    if (c < 0) {
      f(static_cast<CodePoint>(0xFFFD), i, i + 1);
      ++i;
    } else {
      f(c, i, i + static_cast<std::size_t>(j));
      i += static_cast<std::size_t>(j);
    }
  }
}

inline std::size_t code_point_count(std::string_view s) {
  std::size_t count = 0;
  for_each_code_point(s, [&](CodePoint, std::size_t, std::size_t) { ++count; });
  return count;
}

inline bool is_space(CodePoint c) { return u_isUWhiteSpace(c) != 0; }
inline bool is_punct(CodePoint c) { return u_ispunct(c) != 0; }
inline bool is_letter(CodePoint c) { return u_isalpha(c) != 0; }

inline std::string nfc(std::string_view s) {
  if (is_ascii(s)) return std::string(s);
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return std::string(s);
  const auto in = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<std::int32_t>(s.size())));
  if (norm->isNormalized(in, status) && U_SUCCESS(status)) return std::string(s);
  status = U_ZERO_ERROR;
  const icu::UnicodeString out = norm->normalize(in, status);
  if (U_FAILURE(status)) return std::string(s);
  std::string result;
  out.toUTF8String(result);
  return result;
}

inline std::string lowercase(std::string_view s) {
  if (is_ascii(s)) {
    std::string out(s);
    for (auto& ch : out) {
      if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    }
    return out;
  }
  auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<std::int32_t>(s.size())));
  u.toLower(icu::Locale::getRoot());
  std::string out;
  u.toUTF8String(out);
  return out;
}

/// Full case folding, for case-insensitive substring search.
inline std::string fold_case(std::string_view s) {
  if (is_ascii(s)) return lowercase(s);
  auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<std::int32_t>(s.size())));
  u.foldCase();
  std::string out;
  u.toUTF8String(out);
  return out;
}

inline std::string encode(CodePoint c) {
  std::string out;
  icu::UnicodeString(c).toUTF8String(out);
  return out;
}

/// Script of a code point; USCRIPT_COMMON / USCRIPT_INHERITED for digits,
/// punctuation and combining marks.
inline UScriptCode script_of(CodePoint c) {
  UErrorCode status = U_ZERO_ERROR;
  const UScriptCode code = uscript_getScript(c, &status);
  return U_FAILURE(status) ? USCRIPT_INVALID_CODE : code;
}

/// Lowercase long script name, e.g. "latin", "cyrillic", "han".
inline std::string script_name(UScriptCode code) {
  const char* name = uscript_getName(code);
  return name ? lowercase(name) : std::string("unknown");
}

}  // namespace seqeval::unicode
