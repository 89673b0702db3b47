#pragma once

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>
#include <unicode/utypes.h>

#include <string>
#include <string_view>
#include <vector>

#include "prodmatch/core/error.hpp"

namespace prodmatch {

namespace detail {

inline bool is_space_cp(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f' ||
         c == 0x85 || c == 0xA0 || c == 0x1680 || (c >= 0x2000 && c <= 0x200A) ||
         c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

/// NFKC followed by full case folding (ICU's NFKC_Casefold mapping).
inline std::string nfkc_casefold(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFKCCasefoldInstance(status);
  if (U_FAILURE(status)) throw Error(std::string("ICU normalizer unavailable: ") + u_errorName(status));
  const auto src = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  icu::UnicodeString dst = norm->normalize(src, status);
  if (U_FAILURE(status)) throw Error(std::string("unicode normalization failed: ") + u_errorName(status));
  std::string out;
  dst.toUTF8String(out);
  return out;
}

}  // namespace detail

/// Decode UTF-8 into code points. Invalid sequences become U+FFFD.
inline std::u32string to_code_points(std::string_view utf8) {
  const auto s = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  std::u32string out;
  out.reserve(static_cast<std::size_t>(s.length()));
  for (int32_t i = 0; i < s.length();) {
    const UChar32 c = s.char32At(i);
    out.push_back(static_cast<char32_t>(c));
    i = s.moveIndex32(i, 1);
  }
  return out;
}

/// Collapse runs of Unicode whitespace to one ASCII space and trim both ends.
inline std::string collapse_whitespace(std::string_view utf8) {
  const std::u32string cps = to_code_points(utf8);
  icu::UnicodeString out;
  bool pending_space = false;
  for (char32_t c : cps) {
    if (detail::is_space_cp(c)) {
      pending_space = !out.isEmpty();
      continue;
    }
    if (pending_space) out.append(static_cast<UChar32>(U' '));
    pending_space = false;
    out.append(static_cast<UChar32>(c));
  }
  std::string s;
  out.toUTF8String(s);
  return s;
}

/// Normalized single-field text: NFKC + case fold + whitespace collapse.
inline std::string normalize_field(std::string_view raw) {
  return collapse_whitespace(detail::nfkc_casefold(raw));
}

/// Text feature of an offer: normalized brand, one space, normalized title.
/// Empty segments vanish, so ("", "") yields "".
inline std::string normalize_text(std::string_view brand_raw, std::string_view title_raw) {
  std::string joined = detail::nfkc_casefold(brand_raw);
  joined.push_back(' ');
  joined += detail::nfkc_casefold(title_raw);
  return collapse_whitespace(joined);
}

}  // namespace prodmatch
