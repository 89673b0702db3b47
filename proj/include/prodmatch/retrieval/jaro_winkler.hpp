#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "prodmatch/domain/text.hpp"

namespace prodmatch {

/// Jaro similarity over code points.
inline double jaro(std::u32string_view a, std::u32string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  const std::size_t window = std::max<std::size_t>(std::max(a.size(), b.size()) / 2, 1) - 1;
  std::vector<char> a_match(a.size(), 0), b_match(b.size(), 0);
  std::size_t matches = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::size_t lo = i > window ? i - window : 0;
    const std::size_t hi = std::min(b.size(), i + window + 1);
    for (std::size_t j = lo; j < hi; ++j) {
      if (b_match[j] || a[i] != b[j]) continue;
      a_match[i] = b_match[j] = 1;
      ++matches;
      break;
    }
  }
  if (matches == 0) return 0.0;
  std::size_t transpositions = 0;
  for (std::size_t i = 0, j = 0; i < a.size(); ++i) {
    if (!a_match[i]) continue;
    while (!b_match[j]) ++j;
    if (a[i] != b[j]) ++transpositions;
    ++j;
  }
  const double m = static_cast<double>(matches);
  return (m / static_cast<double>(a.size()) + m / static_cast<double>(b.size()) +
          (m - static_cast<double>(transpositions) / 2.0) / m) /
         3.0;
}

/// Jaro-Winkler: prefix bonus 0.1 per shared leading code point (at most 4),
/// applied when the Jaro score exceeds 0.7.
inline double jaro_winkler(std::u32string_view a, std::u32string_view b) {
  const double j = jaro(a, b);
  if (j <= 0.7) return j;
  std::size_t prefix = 0;
  const std::size_t limit = std::min<std::size_t>({4, a.size(), b.size()});
  while (prefix < limit && a[prefix] == b[prefix]) ++prefix;
  return j + 0.1 * static_cast<double>(prefix) * (1.0 - j);
}

inline double jaro_winkler(std::string_view utf8_a, std::string_view utf8_b) {
  return jaro_winkler(to_code_points(utf8_a), to_code_points(utf8_b));
}

}  // namespace prodmatch
