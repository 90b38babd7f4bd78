#include "refaudit/matchcore.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace refaudit {

namespace {

std::u32string decode_utf8(std::string_view s, std::vector<std::uint32_t>* byte_offsets = nullptr) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (byte_offsets) byte_offsets->push_back(static_cast<std::uint32_t>(i));
    unsigned char c = static_cast<unsigned char>(s[i]);
    char32_t cp = 0;
    std::size_t len = 1;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6 && i + 1 < s.size()) {
      cp = static_cast<char32_t>((c & 0x1F) << 6 | (s[i + 1] & 0x3F));
      len = 2;
    } else if ((c >> 4) == 0xE && i + 2 < s.size()) {
      cp = static_cast<char32_t>((c & 0x0F) << 12 | (s[i + 1] & 0x3F) << 6 | (s[i + 2] & 0x3F));
      len = 3;
    } else if ((c >> 3) == 0x1E && i + 3 < s.size()) {
      cp = static_cast<char32_t>((c & 0x07) << 18 | (s[i + 1] & 0x3F) << 12 |
                                 (s[i + 2] & 0x3F) << 6 | (s[i + 3] & 0x3F));
      len = 4;
    } else {
      cp = 0xFFFD;  // stray byte
    }
    out.push_back(cp);
    i += len;
  }
  if (byte_offsets) byte_offsets->push_back(static_cast<std::uint32_t>(s.size()));
  return out;
}

const icu::Normalizer2& nfkc_casefold() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFKCCasefoldInstance(status);
  if (U_FAILURE(status) || !n) throw std::runtime_error("ICU NFKC_Casefold unavailable");
  return *n;
}

}  // namespace

std::string normalize(std::string_view text) {
  icu::UnicodeString input = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString folded = nfkc_casefold().normalize(input, status);
  if (U_FAILURE(status)) folded = input;

  std::string collapsed;
  collapsed.reserve(static_cast<std::size_t>(folded.length()));
  icu::UnicodeString run;
  bool pending_space = false;
  bool emitted = false;
  for (int32_t i = 0; i < folded.length();) {
    UChar32 cp = folded.char32At(i);
    i += U16_LENGTH(cp);
    if (u_isUWhiteSpace(cp) || cp == 0x200B) {
      if (emitted) pending_space = true;
      continue;
    }
    if (pending_space) {
      run.append(static_cast<UChar32>(' '));
      pending_space = false;
    }
    run.append(cp);
    emitted = true;
  }
  run.toUTF8String(collapsed);
  return collapsed;
}

namespace {

// Indel distance (substitution = insert + delete): D = |a| + |b| - 2 * LCS.
std::size_t lcs_length(const std::u32string& a, const std::u32string& b) {
  if (a.empty() || b.empty()) return 0;
  const std::u32string& rows = a.size() <= b.size() ? a : b;
  const std::u32string& cols = a.size() <= b.size() ? b : a;
  std::vector<std::uint32_t> prev(cols.size() + 1, 0), cur(cols.size() + 1, 0);
  for (std::size_t i = 1; i <= rows.size(); ++i) {
    for (std::size_t j = 1; j <= cols.size(); ++j) {
      if (rows[i - 1] == cols[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[cols.size()];
}

double score_from(std::size_t dist, std::size_t lensum) {
  if (lensum == 0) return 100.0;  // two empty strings
  return 100.0 * (1.0 - static_cast<double>(dist) / static_cast<double>(lensum));
}

struct Cell {
  std::int64_t value;
  std::int32_t lcs;   // matches in the alignment
  std::int32_t len;   // substring length
};

// One Dinkelbach subproblem: maximize 2*q*LCS(needle, s) - p*len(s) over all
// substrings s of haystack, where p/q is the current best ratio candidate.
// Returns the maximum and a witness (lcs, len, end position).
struct SubproblemResult {
  std::int64_t value = 0;
  std::int32_t lcs = 0;
  std::int32_t len = 0;
  std::size_t end = 0;  // codepoint index one past the substring
};

SubproblemResult best_weighted_substring(const std::u32string& needle,
                                         const std::u32string& haystack, std::int64_t p,
                                         std::int64_t q) {
  const std::size_t n = needle.size(), h = haystack.size();
  std::vector<Cell> prev(h + 1), cur(h + 1);
  for (std::size_t v = 0; v <= h; ++v) prev[v] = {0, 0, 0};

  SubproblemResult best{0, 0, 0, 0};
  const std::int64_t match_gain = 2 * q;
  for (std::size_t u = 1; u <= n; ++u) {
    cur[0] = {0, 0, 0};
    const char32_t nc = needle[u - 1];
    for (std::size_t v = 1; v <= h; ++v) {
      // Skip the needle character (free under LCS).
      Cell c = prev[v];
      // Extend the substring with an unmatched haystack character.
      if (cur[v - 1].value - p > c.value)
        c = {cur[v - 1].value - p, cur[v - 1].lcs, cur[v - 1].len + 1};
      // Match.
      if (nc == haystack[v - 1]) {
        std::int64_t mv = prev[v - 1].value + match_gain - p;
        if (mv > c.value) c = {mv, prev[v - 1].lcs + 1, prev[v - 1].len + 1};
      }
      // Restart with the empty substring ending here.
      if (c.value < 0) c = {0, 0, 0};
      cur[v] = c;
      if (u == n && c.value > best.value) best = {c.value, c.lcs, c.len, v};
    }
    std::swap(prev, cur);
  }
  // best over row u == n is collected above; also consider v = 0 (empty).
  return best;
}

}  // namespace

SimilarityScore ratio(std::string_view a, std::string_view b) {
  std::u32string ua = decode_utf8(a), ub = decode_utf8(b);
  std::size_t lensum = ua.size() + ub.size();
  std::size_t lcs = lcs_length(ua, ub);
  std::size_t dist = lensum - 2 * lcs;
  return SimilarityScore{score_from(dist, lensum)};
}

PartialMatch partial_ratio(std::string_view needle, std::string_view haystack) {
  if (needle.empty()) throw std::invalid_argument("partial_ratio: empty needle");

  std::vector<std::uint32_t> offsets;
  std::u32string un = decode_utf8(needle);
  std::u32string uh = decode_utf8(haystack, &offsets);
  const std::size_t n = un.size();

  auto to_byte_span = [&](std::size_t cp_begin, std::size_t cp_end) {
    return MatchSpan{offsets[cp_begin], offsets[cp_end]};
  };

  if (uh.empty()) {
    return PartialMatch{SimilarityScore{0.0}, MatchSpan{0, 0}};
  }

  // Verbatim containment short-circuits at 100.
  if (n <= uh.size()) {
    auto it = std::search(uh.begin(), uh.end(), un.begin(), un.end());
    if (it != uh.end()) {
      std::size_t at = static_cast<std::size_t>(it - uh.begin());
      return PartialMatch{SimilarityScore{100.0}, to_byte_span(at, at + n)};
    }
  }

  // Dinkelbach iterations over the ratio 2*LCS / (n + len), exact in integers.
  std::int64_t p = 0, q = 1;  // current candidate ratio p/q
  std::int32_t best_lcs = 0, best_len = 0;
  std::size_t best_end = 0;
  while (true) {
    SubproblemResult r = best_weighted_substring(un, uh, p, q);
    std::int64_t at_candidate = r.value - p * static_cast<std::int64_t>(n);
    if (r.lcs == 0 || at_candidate <= 0) break;  // candidate is the maximum
    p = 2 * static_cast<std::int64_t>(r.lcs);
    q = static_cast<std::int64_t>(n) + r.len;
    best_lcs = r.lcs;
    best_len = r.len;
    best_end = r.end;
  }

  if (best_lcs == 0) {
    // No common character at all.
    return PartialMatch{SimilarityScore{0.0}, MatchSpan{0, 0}};
  }
  std::size_t lensum = n + static_cast<std::size_t>(best_len);
  std::size_t dist = lensum - 2 * static_cast<std::size_t>(best_lcs);
  std::size_t begin = best_end - static_cast<std::size_t>(best_len);
  return PartialMatch{SimilarityScore{score_from(dist, lensum)}, to_byte_span(begin, best_end)};
}

std::string search_text(const ReferenceEntry& entry) {
  if (entry.unstructured) return *entry.unstructured;
  std::string out;
  auto append_field = [&](const char* name) {
    auto it = entry.structured.find(name);
    if (it == entry.structured.end() || it->second.empty()) return;
    if (!out.empty()) out += ". ";
    out += it->second;
  };
  append_field("author");
  append_field("article-title");
  if (!entry.structured.count("article-title")) append_field("volume-title");
  append_field("journal-title");
  if (!entry.structured.count("journal-title")) append_field("series-title");
  append_field("year");
  if (entry.doi) {
    if (!out.empty()) out += ". ";
    out += *entry.doi;
  }
  return out;
}

RefMatch refs_equal(const ReferenceEntry& a, const ExtractedRef& b, double theta_eq) {
  if (theta_eq <= 0.0 || theta_eq > 100.0)
    throw std::invalid_argument("refs_equal: theta_eq out of (0, 100]");
  const bool doi_comparable = a.doi.has_value() && b.doi.has_value();
  if (doi_comparable && *a.doi == *b.doi) return RefMatch::yes;

  std::string text_a = normalize(search_text(a));
  std::string text_b = normalize(b.raw);
  const bool text_comparable = !text_a.empty() && !text_b.empty();
  if (!doi_comparable && !text_comparable) return RefMatch::undecidable;
  if (!text_comparable) return RefMatch::no;  // DOIs existed and disagreed

  return ratio(text_a, text_b).value >= theta_eq ? RefMatch::yes : RefMatch::no;
}

std::optional<std::string> doi_prefix(const std::optional<std::string>& doi) {
  if (!doi || doi->empty()) return std::nullopt;
  std::size_t slash = doi->find('/');
  std::string head = slash == std::string::npos ? *doi : doi->substr(0, slash);
  for (char& c : head) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return head;
}

std::optional<std::string> doi_prefix(const ReferenceEntry& entry) {
  return doi_prefix(entry.doi);
}

}  // namespace refaudit
