#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "refaudit/extract.hpp"
#include "refaudit/ingest.hpp"

namespace refaudit {

/// Similarity in [0, 100]; 100 means equal under the ratio's alignment.
struct SimilarityScore {
  double value = 0.0;
};

/// Byte span [begin, end) into the haystack passed to partial_ratio.
struct MatchSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct PartialMatch {
  SimilarityScore score;
  MatchSpan span;
};

/// NFKC-casefolded, whitespace runs collapsed to single spaces, trimmed.
/// Punctuation survives (DOIs carry meaningful punctuation). Idempotent.
std::string normalize(std::string_view text);

/// 100 * (1 - D(a,b) / (|a|+|b|)) with D the insertion/deletion edit distance
/// (substitution = insert + delete), computed over Unicode codepoints.
/// Symmetric; ratio(x, x) = 100; ratio(x, "") = 0 for non-empty x.
SimilarityScore ratio(std::string_view a, std::string_view b);

/// Maximum of ratio(needle, s) over every contiguous substring s of haystack,
/// with a witness span. Exact: equals exhaustive substring enumeration.
/// Throws std::invalid_argument on an empty needle.
PartialMatch partial_ratio(std::string_view needle, std::string_view haystack);

enum class RefMatch { yes, no, undecidable };

/// The registered entry's comparison text: `unstructured` when present,
/// otherwise "author. title. container. year. doi" from structured fields.
std::string search_text(const ReferenceEntry& entry);

/// Equality predicate between a registered and an extracted reference:
/// equal DOIs win outright; otherwise normalized string similarity >= theta_eq.
/// `undecidable` when neither a DOI pair nor a text pair is comparable.
RefMatch refs_equal(const ReferenceEntry& a, const ExtractedRef& b, double theta_eq = 90.0);

/// DOI substring before the first '/', lowercase.
std::optional<std::string> doi_prefix(const std::optional<std::string>& doi);
std::optional<std::string> doi_prefix(const ReferenceEntry& entry);

}  // namespace refaudit
