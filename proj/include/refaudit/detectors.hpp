#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "refaudit/extract.hpp"
#include "refaudit/ingest.hpp"
#include "refaudit/matchcore.hpp"

namespace refaudit {

enum class M1Case { case1, case2, case3, nodata };

std::string to_string(M1Case c);

/// Last-element alignment verdict. Ghost entries are always a trailing block
/// of the registered list.
struct M1Verdict {
  M1Case case_id = M1Case::nodata;
  std::vector<ReferenceEntry> ghost;
  std::size_t cleaned_away = 0;  // candidates dropped by the cleaning operation
  std::vector<std::string> warnings;
};

struct M2Score {
  std::size_t position = 0;
  SimilarityScore score;
  MatchSpan span;
};

/// Full-text search verdict. ghost, undecidable and found partition the
/// registered list; scores cover every entry that was actually searched.
struct M2Verdict {
  std::vector<ReferenceEntry> ghost;
  std::vector<ReferenceEntry> undecidable;
  std::vector<M2Score> scores;
  std::vector<std::string> warnings;
};

struct M0Estimate {
  std::size_t registered_count = 0;
  std::size_t extracted_count = 0;
  std::size_t estimate = 0;   // max(0, registered - extracted)
  bool flagged = false;       // extracted < 0.95 * registered
};

M0Estimate m0_estimate(const std::vector<ReferenceEntry>& r_c,
                       const std::vector<ExtractedRef>& r_g);

/// Case 1/2/3 classification with the cleaning operation (Case 2) and the
/// backward check (Case 3). Either list empty -> NoData.
M1Verdict m1_classify(const std::vector<ReferenceEntry>& r_c,
                      const std::vector<ExtractedRef>& r_g, const std::string& benefit_prefix,
                      double theta_eq = 90.0);

struct M2Options {
  double theta = 60.0;             // similarity below this marks a ghost
  std::size_t min_needle = 30;     // normalized codepoints; shorter -> undecidable
};

M2Verdict m2_detect(const std::vector<ReferenceEntry>& r_c, const FullText& fulltext,
                    const M2Options& options = {});

struct AgreementRecord {
  bool agree = true;
  long long delta = 0;  // |ghost_m2| - |ghost_m1|
  bool large_disagreement = false;
};

AgreementRecord compare_verdicts(const M1Verdict& m1, const M2Verdict& m2);

/// Heuristic fallback when no benefit prefix is supplied: the majority DOI
/// prefix among the trailing registered entries that match nothing in the
/// extracted list.
std::optional<std::string> infer_benefit_prefix(const std::vector<ReferenceEntry>& r_c,
                                                const std::vector<ExtractedRef>& r_g,
                                                double theta_eq = 90.0);

// --- pipeline-facing verdict record -----------------------------------------

struct GhostRef {
  std::size_t position = 0;
  std::optional<std::string> doi;
  std::string snippet;
};

/// One serializable detection outcome per (doi, method).
struct DocVerdict {
  std::string doi;
  std::string method;    // "m0" | "m1" | "m2"
  std::string status;    // "ok" | "no_refs" | "no_pdf" | "no_extraction"
  std::string case_id;   // m1 only
  std::size_t n_registered = 0;
  std::size_t n_extracted = 0;
  std::vector<GhostRef> ghost;
  std::size_t undecidable_count = 0;
  std::size_t cleaned_away = 0;
  bool flagged = false;
  std::vector<std::string> warnings;
};

GhostRef make_ghost_ref(const ReferenceEntry& entry);

std::string verdict_to_json(const DocVerdict& v);
DocVerdict verdict_from_json(const std::string& line);

std::string verdict_csv_header();
std::string verdict_csv_row(const DocVerdict& v);

}  // namespace refaudit
