#include "refaudit/detectors.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

#include "refaudit/util.hpp"

using nlohmann::json;

namespace refaudit {

std::string to_string(M1Case c) {
  switch (c) {
    case M1Case::case1: return "case1";
    case M1Case::case2: return "case2";
    case M1Case::case3: return "case3";
    case M1Case::nodata: return "nodata";
  }
  return "nodata";
}

M0Estimate m0_estimate(const std::vector<ReferenceEntry>& r_c,
                       const std::vector<ExtractedRef>& r_g) {
  M0Estimate est;
  est.registered_count = r_c.size();
  est.extracted_count = r_g.size();
  est.estimate = r_c.size() > r_g.size() ? r_c.size() - r_g.size() : 0;
  est.flagged = est.registered_count > 0 &&
                static_cast<double>(est.extracted_count) <
                    0.95 * static_cast<double>(est.registered_count);
  return est;
}

M1Verdict m1_classify(const std::vector<ReferenceEntry>& r_c,
                      const std::vector<ExtractedRef>& r_g, const std::string& benefit_prefix,
                      double theta_eq) {
  M1Verdict verdict;
  if (r_c.empty() || r_g.empty()) {
    verdict.case_id = M1Case::nodata;
    return verdict;
  }

  const ExtractedRef& last_g = r_g.back();
  std::optional<std::size_t> match;  // greatest matching position wins
  bool any_decided = false;
  for (const ReferenceEntry& entry : r_c) {
    RefMatch m = refs_equal(entry, last_g, theta_eq);
    if (m != RefMatch::undecidable) any_decided = true;
    if (m == RefMatch::yes) match = entry.position;
  }
  if (!any_decided)
    verdict.warnings.push_back("every comparison against the last extracted entry undecidable");

  if (match && *match == r_c.size() - 1) {
    verdict.case_id = M1Case::case1;
    return verdict;
  }

  if (match) {
    verdict.case_id = M1Case::case2;
    std::size_t first_benefit = r_c.size();
    for (std::size_t i = *match + 1; i < r_c.size(); ++i) {
      auto prefix = doi_prefix(r_c[i]);
      if (prefix && *prefix == benefit_prefix) {
        first_benefit = i;
        break;
      }
    }
    verdict.cleaned_away = first_benefit - (*match + 1);
    if (first_benefit == r_c.size()) {
      verdict.warnings.push_back("cleaning removed every ghost candidate");
    } else {
      verdict.ghost.assign(r_c.begin() + static_cast<std::ptrdiff_t>(first_benefit), r_c.end());
    }
    return verdict;
  }

  // Case 3: the last extracted entry matches nothing registered; collect the
  // maximal trailing benefit-prefix block.
  verdict.case_id = M1Case::case3;
  std::size_t start = r_c.size();
  while (start > 0) {
    auto prefix = doi_prefix(r_c[start - 1]);
    if (!prefix || *prefix != benefit_prefix) break;
    --start;
  }
  verdict.ghost.assign(r_c.begin() + static_cast<std::ptrdiff_t>(start), r_c.end());
  if (start == 0 && !verdict.ghost.empty()) verdict.warnings.push_back("all-prefix list");
  return verdict;
}

namespace {

std::size_t codepoint_count(std::string_view utf8) {
  std::size_t n = 0;
  for (unsigned char c : utf8)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

}  // namespace

M2Verdict m2_detect(const std::vector<ReferenceEntry>& r_c, const FullText& fulltext,
                    const M2Options& options) {
  M2Verdict verdict;
  if (r_c.empty()) return verdict;
  if (fulltext.text.empty()) {
    verdict.warnings.push_back("empty full text; every entry undecidable");
    verdict.undecidable = r_c;
    return verdict;
  }

  const std::string haystack = normalize(fulltext.text);
  for (const ReferenceEntry& entry : r_c) {
    std::string needle = normalize(search_text(entry));
    if (codepoint_count(needle) < options.min_needle) {
      verdict.undecidable.push_back(entry);
      continue;
    }
    PartialMatch match = partial_ratio(needle, haystack);
    verdict.scores.push_back({entry.position, match.score, match.span});
    if (match.score.value < options.theta)
      verdict.ghost.push_back(entry);
  }
  return verdict;
}

AgreementRecord compare_verdicts(const M1Verdict& m1, const M2Verdict& m2) {
  AgreementRecord rec;
  rec.delta = static_cast<long long>(m2.ghost.size()) - static_cast<long long>(m1.ghost.size());
  rec.agree = m1.ghost.size() == m2.ghost.size();
  rec.large_disagreement = rec.delta > 10 || rec.delta < -10;
  return rec;
}

std::optional<std::string> infer_benefit_prefix(const std::vector<ReferenceEntry>& r_c,
                                                const std::vector<ExtractedRef>& r_g,
                                                double theta_eq) {
  auto matched = [&](const ReferenceEntry& entry) {
    for (const ExtractedRef& g : r_g)
      if (refs_equal(entry, g, theta_eq) == RefMatch::yes) return true;
    return false;
  };
  std::map<std::string, std::size_t> votes;
  for (auto it = r_c.rbegin(); it != r_c.rend(); ++it) {
    if (matched(*it)) break;  // trailing unmatched block only
    if (auto prefix = doi_prefix(*it)) ++votes[*prefix];
  }
  if (votes.empty()) return std::nullopt;
  auto best = votes.begin();
  for (auto it = votes.begin(); it != votes.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

GhostRef make_ghost_ref(const ReferenceEntry& entry) {
  GhostRef g;
  g.position = entry.position;
  g.doi = entry.doi;
  std::string snippet = search_text(entry);
  if (snippet.size() > 120) snippet.resize(120);
  g.snippet = std::move(snippet);
  return g;
}

std::string verdict_to_json(const DocVerdict& v) {
  json j;
  j["doi"] = v.doi;
  j["method"] = v.method;
  j["status"] = v.status;
  j["case"] = v.case_id;
  j["n_registered"] = v.n_registered;
  j["n_extracted"] = v.n_extracted;
  json ghosts = json::array();
  for (const auto& g : v.ghost) {
    json item;
    item["position"] = g.position;
    if (g.doi) item["doi"] = *g.doi;
    item["snippet"] = g.snippet;
    ghosts.push_back(std::move(item));
  }
  j["ghost"] = std::move(ghosts);
  j["undecidable_count"] = v.undecidable_count;
  j["cleaned_away"] = v.cleaned_away;
  j["flagged"] = v.flagged;
  j["warnings"] = v.warnings;
  return j.dump();
}

DocVerdict verdict_from_json(const std::string& line) {
  json j = json::parse(line);
  DocVerdict v;
  v.doi = j.value("doi", "");
  v.method = j.value("method", "");
  v.status = j.value("status", "ok");
  v.case_id = j.value("case", "");
  v.n_registered = j.value("n_registered", std::size_t{0});
  v.n_extracted = j.value("n_extracted", std::size_t{0});
  if (j.contains("ghost"))
    for (const auto& item : j["ghost"]) {
      GhostRef g;
      g.position = item.value("position", std::size_t{0});
      if (item.contains("doi")) g.doi = item["doi"].get<std::string>();
      g.snippet = item.value("snippet", "");
      v.ghost.push_back(std::move(g));
    }
  v.undecidable_count = j.value("undecidable_count", std::size_t{0});
  v.cleaned_away = j.value("cleaned_away", std::size_t{0});
  v.flagged = j.value("flagged", false);
  if (j.contains("warnings"))
    for (const auto& w : j["warnings"]) v.warnings.push_back(w.get<std::string>());
  return v;
}

std::string verdict_csv_header() {
  return "doi,method,n_registered,n_extracted,n_ghost,case,flagged";
}

std::string verdict_csv_row(const DocVerdict& v) {
  std::string row = csv_field(v.doi);
  row += ',';
  row += v.method;
  row += ',';
  row += std::to_string(v.n_registered);
  row += ',';
  row += std::to_string(v.n_extracted);
  row += ',';
  row += std::to_string(v.ghost.size());
  row += ',';
  row += v.case_id;
  row += ',';
  row += v.flagged ? "1" : "0";
  return row;
}

}  // namespace refaudit
