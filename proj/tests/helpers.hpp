#pragma once

// Shared fixtures and independent oracles for the test suites. The oracles
// here are deliberately naive (quadratic DP, exhaustive enumeration) and must
// stay independent of the library implementation they check.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "refaudit/extract.hpp"
#include "refaudit/ingest.hpp"
#include "refaudit/util.hpp"

namespace testhelpers {

// --- string oracles ----------------------------------------------------------

// Insertion/deletion edit distance (substitution = insert + delete).
inline std::size_t oracle_indel_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1])
        cur[j] = prev[j - 1];
      else
        cur[j] = 1 + std::min(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline double oracle_ratio(const std::string& a, const std::string& b) {
  std::size_t lensum = a.size() + b.size();
  if (lensum == 0) return 100.0;
  std::size_t dist = oracle_indel_distance(a, b);
  return 100.0 * (1.0 - static_cast<double>(dist) / static_cast<double>(lensum));
}

// Max of oracle_ratio(needle, s) over every contiguous substring s of haystack,
// by exhaustive enumeration (incremental LCS per start offset).
inline double oracle_partial_ratio(const std::string& needle, const std::string& haystack) {
  const std::size_t n = needle.size();
  double best = 0.0;  // the empty substring scores 0
  for (std::size_t start = 0; start < haystack.size(); ++start) {
    std::vector<std::size_t> dp(n + 1, 0), next(n + 1, 0);
    for (std::size_t j = start; j < haystack.size(); ++j) {
      char c = haystack[j];
      next[0] = 0;
      for (std::size_t u = 1; u <= n; ++u) {
        std::size_t v = std::max(dp[u], next[u - 1]);
        if (needle[u - 1] == c) v = std::max(v, dp[u - 1] + 1);
        next[u] = v;
      }
      std::swap(dp, next);
      std::size_t len = j - start + 1;
      std::size_t lensum = n + len;
      std::size_t dist = lensum - 2 * dp[n];
      double score = 100.0 * (1.0 - static_cast<double>(dist) / static_cast<double>(lensum));
      best = std::max(best, score);
    }
  }
  return best;
}

// --- record fixtures ---------------------------------------------------------

inline refaudit::ReferenceEntry make_entry(std::size_t position, const std::string& doi,
                                           const std::string& unstructured) {
  refaudit::ReferenceEntry e;
  e.key = "ref" + std::to_string(position);
  e.position = position;
  if (!doi.empty()) e.doi = doi;
  if (!unstructured.empty()) e.unstructured = unstructured;
  return e;
}

inline refaudit::ExtractedRef make_extracted(std::size_t position, const std::string& raw,
                                             const std::string& doi = "") {
  refaudit::ExtractedRef r;
  r.position = position;
  r.raw = raw;
  if (!doi.empty()) r.doi = doi;
  return r;
}

inline refaudit::CrossrefRecord make_record(const std::string& doi,
                                            const std::string& work_type = "journal-article") {
  refaudit::CrossrefRecord rec;
  rec.doi = doi;
  rec.prefix = doi.substr(0, doi.find('/'));
  rec.work_type = work_type;
  return rec;
}

// Reference-looking sentence, deterministic per (rng).
inline std::string synth_reference(std::mt19937& rng, const std::string& doi) {
  static const char* surnames[] = {"garcia",  "okafor", "lindqvist", "tanaka", "muller",
                                   "rossi",   "novak",  "hansen",    "silva",  "kovacs"};
  static const char* topics[] = {"adaptive mesh refinement", "soil moisture retrieval",
                                 "protein folding kinetics",  "urban heat islands",
                                 "graphene synthesis",        "wavelet denoising",
                                 "reinforcement scheduling",  "coastal erosion models",
                                 "spectral graph clustering", "microfluidic assays"};
  static const char* venues[] = {"Journal of Applied Studies", "Annals of Method Research",
                                 "International Review of Systems", "Letters in Computation",
                                 "Proceedings of Field Science"};
  std::uniform_int_distribution<int> pick(0, 9), venue(0, 4), year(1995, 2024), pages(1, 400);
  std::string s;
  s += surnames[pick(rng)];
  s += ", ";
  s += static_cast<char>('a' + pick(rng));
  s += ". (" + std::to_string(year(rng)) + "). ";
  std::string topic = topics[pick(rng)];
  topic[0] = static_cast<char>(std::toupper(topic[0]));
  s += topic + " under " + topics[pick(rng)] + ". ";
  s += venues[venue(rng)];
  int p = pages(rng);
  s += ", " + std::to_string(pick(rng) + 1) + "(" + std::to_string(pick(rng) + 1) + "), " +
       std::to_string(p) + "-" + std::to_string(p + 12) + ".";
  if (!doi.empty()) s += " https://doi.org/" + doi;
  return s;
}

// Alien (sneaked) reference text: different citation style, vocabulary and
// token mix than synth_reference, the way injected metadata junk differs from
// a document's own bibliography. Keeps similarity against genuine text well
// under the detection threshold.
inline std::string synth_alien_reference(std::mt19937& rng, const std::string& doi) {
  static const char* surnames[] = {"Zhai",   "Wozniak", "Abebe",  "Petrov", "Johansson",
                                   "Kimura", "Duarte",  "Osei",   "Varga",  "Becker"};
  static const char* topics[] = {"quantum dot laser yield",   "mangrove carbon stock",
                                 "turbine blade fatigue",     "sign language translation",
                                 "asteroid spectroscopy",     "lithium anode dendrite",
                                 "glacial meltwater tracing", "honeybee colony dynamics",
                                 "femtosecond pulse shaping", "zeolite membrane sieving"};
  static const char* venues[] = {"Bull Adv Eng", "Q Gaz Nat Hist", "Arch Exp Notes",
                                 "Trans Emerg Instrum", "Reg Tech Memo"};
  std::uniform_int_distribution<int> pick(0, 9), venue(0, 4), year(1995, 2024), pages(1, 400),
      code(1000, 9999);
  std::string s;
  s += surnames[pick(rng)];
  s += ' ';
  s += static_cast<char>('A' + pick(rng));
  s += ", ";
  s += surnames[pick(rng)];
  s += ' ';
  s += static_cast<char>('A' + pick(rng));
  std::string topic = topics[pick(rng)];
  topic[0] = static_cast<char>(std::toupper(topic[0]));
  s += ". " + topic + " benchmark [Report QZ-" + std::to_string(code(rng)) + "-" +
       std::to_string(pick(rng)) + "]. ";
  s += venues[venue(rng)];
  int p = pages(rng);
  s += " " + std::to_string(year(rng)) + ";" + std::to_string(pick(rng) + 1) + ":" +
       std::to_string(p) + "-" + std::to_string(p + 12);
  if (!doi.empty()) s += ". doi:" + doi;
  return s;
}

// A synthetic document with known ground truth: n_genuine references present
// in the text and extracted list, n_alien benefit-prefix references appended
// to the registered list only.
struct SynthDoc {
  std::vector<refaudit::ReferenceEntry> r_c;
  std::vector<refaudit::ExtractedRef> r_g;
  refaudit::FullText text;
  std::size_t n_genuine = 0;
  std::size_t n_alien = 0;
};

inline SynthDoc make_synth_doc(std::mt19937& rng, std::size_t n_genuine, std::size_t n_alien,
                               const std::string& benefit_prefix = "10.38124") {
  SynthDoc doc;
  doc.n_genuine = n_genuine;
  doc.n_alien = n_alien;

  std::string body =
      "Introduction. This study follows the usual structure and cites prior work "
      "throughout the discussion before closing with the reference section. References. ";
  for (std::size_t i = 0; i < n_genuine; ++i) {
    std::string doi = "10.5" + std::to_string(100 + i % 50) + "/g" + std::to_string(i);
    std::string ref = synth_reference(rng, doi);
    doc.r_c.push_back(make_entry(doc.r_c.size(), doi, ref));
    doc.r_g.push_back(make_extracted(doc.r_g.size(), ref, doi));
    body += "[" + std::to_string(i + 1) + "] " + ref + " ";
  }
  for (std::size_t i = 0; i < n_alien; ++i) {
    std::string doi = benefit_prefix + "/alien" + std::to_string(i);
    std::string ref = synth_alien_reference(rng, doi);
    doc.r_c.push_back(make_entry(doc.r_c.size(), doi, ref));
  }
  doc.text.text = refaudit::normalize_extracted_text(body);
  doc.text.page_count = 1;
  return doc;
}

// --- minimal PDF builder -----------------------------------------------------

class MiniPdf {
 public:
  void add_page(const std::vector<std::string>& lines) { pages_.push_back(lines); }

  std::string build(bool compress = false) const {
    std::vector<std::string> objects;  // 1-based object bodies
    const int n_pages = static_cast<int>(pages_.size());
    const int font_id = 3 + 2 * n_pages;

    std::string kids;
    for (int i = 0; i < n_pages; ++i) kids += std::to_string(3 + 2 * i) + " 0 R ";
    objects.push_back("<< /Type /Catalog /Pages 2 0 R >>");
    objects.push_back("<< /Type /Pages /Kids [" + kids + "] /Count " + std::to_string(n_pages) +
                      " >>");

    for (int i = 0; i < n_pages; ++i) {
      int content_id = 4 + 2 * i;
      objects.push_back("<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] /Contents " +
                        std::to_string(content_id) + " 0 R /Resources << /Font << /F1 " +
                        std::to_string(font_id) + " 0 R >> >> >>");
      std::string content = "BT /F1 11 Tf 50 760 Td\n";
      for (const std::string& line : pages_[i]) {
        content += "(" + escape(line) + ") Tj 0 -14 Td\n";
      }
      content += "ET\n";
      if (compress) content = refaudit::zlib_compress(content);
      objects.push_back("<< /Length " + std::to_string(content.size()) +
                        (compress ? " /Filter /FlateDecode" : "") + " >>\nstream\n" + content +
                        "\nendstream");
    }
    objects.push_back("<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica >>");

    std::string out = "%PDF-1.4\n";
    std::vector<std::size_t> offsets;
    for (std::size_t i = 0; i < objects.size(); ++i) {
      offsets.push_back(out.size());
      out += std::to_string(i + 1) + " 0 obj\n" + objects[i] + "\nendobj\n";
    }
    std::size_t xref_at = out.size();
    out += "xref\n0 " + std::to_string(objects.size() + 1) + "\n";
    out += "0000000000 65535 f \n";
    for (std::size_t off : offsets) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%010zu 00000 n \n", off);
      out += buf;
    }
    out += "trailer\n<< /Size " + std::to_string(objects.size() + 1) +
           " /Root 1 0 R >>\nstartxref\n" + std::to_string(xref_at) + "\n%%EOF\n";
    return out;
  }

 private:
  static std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '(' || c == ')' || c == '\\') out.push_back('\\');
      out.push_back(c);
    }
    return out;
  }

  std::vector<std::vector<std::string>> pages_;
};

// --- TEI fixtures ------------------------------------------------------------

inline std::string tei_document(const std::vector<std::pair<std::string, std::string>>& refs) {
  // pair = (flattened text, doi or "")
  std::string bibl;
  for (const auto& [text, doi] : refs) {
    bibl += "      <biblStruct>\n        <analytic><title level=\"a\">" + text + "</title>";
    if (!doi.empty()) bibl += "<idno type=\"DOI\">" + doi + "</idno>";
    bibl += "</analytic>\n      </biblStruct>\n";
  }
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<TEI xmlns=\"http://www.tei-c.org/ns/1.0\">\n"
         "  <teiHeader><fileDesc><titleStmt><title/></titleStmt></fileDesc></teiHeader>\n"
         "  <text><back><div type=\"references\">\n    <listBibl>\n" +
         bibl +
         "    </listBibl>\n  </div></back></text>\n"
         "</TEI>\n";
}

}  // namespace testhelpers
