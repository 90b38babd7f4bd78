#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace refaudit {

/// One reference as extracted from the document, flattened to a single line.
struct ExtractedRef {
  std::string raw;                 // non-empty after whitespace collapse
  std::optional<std::string> doi;  // lowercase, when the extractor identified one
  std::size_t position = 0;        // 0-based index in extracted order
};

/// Whole-document text, pages concatenated in order, hyphenation repaired,
/// whitespace runs collapsed to single spaces.
struct FullText {
  std::string text;
  int page_count = 0;
  std::vector<std::string> extraction_warnings;
};

struct ExtractionServiceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MalformedTei : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnreadablePdf : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ServiceConfig {
  std::string base_url = "http://localhost:8070";
  std::string path = "/api/processReferences";
  int timeout_seconds = 120;
};

/// Reads <listBibl>/<biblStruct> entries out of a TEI document (full or
/// references-only response), one flattened line per entry; the DOI comes
/// from idno[@type="DOI"] when present. An empty bibliography is not an error.
std::vector<ExtractedRef> parse_tei_refs(const std::string& tei_xml);

/// POSTs the PDF to a Grobid-compatible service and parses the TEI response.
std::vector<ExtractedRef> extract_structured_refs(const std::string& pdf_bytes,
                                                  const ServiceConfig& config);
/// Same, but also hands back the verbatim TEI for caching.
std::vector<ExtractedRef> extract_structured_refs(const std::string& pdf_bytes,
                                                  const ServiceConfig& config,
                                                  std::string& tei_out);

/// Extracts plain text from a PDF (see pdftext.cpp for the supported subset).
FullText extract_fulltext(const std::string& pdf_bytes);

/// Hyphenation repair + whitespace collapse applied to raw page text; a fixed
/// point on its own output.
std::string normalize_extracted_text(const std::string& raw_pages);

struct CorpusPaths {
  std::filesystem::path root;
  std::filesystem::path pdf(std::string_view doi) const;
  std::filesystem::path tei(std::string_view doi) const;
  std::filesystem::path txt(std::string_view doi) const;
  std::filesystem::path txt_meta(std::string_view doi) const;
};

struct ExtractOutcome {
  std::optional<std::vector<ExtractedRef>> refs;
  std::optional<FullText> fulltext;
  bool no_pdf = false;
  bool tei_from_cache = false;
  bool txt_from_cache = false;
  std::vector<std::string> warnings;
};

/// Cache-first extraction for one DOI. With `service == nullptr` the call is
/// cache-only: a missing TEI simply leaves `refs` empty. Results are written
/// back via atomic rename; cache write failures degrade to warnings.
ExtractOutcome load_or_extract(const std::string& doi, const std::filesystem::path& corpus_dir,
                               const ServiceConfig* service);

}  // namespace refaudit
