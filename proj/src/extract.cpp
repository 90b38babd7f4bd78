#include "refaudit/extract.hpp"

#include <cctype>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <httplib.h>
#include <json.hpp>

#include "refaudit/util.hpp"

namespace pt = boost::property_tree;
using nlohmann::json;

namespace refaudit {

namespace {

std::string collapse_ws(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = true;  // swallow leading whitespace
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(c);
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

void collect_text(const pt::ptree& node, std::string& out) {
  const std::string& data = node.data();
  if (!data.empty()) {
    out += data;
    out.push_back(' ');
  }
  for (const auto& [name, child] : node) {
    if (name == "<xmlattr>") continue;
    collect_text(child, out);
  }
}

std::optional<std::string> find_doi(const pt::ptree& node) {
  for (const auto& [name, child] : node) {
    if (name == "<xmlattr>") continue;
    if (name == "idno") {
      auto type = child.get_optional<std::string>("<xmlattr>.type");
      if (type && ascii_lower(*type) == "doi") {
        std::string value = collapse_ws(child.data());
        for (std::string_view prefix : {"https://doi.org/", "http://doi.org/", "doi:"}) {
          if (value.size() > prefix.size() &&
              ascii_lower(value.substr(0, prefix.size())) == prefix) {
            value = value.substr(prefix.size());
            break;
          }
        }
        value = ascii_lower(value);
        if (value.rfind("10.", 0) == 0 && value.find('/') != std::string::npos) return value;
      }
    }
    if (auto found = find_doi(child)) return found;
  }
  return std::nullopt;
}

void collect_bibl_entries(const pt::ptree& node, std::vector<ExtractedRef>& out) {
  for (const auto& [name, child] : node) {
    if (name == "<xmlattr>") continue;
    if (name == "listBibl") {
      for (const auto& [ename, entry] : child) {
        if (ename != "biblStruct" && ename != "bibl") continue;
        std::string text;
        collect_text(entry, text);
        std::string raw = collapse_ws(text);
        if (raw.empty()) continue;
        ExtractedRef ref;
        ref.raw = std::move(raw);
        ref.doi = find_doi(entry);
        ref.position = out.size();
        out.push_back(std::move(ref));
      }
    } else {
      collect_bibl_entries(child, out);
    }
  }
}

}  // namespace

std::vector<ExtractedRef> parse_tei_refs(const std::string& tei_xml) {
  pt::ptree tree;
  std::istringstream in(tei_xml);
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw MalformedTei(std::string("TEI parse failed: ") + e.what());
  }
  std::vector<ExtractedRef> refs;
  collect_bibl_entries(tree, refs);
  return refs;
}

std::vector<ExtractedRef> extract_structured_refs(const std::string& pdf_bytes,
                                                  const ServiceConfig& config,
                                                  std::string& tei_out) {
  if (pdf_bytes.empty()) throw ExtractionServiceError("empty PDF payload");
  std::string base = config.base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  httplib::Client client(base);
  client.set_connection_timeout(config.timeout_seconds, 0);
  client.set_read_timeout(config.timeout_seconds, 0);

  httplib::MultipartFormDataItems items = {
      {"input", pdf_bytes, "input.pdf", "application/pdf"},
  };
  auto res = client.Post(config.path, items);
  if (!res)
    throw ExtractionServiceError("reference-extraction service unreachable: " +
                                 httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw ExtractionServiceError("reference-extraction service returned HTTP " +
                                 std::to_string(res->status));
  tei_out = res->body;
  return parse_tei_refs(tei_out);
}

std::vector<ExtractedRef> extract_structured_refs(const std::string& pdf_bytes,
                                                  const ServiceConfig& config) {
  std::string tei;
  return extract_structured_refs(pdf_bytes, config, tei);
}

std::string normalize_extracted_text(const std::string& raw_pages) {
  // Soft hyphens vanish unconditionally; a hyphen at a line break joined to a
  // following letter is wrap hyphenation and gets removed with the break.
  std::string joined;
  joined.reserve(raw_pages.size());
  const std::string& s = raw_pages;
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '\xC2' && i + 1 < s.size() && s[i + 1] == '\xAD') {
      i += 2;  // U+00AD
      continue;
    }
    if (s[i] == '-') {
      std::size_t j = i + 1;
      bool saw_newline = false;
      while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) {
        if (s[j] == '\n' || s[j] == '\r') saw_newline = true;
        ++j;
      }
      if (saw_newline && j < s.size()) {
        unsigned char next = static_cast<unsigned char>(s[j]);
        bool prev_alpha =
            !joined.empty() && (std::isalpha(static_cast<unsigned char>(joined.back())) ||
                                static_cast<unsigned char>(joined.back()) >= 0x80);
        if (prev_alpha && (std::islower(next) || next >= 0x80)) {
          i = j;  // drop "-\n" and rejoin the word
          continue;
        }
      }
    }
    joined.push_back(s[i]);
    ++i;
  }
  return collapse_ws(joined);
}

std::filesystem::path CorpusPaths::pdf(std::string_view doi) const {
  return root / "pdf" / (percent_encode(doi) + ".pdf");
}
std::filesystem::path CorpusPaths::tei(std::string_view doi) const {
  return root / "tei" / (percent_encode(doi) + ".tei.xml");
}
std::filesystem::path CorpusPaths::txt(std::string_view doi) const {
  return root / "txt" / (percent_encode(doi) + ".txt");
}
std::filesystem::path CorpusPaths::txt_meta(std::string_view doi) const {
  return root / "txt" / (percent_encode(doi) + ".txt.json");
}

ExtractOutcome load_or_extract(const std::string& doi, const std::filesystem::path& corpus_dir,
                               const ServiceConfig* service) {
  CorpusPaths paths{corpus_dir};
  ExtractOutcome outcome;

  const bool have_pdf = file_exists(paths.pdf(doi));
  std::string pdf_bytes;

  // Structured references: cache, then service.
  if (file_exists(paths.tei(doi))) {
    try {
      outcome.refs = parse_tei_refs(read_file(paths.tei(doi)));
      outcome.tei_from_cache = true;
    } catch (const std::exception& e) {
      outcome.warnings.push_back("cached TEI unusable: " + std::string(e.what()));
    }
  }
  if (!outcome.refs && service && have_pdf) {
    if (pdf_bytes.empty()) pdf_bytes = read_file(paths.pdf(doi));
    std::string tei;
    outcome.refs = extract_structured_refs(pdf_bytes, *service, tei);
    try {
      atomic_write_file(paths.tei(doi), tei);
    } catch (const std::exception& e) {
      outcome.warnings.push_back("TEI cache write failed: " + std::string(e.what()));
    }
  }

  // Full text: cache, then local extraction.
  if (file_exists(paths.txt(doi))) {
    FullText ft;
    ft.text = read_file(paths.txt(doi));
    ft.page_count = 1;
    if (file_exists(paths.txt_meta(doi))) {
      try {
        json meta = json::parse(read_file(paths.txt_meta(doi)));
        ft.page_count = meta.value("page_count", 1);
        if (meta.contains("warnings"))
          for (const auto& w : meta["warnings"]) ft.extraction_warnings.push_back(w);
      } catch (const std::exception&) {
        outcome.warnings.push_back("text cache meta unreadable for " + doi);
      }
    }
    outcome.fulltext = std::move(ft);
    outcome.txt_from_cache = true;
  } else if (have_pdf) {
    if (pdf_bytes.empty()) pdf_bytes = read_file(paths.pdf(doi));
    try {
      FullText ft = extract_fulltext(pdf_bytes);
      try {
        atomic_write_file(paths.txt(doi), ft.text);
        json meta;
        meta["page_count"] = ft.page_count;
        meta["warnings"] = ft.extraction_warnings;
        atomic_write_file(paths.txt_meta(doi), meta.dump(2) + "\n");
      } catch (const std::exception& e) {
        outcome.warnings.push_back("text cache write failed: " + std::string(e.what()));
      }
      outcome.fulltext = std::move(ft);
    } catch (const UnreadablePdf& e) {
      outcome.warnings.push_back("unreadable PDF: " + std::string(e.what()));
    }
  }

  if (!have_pdf && !outcome.tei_from_cache && !outcome.txt_from_cache) outcome.no_pdf = true;
  return outcome;
}

}  // namespace refaudit
