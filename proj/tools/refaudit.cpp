#include <algorithm>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "refaudit/detectors.hpp"
#include "refaudit/dupmetrics.hpp"
#include "refaudit/extract.hpp"
#include "refaudit/ingest.hpp"
#include "refaudit/report.hpp"
#include "refaudit/util.hpp"

namespace {

using namespace refaudit;

int cmd_fetch(const std::filesystem::path& doi_list, const std::filesystem::path& cache_dir,
              const EndpointConfig& endpoint) {
  std::vector<std::string> dois;
  for (const std::string& raw : split_lines(read_file(doi_list))) {
    std::string_view line = trim_view(raw);
    if (line.empty() || line[0] == '#') continue;
    dois.emplace_back(ascii_lower(line));
  }
  std::uint64_t fetched = 0, cached = 0, missing = 0, failed = 0;
  for (const std::string& doi : dois) {
    auto path = record_cache_path(cache_dir, doi);
    if (file_exists(path)) {
      ++cached;
      continue;
    }
    try {
      std::string body = fetch_record_body(doi, endpoint);
      parse_record(body);  // reject unusable payloads before caching them
      atomic_write_file(path, body);
      ++fetched;
    } catch (const NotRegistered&) {
      std::cerr << "not registered: " << doi << "\n";
      ++missing;
    } catch (const std::exception& e) {
      std::cerr << "fetch failed: " << doi << ": " << e.what() << "\n";
      ++failed;
    }
  }
  std::cout << "fetched " << fetched << ", cache hits " << cached << ", not registered "
            << missing << ", failed " << failed << "\n";
  return failed > 0 ? 1 : 0;
}

int cmd_extract(const std::filesystem::path& corpus_dir, const ServiceConfig& service) {
  auto pdf_dir = corpus_dir / "pdf";
  if (!std::filesystem::is_directory(pdf_dir)) {
    std::cerr << "error: no pdf directory under " << corpus_dir << "\n";
    return 2;
  }
  std::vector<std::filesystem::path> pdfs;
  for (const auto& e : std::filesystem::directory_iterator(pdf_dir))
    if (e.is_regular_file() && e.path().extension() == ".pdf") pdfs.push_back(e.path());
  std::sort(pdfs.begin(), pdfs.end());

  std::uint64_t done = 0, failed = 0;
  for (const auto& pdf : pdfs) {
    // File names are percent-encoded DOIs; extraction only needs the stem.
    std::string enc = pdf.stem().string();
    std::string doi;
    for (std::size_t i = 0; i < enc.size(); ++i) {
      if (enc[i] == '%' && i + 2 < enc.size()) {
        doi.push_back(static_cast<char>(std::stoi(enc.substr(i + 1, 2), nullptr, 16)));
        i += 2;
      } else {
        doi.push_back(enc[i]);
      }
    }
    try {
      ExtractOutcome outcome = load_or_extract(doi, corpus_dir, &service);
      for (const auto& w : outcome.warnings) std::cerr << doi << ": " << w << "\n";
      ++done;
    } catch (const std::exception& e) {
      std::cerr << "extract failed: " << doi << ": " << e.what() << "\n";
      ++failed;
    }
  }
  std::cout << "extracted " << done << " document(s), " << failed << " failure(s)\n";
  return 0;
}

int cmd_dups(const std::filesystem::path& snapshot, const std::filesystem::path& out_dir,
             const std::filesystem::path& state_dir, std::uint64_t min_dup_refs,
             std::size_t top_n) {
  DupAggregates agg;
  if (!state_dir.empty() && std::filesystem::is_directory(state_dir))
    agg = DupAggregates::load(state_dir);

  std::vector<DupDocStats> top_docs;  // bounded leaderboard while streaming
  auto keep_top = [&](DupDocStats stats) {
    if (stats.nbrefdup_plus == 0) return;
    top_docs.push_back(std::move(stats));
    if (top_docs.size() > top_n * 4) {
      std::sort(top_docs.begin(), top_docs.end(), [](const auto& a, const auto& b) {
        if (a.nbrefdup_plus != b.nbrefdup_plus) return a.nbrefdup_plus > b.nbrefdup_plus;
        return a.doi < b.doi;
      });
      top_docs.resize(top_n);
    }
  };

  SnapshotReader reader(snapshot);
  while (auto record = reader.next()) {
    agg.add(*record);
    if (graph_eligible(*record)) keep_top(doc_dup_stats(*record));
  }
  std::sort(top_docs.begin(), top_docs.end(), [](const auto& a, const auto& b) {
    if (a.nbrefdup_plus != b.nbrefdup_plus) return a.nbrefdup_plus > b.nbrefdup_plus;
    return a.doi < b.doi;
  });
  if (top_docs.size() > top_n) top_docs.resize(top_n);

  if (!state_dir.empty()) agg.save(state_dir);
  std::filesystem::create_directories(out_dir);

  {
    auto rows = top_k(agg.benef(), top_n, [](const BenefStats& b) { return b.benef_plus; });
    std::ostringstream out;
    out << "cited_doi,benef_plus,benef\n";
    for (const auto& [doi, b] : rows)
      out << csv_field(doi) << ',' << b.benef_plus << ',' << b.benef << '\n';
    atomic_write_file(out_dir / "leaderboard_benef.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "doi,nbrefdup_plus,nbrefdup\n";
    for (const auto& d : top_docs)
      out << csv_field(d.doi) << ',' << d.nbrefdup_plus << ',' << d.nbrefdup << '\n';
    atomic_write_file(out_dir / "leaderboard_doc.csv", out.str());
  }
  {
    auto rows = top_k(agg.journals(), top_n, [](const JournalDup& j) { return j.jourdup_plus; });
    std::ostringstream out;
    out << "journal,jourdup_plus,jourdup,ratio\n";
    for (const auto& [journal, j] : rows) {
      double ratio = j.jourdup == 0 ? 0.0
                                    : static_cast<double>(j.jourdup_plus) /
                                          static_cast<double>(j.jourdup);
      out << csv_field(journal) << ',' << j.jourdup_plus << ',' << j.jourdup << ',' << ratio
          << '\n';
    }
    atomic_write_file(out_dir / "leaderboard_journal.csv", out.str());
  }
  {
    auto scores = agg.author_journal_scores(min_dup_refs);
    if (scores.size() > top_n) scores.resize(top_n);
    std::ostringstream out;
    out << "journal,author,dup_to_author,dup_total,ref_to_author,ref_total,score\n";
    for (const auto& s : scores)
      out << csv_field(s.journal) << ',' << csv_field(s.author) << ',' << s.dup_to_author << ','
          << s.dup_total << ',' << s.ref_to_author << ',' << s.ref_total << ',' << s.s1 << '\n';
    atomic_write_file(out_dir / "leaderboard_author_journal.csv", out.str());
  }
  {
    const SnapshotSummary& s = agg.summary();
    std::ostringstream out;
    out << "{\n";
    out << "  \"docs\": " << s.docs << ",\n";
    out << "  \"docs_skipped_type\": " << s.docs_skipped_type << ",\n";
    out << "  \"reference_entries\": " << s.entries << ",\n";
    out << "  \"entries_without_doi\": " << s.entries_no_doi << ",\n";
    out << "  \"distinct_references\": " << s.distinct << ",\n";
    out << "  \"duplicated_references\": " << s.duplicated_refs << ",\n";
    out << "  \"duplicate_surplus\": " << s.surplus << ",\n";
    out << "  \"avg_duplicates_per_duplicated_ref\": " << s.avg_duplicates() << ",\n";
    out << "  \"batch_files_read\": " << reader.stats().files_read << ",\n";
    out << "  \"batch_files_skipped\": " << reader.stats().files_skipped << ",\n";
    out << "  \"items_yielded\": " << reader.stats().items_yielded << ",\n";
    out << "  \"items_skipped\": " << reader.stats().items_skipped << "\n";
    out << "}\n";
    atomic_write_file(out_dir / "dups_summary.json", out.str());
  }
  std::cout << "processed " << reader.stats().items_yielded << " record(s); "
            << agg.summary().duplicated_refs << " duplicated reference(s)\n";
  return 0;
}

int cmd_report(const std::filesystem::path& verdicts_path,
               const std::filesystem::path& records_dir, const std::filesystem::path& out_dir) {
  auto file = std::filesystem::is_directory(verdicts_path) ? verdicts_path / "verdicts.jsonl"
                                                           : verdicts_path;
  if (!file_exists(file)) {
    std::cerr << "error: no verdicts file at " << file << "\n";
    return 2;
  }
  auto verdicts = read_verdicts_jsonl(file);
  CreatedLookup lookup;
  if (std::filesystem::is_directory(records_dir)) lookup = records_dir_lookup(records_dir);
  return write_reports(out_dir, verdicts, lookup);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"refaudit: find references registered in scholarly metadata but absent "
               "from the published documents"};
  app.require_subcommand(1);

  std::string config_file;
  std::filesystem::path out_dir = "out";
  int jobs = 1;
  app.add_option("--config", config_file, "flat key=value config file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.fallthrough();  // global flags are accepted after the subcommand too

  // fetch
  auto* fetch = app.add_subcommand("fetch", "download Crossref records for a DOI list");
  std::filesystem::path doi_list, cache_dir = "cache";
  EndpointConfig endpoint;
  fetch->add_option("doi-list", doi_list, "file with one DOI per line")->required();
  fetch->add_option("--cache", cache_dir, "record cache directory");
  fetch->add_option("--api-base", endpoint.base_url, "works API base URL");
  fetch->add_option("--contact", endpoint.contact, "contact email for the API user agent");
  fetch->add_option("--delay", endpoint.delay_seconds, "politeness delay in seconds");
  fetch->add_option("--retries", endpoint.max_retries, "retry budget for 429/5xx");

  // extract
  auto* extract = app.add_subcommand("extract", "populate the TEI/text caches for a corpus");
  std::filesystem::path extract_corpus;
  ServiceConfig service;
  extract->add_option("corpus", extract_corpus, "corpus directory (pdf/ tei/ txt/)")->required();
  extract->add_option("--service", service.base_url, "reference-extraction service base URL");

  // detect
  auto* detect = app.add_subcommand("detect", "run detectors over cached records + corpus");
  PipelineConfig pipeline;
  std::string method = "all";
  std::filesystem::path detect_corpus;
  detect->add_option("corpus", detect_corpus, "corpus directory")->required();
  detect->add_option("--records", pipeline.records_dir, "cached records directory");
  detect->add_option("--method", method, "m0|m1|m2|all (comma lists accepted)");
  detect->add_option("--prefix", pipeline.benefit_prefix, "suspected beneficiary DOI prefix");
  detect->add_flag("--auto-prefix", pipeline.auto_prefix,
                   "infer the benefit prefix from trailing unmatched entries (heuristic)");
  detect->add_option("--theta", pipeline.theta, "full-text similarity threshold");
  detect->add_option("--theta-eq", pipeline.theta_eq, "reference equality threshold");
  detect->add_option("--min-needle", pipeline.min_needle,
                     "minimum normalized search-string length");
  detect->add_option("--service", pipeline.service_url,
                     "extraction service URL (cache misses call out when set)");

  // dups
  auto* dups = app.add_subcommand("dups", "duplicate-reference analytics over a snapshot");
  std::filesystem::path snapshot, state_dir;
  std::uint64_t min_dup_refs = 20;
  std::size_t top_n = 100;
  dups->add_option("snapshot", snapshot, "directory or tar of *.json.gz batches")->required();
  dups->add_option("--min-dup-refs", min_dup_refs,
                   "skip journals with fewer duplicated references");
  dups->add_option("--state", state_dir, "aggregate state directory (resumable)");
  dups->add_option("--top", top_n, "leaderboard size");

  // report
  auto* report = app.add_subcommand("report", "rebuild reports from verdicts.jsonl");
  std::filesystem::path verdicts_path, report_records = "cache/records";
  report->add_option("verdicts", verdicts_path, "verdicts.jsonl file or its directory")
      ->required();
  report->add_option("--records", report_records, "cached records directory");

  CLI11_PARSE(app, argc, argv);

  try {
    bool have_config = !config_file.empty();
    PipelineConfig file_config;
    if (have_config) file_config = config_from_file(config_file);

    if (*fetch) return cmd_fetch(doi_list, cache_dir, endpoint);
    if (*extract) return cmd_extract(extract_corpus, service);
    if (*detect) {
      // CLI flags win over the config file, which wins over defaults.
      if (have_config) {
        if (detect->count("--records") == 0) pipeline.records_dir = file_config.records_dir;
        if (detect->count("--prefix") == 0) pipeline.benefit_prefix = file_config.benefit_prefix;
        if (detect->count("--auto-prefix") == 0) pipeline.auto_prefix = file_config.auto_prefix;
        if (detect->count("--theta") == 0) pipeline.theta = file_config.theta;
        if (detect->count("--theta-eq") == 0) pipeline.theta_eq = file_config.theta_eq;
        if (detect->count("--min-needle") == 0) pipeline.min_needle = file_config.min_needle;
        if (detect->count("--service") == 0) pipeline.service_url = file_config.service_url;
        if (app.count("--jobs") == 0) jobs = file_config.jobs;
        if (app.count("--out") == 0) out_dir = file_config.out_dir;
      }
      if (detect->count("--method") > 0 || !have_config) {
        PipelineConfig tmp;
        apply_config_line(tmp, "method", method);
        pipeline.methods = tmp.methods;
      } else {
        pipeline.methods = file_config.methods;
      }
      pipeline.corpus_dir = detect_corpus;
      pipeline.out_dir = out_dir;
      pipeline.jobs = jobs;
      return run_pipeline(pipeline);
    }
    if (*dups) return cmd_dups(snapshot, out_dir, state_dir, min_dup_refs, top_n);
    if (*report) return cmd_report(verdicts_path, report_records, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
