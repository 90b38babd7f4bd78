#include "refaudit/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "refaudit/extract.hpp"

using nlohmann::json;

namespace refaudit {

CorpusTally tally_corpus(const std::vector<DocVerdict>& verdicts) {
  CorpusTally tally;
  bool first_flagged = true;
  for (const DocVerdict& v : verdicts) {
    ++tally.dois_processed;
    if (v.status == "no_refs") ++tally.no_reference;
    else if (v.status == "no_pdf") ++tally.no_pdf;
    else if (v.status == "no_extraction") ++tally.no_extraction;
    if (!v.case_id.empty()) {
      ++tally.cases[v.case_id];
      if (v.case_id == "case2" && v.cleaned_away > 0) ++tally.cases["case2_cleaned"];
    }
    tally.undecidable_total += v.undecidable_count;
    if (v.flagged) {
      ++tally.flagged;
      std::uint64_t n = v.ghost.size();
      tally.total_sneaked += n;
      if (first_flagged) {
        tally.min_sneaked = tally.max_sneaked = n;
        first_flagged = false;
      } else {
        tally.min_sneaked = std::min(tally.min_sneaked, n);
        tally.max_sneaked = std::max(tally.max_sneaked, n);
      }
    }
  }
  tally.mean_sneaked = tally.flagged == 0 ? 0.0
                                          : static_cast<double>(tally.total_sneaked) /
                                                static_cast<double>(tally.flagged);
  return tally;
}

bool is_container_work_type(std::string_view work_type) {
  return work_type == "journal-volume" || work_type == "journal-issue" ||
         work_type == "journal" || work_type == "book-series" ||
         work_type == "proceedings-series" || work_type == "report-series";
}

std::vector<BeneficiaryRecord> beneficiaries(const std::vector<DocVerdict>& verdicts,
                                             const CreatedLookup& created) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const DocVerdict& v : verdicts)
    for (const GhostRef& g : v.ghost)
      ++counts[g.doi && !g.doi->empty() ? *g.doi : std::string("(no-doi)")];

  std::vector<BeneficiaryRecord> out;
  out.reserve(counts.size());
  for (auto& [doi, n] : counts) {
    BeneficiaryRecord rec;
    rec.cited_doi = doi;
    rec.undue_count = n;
    if (created && doi != "(no-doi)") {
      if (auto meta = created(doi)) {
        rec.cited_created = meta->created;
        rec.volume_level = is_container_work_type(meta->work_type);
      }
    }
    out.push_back(std::move(rec));
  }
  std::sort(out.begin(), out.end(), [](const BeneficiaryRecord& a, const BeneficiaryRecord& b) {
    if (a.undue_count != b.undue_count) return a.undue_count > b.undue_count;
    return a.cited_doi < b.cited_doi;
  });
  return out;
}

std::pair<std::vector<TemporalPair>, TemporalSummary> temporal_coherence(
    const std::vector<GhostPair>& pairs) {
  std::vector<TemporalPair> out;
  TemporalSummary summary;
  for (const GhostPair& p : pairs) {
    if (!p.citing_created || !p.cited_created) {
      ++summary.excluded_missing;
      continue;
    }
    TemporalPair t;
    t.citing_doi = p.citing_doi;
    t.cited_doi = p.cited_doi;
    t.citing_created = *p.citing_created;
    t.cited_created = *p.cited_created;
    t.delta_days = delta_days(t.citing_created, t.cited_created);
    if (t.delta_days < 0) ++summary.negative_count;
    out.push_back(std::move(t));
  }
  summary.pairs = out.size();
  if (!out.empty()) {
    std::vector<long long> deltas;
    deltas.reserve(out.size());
    for (const auto& t : out) deltas.push_back(t.delta_days);
    std::sort(deltas.begin(), deltas.end());
    summary.min_delta = deltas.front();
    std::size_t n = deltas.size();
    summary.median_delta = n % 2 == 1 ? static_cast<double>(deltas[n / 2])
                                      : (static_cast<double>(deltas[n / 2 - 1]) +
                                         static_cast<double>(deltas[n / 2])) /
                                            2.0;
    // Mode: most frequent delta, smallest value on ties.
    long long mode = deltas[0], best_count = 0, run_value = deltas[0], run = 0;
    for (long long d : deltas) {
      if (d == run_value) {
        ++run;
      } else {
        if (run > best_count) {
          best_count = run;
          mode = run_value;
        }
        run_value = d;
        run = 1;
      }
    }
    if (run > best_count) mode = run_value;
    summary.mode_delta = mode;
  }
  return {std::move(out), summary};
}

Histogram histogram(const std::vector<double>& values, double bin_width) {
  Histogram h;
  if (values.empty()) return h;
  if (!(bin_width > 0.0)) throw std::invalid_argument("histogram: bin_width must be positive");
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  double start = std::floor(lo / bin_width) * bin_width;
  std::size_t nbins = static_cast<std::size_t>(std::floor((hi - start) / bin_width)) + 1;
  h.bins.resize(nbins);
  for (std::size_t i = 0; i < nbins; ++i) {
    h.bins[i].lower = start + static_cast<double>(i) * bin_width;
    h.bins[i].upper = start + static_cast<double>(i + 1) * bin_width;
  }
  for (double v : values) {
    auto idx = static_cast<std::size_t>(std::floor((v - start) / bin_width));
    if (idx >= nbins) idx = nbins - 1;  // guard the exact upper edge under fp rounding
    ++h.bins[idx].count;
  }
  return h;
}

Histogram histogram(const std::vector<double>& values, const std::vector<double>& bin_edges) {
  Histogram h;
  if (bin_edges.size() < 2 || !std::is_sorted(bin_edges.begin(), bin_edges.end()))
    throw std::invalid_argument("histogram: need at least two sorted edges");
  if (values.empty()) return h;
  h.bins.resize(bin_edges.size() - 1);
  for (std::size_t i = 0; i + 1 < bin_edges.size(); ++i) {
    h.bins[i].lower = bin_edges[i];
    h.bins[i].upper = bin_edges[i + 1];
  }
  for (double v : values) {
    auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), v);
    if (it == bin_edges.begin() || it == bin_edges.end()) continue;  // outside the edges
    ++h.bins[static_cast<std::size_t>(it - bin_edges.begin()) - 1].count;
  }
  return h;
}

std::string histogram_csv(const Histogram& h) {
  std::ostringstream out;
  out << "lower,upper,count\n";
  for (const auto& b : h.bins) out << b.lower << ',' << b.upper << ',' << b.count << '\n';
  return out.str();
}

PipelineConfig config_from_file(const std::filesystem::path& path) {
  PipelineConfig config;
  for (const std::string& raw : split_lines(read_file(path))) {
    std::string_view line = trim_view(raw);
    if (line.empty() || line[0] == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::runtime_error("config line without '=': " + std::string(line));
    std::string key(trim_view(line.substr(0, eq)));
    std::string value(trim_view(line.substr(eq + 1)));
    apply_config_line(config, key, value);
  }
  return config;
}

void apply_config_line(PipelineConfig& config, const std::string& key, const std::string& value) {
  if (key == "records") config.records_dir = value;
  else if (key == "corpus") config.corpus_dir = value;
  else if (key == "out") config.out_dir = value;
  else if (key == "method") {
    config.methods.clear();
    if (value == "all") {
      config.methods = {"m0", "m1", "m2"};
    } else {
      std::stringstream ss(value);
      std::string m;
      while (std::getline(ss, m, ',')) {
        if (m != "m0" && m != "m1" && m != "m2")
          throw std::runtime_error("unknown detector: " + m);
        config.methods.push_back(m);
      }
    }
  } else if (key == "prefix") config.benefit_prefix = value;
  else if (key == "auto_prefix") config.auto_prefix = value == "1" || value == "true";
  else if (key == "theta") config.theta = std::stod(value);
  else if (key == "theta_eq") config.theta_eq = std::stod(value);
  else if (key == "min_needle") config.min_needle = std::stoul(value);
  else if (key == "jobs") config.jobs = std::stoi(value);
  else if (key == "service_url") config.service_url = value;
  else throw std::runtime_error("unknown config key: " + key);
}

std::vector<DocVerdict> read_verdicts_jsonl(const std::filesystem::path& path) {
  std::vector<DocVerdict> out;
  for (const std::string& line : split_lines(read_file(path))) {
    if (trim_view(line).empty()) continue;
    out.push_back(verdict_from_json(line));
  }
  return out;
}

CreatedLookup records_dir_lookup(const std::filesystem::path& records_dir) {
  auto cache = std::make_shared<std::unordered_map<std::string, std::optional<CitedMeta>>>();
  auto mutex = std::make_shared<std::mutex>();
  return [records_dir, cache, mutex](const std::string& doi) -> std::optional<CitedMeta> {
    std::lock_guard<std::mutex> lock(*mutex);
    auto it = cache->find(doi);
    if (it != cache->end()) return it->second;
    std::optional<CitedMeta> meta;
    auto path = records_dir / (percent_encode(doi) + ".json");
    if (file_exists(path)) {
      try {
        CrossrefRecord rec = parse_record(read_file(path));
        meta = CitedMeta{rec.created, rec.work_type};
      } catch (const std::exception&) {
      }
    }
    (*cache)[doi] = meta;
    return meta;
  };
}

namespace {

json tally_to_json(const CorpusTally& t) {
  json j;
  j["dois_processed"] = t.dois_processed;
  j["no_reference"] = t.no_reference;
  j["no_pdf"] = t.no_pdf;
  j["no_extraction"] = t.no_extraction;
  j["flagged"] = t.flagged;
  j["total_sneaked"] = t.total_sneaked;
  j["min_sneaked"] = t.min_sneaked;
  j["max_sneaked"] = t.max_sneaked;
  j["mean_sneaked"] = t.mean_sneaked;
  j["undecidable_total"] = t.undecidable_total;
  j["cases"] = t.cases;
  return j;
}

std::string beneficiaries_csv(const std::vector<BeneficiaryRecord>& records) {
  std::ostringstream out;
  out << "cited_doi,undue_count,cited_created,volume_level\n";
  for (const auto& r : records) {
    out << csv_field(r.cited_doi) << ',' << r.undue_count << ','
        << (r.cited_created ? format_iso8601(*r.cited_created) : "") << ','
        << (r.volume_level ? "1" : "0") << '\n';
  }
  return out.str();
}

std::string temporal_csv(const std::vector<TemporalPair>& pairs) {
  std::ostringstream out;
  out << "citing_doi,cited_doi,citing_created,cited_created,delta_days\n";
  for (const auto& p : pairs) {
    out << csv_field(p.citing_doi) << ',' << csv_field(p.cited_doi) << ','
        << format_iso8601(p.citing_created) << ',' << format_iso8601(p.cited_created) << ','
        << p.delta_days << '\n';
  }
  return out.str();
}

}  // namespace

int write_reports(const std::filesystem::path& out_dir, const std::vector<DocVerdict>& verdicts,
                  const CreatedLookup& created) {
  std::filesystem::create_directories(out_dir);

  std::map<std::string, std::vector<DocVerdict>> by_method;
  for (const DocVerdict& v : verdicts) by_method[v.method].push_back(v);

  json summary;
  for (const auto& [method, stream] : by_method)
    summary["tally"][method] = tally_to_json(tally_corpus(stream));

  // Method agreement, per DOI, when both detectors ran.
  if (by_method.count("m1") && by_method.count("m2")) {
    std::unordered_map<std::string, std::size_t> m1_ghosts;
    for (const DocVerdict& v : by_method["m1"])
      if (v.status == "ok" && v.case_id != "nodata") m1_ghosts[v.doi] = v.ghost.size();
    std::uint64_t agree = 0, disagree = 0, large = 0;
    for (const DocVerdict& v : by_method["m2"]) {
      if (v.status != "ok") continue;
      auto it = m1_ghosts.find(v.doi);
      if (it == m1_ghosts.end()) continue;
      long long delta =
          static_cast<long long>(v.ghost.size()) - static_cast<long long>(it->second);
      if (delta == 0) ++agree;
      else {
        ++disagree;
        if (delta > 10 || delta < -10) ++large;
      }
    }
    summary["agreement"]["agree"] = agree;
    summary["agreement"]["disagree"] = disagree;
    summary["agreement"]["large_disagreements"] = large;
  }

  // Beneficiary / temporal analyses follow the strongest available method.
  std::string report_method;
  for (const char* m : {"m1", "m2"})
    if (by_method.count(m)) {
      report_method = m;
      break;
    }
  if (!report_method.empty()) {
    const auto& stream = by_method[report_method];
    summary["report_method"] = report_method;

    auto benef = beneficiaries(stream, created);
    atomic_write_file(out_dir / "beneficiaries.csv", beneficiaries_csv(benef));

    std::vector<GhostPair> pairs;
    for (const DocVerdict& v : stream) {
      std::optional<Instant> citing;
      if (created)
        if (auto meta = created(v.doi)) citing = meta->created;
      for (const GhostRef& g : v.ghost) {
        if (!g.doi || g.doi->empty()) continue;
        GhostPair p;
        p.citing_doi = v.doi;
        p.cited_doi = *g.doi;
        p.citing_created = citing;
        if (created)
          if (auto meta = created(*g.doi)) p.cited_created = meta->created;
        pairs.push_back(std::move(p));
      }
    }
    auto [temporal, tsummary] = temporal_coherence(pairs);
    atomic_write_file(out_dir / "temporal.csv", temporal_csv(temporal));
    summary["temporal"]["pairs"] = tsummary.pairs;
    summary["temporal"]["excluded_missing"] = tsummary.excluded_missing;
    summary["temporal"]["negative_count"] = tsummary.negative_count;
    summary["temporal"]["min_delta_days"] = tsummary.min_delta;
    summary["temporal"]["median_delta_days"] = tsummary.median_delta;
    summary["temporal"]["mode_delta_days"] = tsummary.mode_delta;

    std::vector<double> per_doi;
    for (const DocVerdict& v : stream)
      if (v.status == "ok") per_doi.push_back(static_cast<double>(v.ghost.size()));
    atomic_write_file(out_dir / "hist_sneaked_per_doi.csv", histogram_csv(histogram(per_doi, 1.0)));

    std::vector<double> benef_counts;
    for (const auto& b : benef) benef_counts.push_back(static_cast<double>(b.undue_count));
    atomic_write_file(out_dir / "hist_benef.csv", histogram_csv(histogram(benef_counts, 1.0)));

    std::vector<double> delta_values;
    for (const auto& t : temporal) delta_values.push_back(static_cast<double>(t.delta_days));
    atomic_write_file(out_dir / "hist_delta_days.csv",
                      histogram_csv(histogram(delta_values, 1.0)));
  }

  atomic_write_file(out_dir / "summary.json", summary.dump(2) + "\n");
  return 0;
}

namespace {

DocVerdict base_verdict(const std::string& doi, const std::string& method,
                        const CrossrefRecord& record, const ExtractOutcome& outcome) {
  DocVerdict v;
  v.doi = doi;
  v.method = method;
  v.status = "ok";
  v.n_registered = record.references.size();
  if (outcome.refs) v.n_extracted = outcome.refs->size();
  return v;
}

std::string availability_status(const ExtractOutcome& outcome, bool needs_refs) {
  if (outcome.no_pdf) return "no_pdf";
  if (needs_refs) return (outcome.refs && !outcome.refs->empty()) ? "ok" : "no_extraction";
  return (outcome.fulltext && !outcome.fulltext->text.empty()) ? "ok" : "no_extraction";
}

}  // namespace

int run_pipeline(const PipelineConfig& config) {
  if (!std::filesystem::is_directory(config.records_dir)) {
    std::cerr << "error: records directory not found: " << config.records_dir << "\n";
    return 2;
  }
  if (!config.corpus_dir.empty() && !std::filesystem::is_directory(config.corpus_dir)) {
    std::cerr << "error: corpus directory not found: " << config.corpus_dir << "\n";
    return 2;
  }
  for (const std::string& m : config.methods) {
    if (m != "m0" && m != "m1" && m != "m2") {
      std::cerr << "error: unknown detector: " << m << "\n";
      return 2;
    }
  }
  bool wants_m1 =
      std::find(config.methods.begin(), config.methods.end(), "m1") != config.methods.end();
  if (wants_m1 && config.benefit_prefix.empty() && !config.auto_prefix) {
    std::cerr << "error: m1 needs --prefix (or --auto-prefix)\n";
    return 2;
  }

  std::vector<std::filesystem::path> record_files;
  for (const auto& e : std::filesystem::directory_iterator(config.records_dir))
    if (e.is_regular_file() && e.path().extension() == ".json") record_files.push_back(e.path());
  std::sort(record_files.begin(), record_files.end());

  ServiceConfig service;
  const ServiceConfig* service_ptr = nullptr;
  if (!config.service_url.empty()) {
    service.base_url = config.service_url;
    service_ptr = &service;
  }

  std::vector<std::vector<DocVerdict>> results(record_files.size());
  std::atomic<std::size_t> next_index{0};
  std::atomic<std::uint64_t> failures{0};
  std::mutex log_mutex;

  auto worker = [&] {
    while (true) {
      std::size_t i = next_index.fetch_add(1);
      if (i >= record_files.size()) break;
      const auto& path = record_files[i];
      try {
        CrossrefRecord record = parse_record(read_file(path));
        ExtractOutcome outcome = config.corpus_dir.empty()
                                     ? ExtractOutcome{}
                                     : load_or_extract(record.doi, config.corpus_dir, service_ptr);
        if (config.corpus_dir.empty()) outcome.no_pdf = true;

        std::string prefix = config.benefit_prefix;
        if (prefix.empty() && config.auto_prefix && outcome.refs) {
          auto inferred =
              infer_benefit_prefix(record.references, *outcome.refs, config.theta_eq);
          if (inferred) prefix = *inferred;
        }

        for (const std::string& method : config.methods) {
          DocVerdict v = base_verdict(record.doi, method, record, outcome);
          for (const auto& w : outcome.warnings) v.warnings.push_back(w);
          if (record.references.empty()) {
            v.status = "no_refs";
          } else if (method == "m0") {
            v.status = availability_status(outcome, true);
            if (v.status == "ok") {
              M0Estimate est = m0_estimate(record.references, *outcome.refs);
              v.flagged = est.flagged;
              v.n_extracted = est.extracted_count;
              // M0 has no per-entry ghosts; the estimate rides in the CSV as
              // n_registered - n_extracted.
            }
          } else if (method == "m1") {
            v.status = availability_status(outcome, true);
            if (v.status == "ok") {
              M1Verdict m1 = m1_classify(record.references, *outcome.refs, prefix,
                                         config.theta_eq);
              v.case_id = to_string(m1.case_id);
              v.cleaned_away = m1.cleaned_away;
              for (const auto& e : m1.ghost) v.ghost.push_back(make_ghost_ref(e));
              for (const auto& w : m1.warnings) v.warnings.push_back(w);
              v.flagged = !v.ghost.empty();
            } else {
              v.case_id = "nodata";
            }
          } else {  // m2
            v.status = availability_status(outcome, false);
            if (v.status == "ok") {
              M2Options options;
              options.theta = config.theta;
              options.min_needle = config.min_needle;
              M2Verdict m2 = m2_detect(record.references, *outcome.fulltext, options);
              for (const auto& e : m2.ghost) v.ghost.push_back(make_ghost_ref(e));
              v.undecidable_count = m2.undecidable.size();
              for (const auto& w : m2.warnings) v.warnings.push_back(w);
              v.flagged = !v.ghost.empty();
            }
          }
          results[i].push_back(std::move(v));
        }
      } catch (const std::exception& e) {
        ++failures;
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << "warn: " << path.filename().string() << ": " << e.what() << "\n";
      }
    }
  };

  int jobs = std::max(1, config.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::filesystem::create_directories(config.out_dir);
  std::vector<DocVerdict> verdicts;
  {
    std::ostringstream jsonl, csv;
    csv << verdict_csv_header() << '\n';
    for (const auto& doc : results)
      for (const auto& v : doc) {
        jsonl << verdict_to_json(v) << '\n';
        csv << verdict_csv_row(v) << '\n';
        verdicts.push_back(v);
      }
    atomic_write_file(config.out_dir / "verdicts.jsonl", jsonl.str());
    atomic_write_file(config.out_dir / "verdicts.csv", csv.str());
  }

  write_reports(config.out_dir, verdicts, records_dir_lookup(config.records_dir));
  if (failures > 0)
    std::cerr << "note: " << failures.load() << " record(s) skipped with errors\n";
  return 0;
}

}  // namespace refaudit
