#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "refaudit/detectors.hpp"
#include "refaudit/util.hpp"

namespace refaudit {

struct BeneficiaryRecord {
  std::string cited_doi;  // "(no-doi)" bucket for ghosts without one
  std::uint64_t undue_count = 0;
  std::optional<Instant> cited_created;
  bool volume_level = false;  // cited metadata marks a container, not an article
};

struct GhostPair {
  std::string citing_doi;
  std::string cited_doi;
  std::optional<Instant> citing_created;
  std::optional<Instant> cited_created;
};

struct TemporalPair {
  std::string citing_doi;
  std::string cited_doi;
  Instant citing_created;
  Instant cited_created;
  long long delta_days = 0;  // citing - cited, calendar days UTC
};

struct TemporalSummary {
  std::uint64_t pairs = 0;
  std::uint64_t excluded_missing = 0;
  std::uint64_t negative_count = 0;  // expected 0; nonzero is itself an anomaly
  long long min_delta = 0;
  double median_delta = 0.0;
  long long mode_delta = 0;
};

struct CorpusTally {
  std::uint64_t dois_processed = 0;
  std::uint64_t no_reference = 0;
  std::uint64_t no_pdf = 0;
  std::uint64_t no_extraction = 0;
  std::uint64_t flagged = 0;
  std::uint64_t total_sneaked = 0;
  std::uint64_t min_sneaked = 0;  // over flagged DOIs
  std::uint64_t max_sneaked = 0;
  double mean_sneaked = 0.0;
  std::map<std::string, std::uint64_t> cases;  // case1/case2/case2_cleaned/case3/nodata
  std::uint64_t undecidable_total = 0;
};

/// Stream of one detector's verdicts -> corpus totals.
CorpusTally tally_corpus(const std::vector<DocVerdict>& verdicts);

struct CitedMeta {
  std::optional<Instant> created;
  std::string work_type;
};

using CreatedLookup = std::function<std::optional<CitedMeta>(const std::string& doi)>;

/// Work types that identify a container rather than an individual article.
bool is_container_work_type(std::string_view work_type);

/// Ghost entries grouped by cited DOI, sorted by count descending, ties by DOI.
std::vector<BeneficiaryRecord> beneficiaries(const std::vector<DocVerdict>& verdicts,
                                             const CreatedLookup& created);

std::pair<std::vector<TemporalPair>, TemporalSummary> temporal_coherence(
    const std::vector<GhostPair>& pairs);

struct Histogram {
  struct Bin {
    double lower = 0.0;  // inclusive
    double upper = 0.0;  // exclusive
    std::uint64_t count = 0;
  };
  std::vector<Bin> bins;
};

Histogram histogram(const std::vector<double>& values, double bin_width);
Histogram histogram(const std::vector<double>& values, const std::vector<double>& bin_edges);
std::string histogram_csv(const Histogram& h);

struct PipelineConfig {
  std::filesystem::path records_dir = "cache/records";
  std::filesystem::path corpus_dir;
  std::filesystem::path out_dir = "out";
  std::vector<std::string> methods = {"m1", "m2"};
  std::string benefit_prefix;
  bool auto_prefix = false;  // heuristic inference when no prefix given
  double theta = 60.0;
  double theta_eq = 90.0;
  std::size_t min_needle = 30;
  int jobs = 1;
  std::string service_url;  // when set, detect may call the extraction service
};

/// key=value lines, '#' comments; keys mirror the CLI flags.
PipelineConfig config_from_file(const std::filesystem::path& path);
void apply_config_line(PipelineConfig& config, const std::string& key, const std::string& value);

/// ingest -> extract -> detect -> report. Returns 0 unless a fatal
/// configuration or IO error occurs; findings never change the exit status.
int run_pipeline(const PipelineConfig& config);

/// Rebuilds summary/beneficiary/temporal/histogram outputs from an existing
/// verdicts.jsonl (the `report` subcommand).
int write_reports(const std::filesystem::path& out_dir, const std::vector<DocVerdict>& verdicts,
                  const CreatedLookup& created);

std::vector<DocVerdict> read_verdicts_jsonl(const std::filesystem::path& path);

/// Cached-record lookup rooted at a records directory.
CreatedLookup records_dir_lookup(const std::filesystem::path& records_dir);

}  // namespace refaudit
