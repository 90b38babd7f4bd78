#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "refaudit/ingest.hpp"

namespace refaudit {

/// Per-document duplicate counts: surplus entries and distinct duplicated refs.
struct DupDocStats {
  std::string doi;
  std::uint64_t nbrefdup_plus = 0;  // sum over duplicated refs of (multiplicity - 1)
  std::uint64_t nbrefdup = 0;       // distinct cited DOIs with multiplicity > 1
};

struct BenefStats {
  std::uint64_t benef_plus = 0;  // surplus duplicate citations received
  std::uint64_t benef = 0;       // citing docs that duplicated this target
};

struct JournalDup {
  std::uint64_t jourdup_plus = 0;  // sum of nbrefdup_plus over the journal's docs
  std::uint64_t jourdup = 0;       // docs with at least one duplicate
};

struct AuthorJournalScore {
  std::string journal;
  std::string author;
  std::uint64_t dup_to_author = 0;  // duplicated refs in journal citing the author
  std::uint64_t dup_total = 0;      // duplicated refs in journal
  std::uint64_t ref_to_author = 0;  // distinct refs in journal citing the author
  std::uint64_t ref_total = 0;      // distinct refs in journal
  double s1a = 0.0;
  double s1b = 0.0;
  double s1 = 0.0;
};

struct SnapshotSummary {
  std::uint64_t docs = 0;
  std::uint64_t docs_skipped_type = 0;  // books / book chapters
  std::uint64_t entries = 0;            // reference entries carrying a DOI
  std::uint64_t entries_no_doi = 0;
  std::uint64_t distinct = 0;           // distinct (doc, cited-doi) pairs
  std::uint64_t duplicated_refs = 0;    // pairs with multiplicity > 1
  std::uint64_t surplus = 0;            // entries - distinct

  double avg_duplicates() const {
    return duplicated_refs == 0
               ? 0.0
               : static_cast<double>(surplus) / static_cast<double>(duplicated_refs);
  }
};

/// Books and book chapters are excluded from duplicate analysis (chapter
/// deposits reuse the book DOI, which fakes duplicates).
bool graph_eligible(const CrossrefRecord& record);

/// Normalized container title, or "(none)".
std::string journal_key(const CrossrefRecord& record);

/// Lowercased, diacritics-folded full name.
std::string author_key(std::string_view name);

double s1_score(std::uint64_t dup_to_author, std::uint64_t dup_total,
                std::uint64_t ref_to_author, std::uint64_t ref_total);

DupDocStats doc_dup_stats(const CrossrefRecord& record);

/// Mergeable partial aggregate over a record stream: shard freely, merge
/// field-wise (associative, commutative, identity = default-constructed).
class DupAggregates {
 public:
  void add(const CrossrefRecord& record);
  void merge(const DupAggregates& other);

  const std::unordered_map<std::string, BenefStats>& benef() const { return benef_; }
  const std::unordered_map<std::string, JournalDup>& journals() const { return journal_dup_; }
  const SnapshotSummary& summary() const { return summary_; }

  std::vector<AuthorJournalScore> author_journal_scores(std::uint64_t min_dup_refs = 20) const;

  /// Sorted TSV files, one per metric, resumable via load + merge.
  void save(const std::filesystem::path& dir) const;
  static DupAggregates load(const std::filesystem::path& dir);

 private:
  struct CitedCounts {
    std::uint64_t ref_pairs = 0;  // citing docs in the journal referencing this DOI
    std::uint64_t dup_pairs = 0;  // of which with duplicates
  };
  struct JournalTotals {
    std::uint64_t ref_total = 0;
    std::uint64_t dup_total = 0;
  };

  std::unordered_map<std::string, BenefStats> benef_;
  std::unordered_map<std::string, JournalDup> journal_dup_;
  std::unordered_map<std::string, JournalTotals> journal_totals_;
  std::unordered_map<std::string, std::unordered_map<std::string, CitedCounts>> journal_cited_;
  std::unordered_map<std::string, std::vector<std::string>> doc_authors_;
  SnapshotSummary summary_;
};

std::unordered_map<std::string, BenefStats> aggregate_benef(
    const std::vector<CrossrefRecord>& records);
std::unordered_map<std::string, JournalDup> aggregate_journal(
    const std::vector<CrossrefRecord>& records);
std::vector<AuthorJournalScore> score_author_journal(const std::vector<CrossrefRecord>& records,
                                                     std::uint64_t min_dup_refs = 20);
SnapshotSummary snapshot_summary(const std::vector<CrossrefRecord>& records);

/// k largest by metric, ties broken by key ascending.
template <class Map, class Metric>
auto top_k(const Map& metric_map, std::size_t k, Metric metric)
    -> std::vector<std::pair<typename Map::key_type, typename Map::mapped_type>> {
  std::vector<std::pair<typename Map::key_type, typename Map::mapped_type>> rows(
      metric_map.begin(), metric_map.end());
  std::sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) {
    auto ma = metric(a.second), mb = metric(b.second);
    if (ma != mb) return ma > mb;
    return a.first < b.first;
  });
  if (rows.size() > k) rows.resize(k);
  return rows;
}

}  // namespace refaudit
