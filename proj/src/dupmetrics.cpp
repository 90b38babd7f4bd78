#include "refaudit/dupmetrics.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <fstream>
#include <sstream>

#include "refaudit/matchcore.hpp"
#include "refaudit/util.hpp"

namespace refaudit {

bool graph_eligible(const CrossrefRecord& record) {
  return record.work_type != "book" && record.work_type != "book-chapter";
}

std::string journal_key(const CrossrefRecord& record) {
  if (!record.container_title || record.container_title->empty()) return "(none)";
  std::string key = normalize(*record.container_title);
  return key.empty() ? "(none)" : key;
}

std::string author_key(std::string_view name) {
  icu::UnicodeString input =
      icu::UnicodeString::fromUTF8(icu::StringPiece(name.data(), static_cast<int32_t>(name.size())));
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkd = icu::Normalizer2::getNFKDInstance(status);
  if (U_SUCCESS(status) && nfkd) {
    icu::UnicodeString decomposed = nfkd->normalize(input, status);
    if (U_SUCCESS(status)) {
      icu::UnicodeString stripped;
      for (int32_t i = 0; i < decomposed.length();) {
        UChar32 cp = decomposed.char32At(i);
        i += U16_LENGTH(cp);
        if (u_charType(cp) == U_NON_SPACING_MARK) continue;
        stripped.append(cp);
      }
      input = stripped;
    }
  }
  std::string utf8;
  input.toUTF8String(utf8);
  std::string folded = normalize(utf8);  // NFKC casefold + whitespace collapse
  // Drop stray punctuation so "Hendry, D.F." and "D F Hendry" key closer.
  std::string out;
  bool pending_space = false;
  for (char c : folded) {
    if (c == '.' || c == ',' || c == ';') {
      pending_space = true;
      continue;
    }
    if (c == ' ') {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

double s1_score(std::uint64_t dup_to_author, std::uint64_t dup_total,
                std::uint64_t ref_to_author, std::uint64_t ref_total) {
  double s1a = ref_total == 0
                   ? 0.0
                   : static_cast<double>(ref_to_author) / static_cast<double>(ref_total);
  double s1b = dup_total == 0
                   ? 0.0
                   : static_cast<double>(dup_to_author) / static_cast<double>(dup_total);
  return (s1b - s1a) * static_cast<double>(dup_to_author) + 0.0;  // fold -0 into +0
}

namespace {

// Multiplicity of every cited DOI in one record, in citation order.
std::map<std::string, std::uint64_t> cited_multiplicities(const CrossrefRecord& record,
                                                          std::uint64_t* no_doi = nullptr) {
  std::map<std::string, std::uint64_t> counts;
  for (const ReferenceEntry& ref : record.references) {
    if (ref.doi && !ref.doi->empty()) {
      ++counts[*ref.doi];
    } else if (no_doi) {
      ++*no_doi;
    }
  }
  return counts;
}

}  // namespace

DupDocStats doc_dup_stats(const CrossrefRecord& record) {
  DupDocStats stats;
  stats.doi = record.doi;
  for (const auto& [cited, mult] : cited_multiplicities(record)) {
    if (mult > 1) {
      stats.nbrefdup_plus += mult - 1;
      ++stats.nbrefdup;
    }
  }
  return stats;
}

void DupAggregates::add(const CrossrefRecord& record) {
  if (!record.authors.empty()) {
    auto& authors = doc_authors_[record.doi];
    if (authors.empty())
      for (const auto& name : record.authors) {
        std::string key = author_key(name);
        if (!key.empty()) authors.push_back(std::move(key));
      }
  }

  if (!graph_eligible(record)) {
    ++summary_.docs_skipped_type;
    return;
  }
  ++summary_.docs;

  std::uint64_t no_doi = 0;
  auto counts = cited_multiplicities(record, &no_doi);
  summary_.entries_no_doi += no_doi;

  const std::string journal = journal_key(record);
  auto& totals = journal_totals_[journal];
  std::uint64_t doc_surplus = 0, doc_dups = 0;

  for (const auto& [cited, mult] : counts) {
    summary_.entries += mult;
    ++summary_.distinct;
    auto& cited_counts = journal_cited_[journal][cited];
    ++cited_counts.ref_pairs;
    ++totals.ref_total;
    if (mult > 1) {
      ++summary_.duplicated_refs;
      summary_.surplus += mult - 1;
      doc_surplus += mult - 1;
      ++doc_dups;
      ++cited_counts.dup_pairs;
      ++totals.dup_total;
      auto& b = benef_[cited];
      b.benef_plus += mult - 1;
      ++b.benef;
    }
  }

  if (doc_surplus > 0) {
    auto& j = journal_dup_[journal];
    j.jourdup_plus += doc_surplus;
    ++j.jourdup;
  }
}

void DupAggregates::merge(const DupAggregates& other) {
  for (const auto& [k, v] : other.benef_) {
    auto& b = benef_[k];
    b.benef_plus += v.benef_plus;
    b.benef += v.benef;
  }
  for (const auto& [k, v] : other.journal_dup_) {
    auto& j = journal_dup_[k];
    j.jourdup_plus += v.jourdup_plus;
    j.jourdup += v.jourdup;
  }
  for (const auto& [k, v] : other.journal_totals_) {
    auto& j = journal_totals_[k];
    j.ref_total += v.ref_total;
    j.dup_total += v.dup_total;
  }
  for (const auto& [j, cited] : other.journal_cited_) {
    auto& mine = journal_cited_[j];
    for (const auto& [doi, c] : cited) {
      auto& m = mine[doi];
      m.ref_pairs += c.ref_pairs;
      m.dup_pairs += c.dup_pairs;
    }
  }
  for (const auto& [doi, authors] : other.doc_authors_) {
    auto it = doc_authors_.find(doi);
    if (it == doc_authors_.end()) doc_authors_[doi] = authors;
  }
  summary_.docs += other.summary_.docs;
  summary_.docs_skipped_type += other.summary_.docs_skipped_type;
  summary_.entries += other.summary_.entries;
  summary_.entries_no_doi += other.summary_.entries_no_doi;
  summary_.distinct += other.summary_.distinct;
  summary_.duplicated_refs += other.summary_.duplicated_refs;
  summary_.surplus += other.summary_.surplus;
}

std::vector<AuthorJournalScore> DupAggregates::author_journal_scores(
    std::uint64_t min_dup_refs) const {
  std::vector<AuthorJournalScore> out;
  for (const auto& [journal, cited_map] : journal_cited_) {
    auto totals_it = journal_totals_.find(journal);
    if (totals_it == journal_totals_.end()) continue;
    const JournalTotals& totals = totals_it->second;
    if (totals.dup_total < min_dup_refs) continue;

    std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> per_author;  // ref, dup
    for (const auto& [doi, counts] : cited_map) {
      auto authors_it = doc_authors_.find(doi);
      if (authors_it == doc_authors_.end()) continue;
      for (const auto& author : authors_it->second) {
        auto& acc = per_author[author];
        acc.first += counts.ref_pairs;
        acc.second += counts.dup_pairs;
      }
    }
    for (const auto& [author, acc] : per_author) {
      AuthorJournalScore score;
      score.journal = journal;
      score.author = author;
      score.ref_to_author = acc.first;
      score.dup_to_author = acc.second;
      score.ref_total = totals.ref_total;
      score.dup_total = totals.dup_total;
      score.s1a = totals.ref_total == 0 ? 0.0
                                        : static_cast<double>(score.ref_to_author) /
                                              static_cast<double>(totals.ref_total);
      score.s1b = totals.dup_total == 0 ? 0.0
                                        : static_cast<double>(score.dup_to_author) /
                                              static_cast<double>(totals.dup_total);
      score.s1 = s1_score(score.dup_to_author, score.dup_total, score.ref_to_author,
                          score.ref_total);
      out.push_back(std::move(score));
    }
  }
  std::sort(out.begin(), out.end(), [](const AuthorJournalScore& a, const AuthorJournalScore& b) {
    if (a.s1 != b.s1) return a.s1 > b.s1;
    if (a.journal != b.journal) return a.journal < b.journal;
    return a.author < b.author;
  });
  return out;
}

namespace {

template <class Map, class Writer>
void write_sorted_tsv(const std::filesystem::path& path, const Map& map, Writer writer) {
  std::vector<typename Map::key_type> keys;
  keys.reserve(map.size());
  for (const auto& [k, v] : map) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  std::ostringstream out;
  for (const auto& k : keys) writer(out, k, map.at(k));
  atomic_write_file(path, out.str());
}

std::vector<std::string> tsv_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == '\t') {
      fields.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return fields;
}

}  // namespace

void DupAggregates::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  write_sorted_tsv(dir / "benef.tsv", benef_, [](std::ostream& out, const std::string& k,
                                                 const BenefStats& v) {
    out << k << '\t' << v.benef_plus << '\t' << v.benef << '\n';
  });
  write_sorted_tsv(dir / "journal.tsv", journal_dup_, [](std::ostream& out, const std::string& k,
                                                         const JournalDup& v) {
    out << k << '\t' << v.jourdup_plus << '\t' << v.jourdup << '\n';
  });
  write_sorted_tsv(dir / "journal_totals.tsv", journal_totals_,
                   [](std::ostream& out, const std::string& k, const JournalTotals& v) {
                     out << k << '\t' << v.ref_total << '\t' << v.dup_total << '\n';
                   });
  {
    std::vector<std::string> keys;
    for (const auto& [j, _] : journal_cited_) keys.push_back(j);
    std::sort(keys.begin(), keys.end());
    std::ostringstream out;
    for (const auto& j : keys) {
      std::vector<std::string> dois;
      const auto& cited = journal_cited_.at(j);
      for (const auto& [doi, _] : cited) dois.push_back(doi);
      std::sort(dois.begin(), dois.end());
      for (const auto& doi : dois) {
        const CitedCounts& c = cited.at(doi);
        out << j << '\t' << doi << '\t' << c.ref_pairs << '\t' << c.dup_pairs << '\n';
      }
    }
    atomic_write_file(dir / "journal_cited.tsv", out.str());
  }
  write_sorted_tsv(dir / "doc_authors.tsv", doc_authors_,
                   [](std::ostream& out, const std::string& k, const std::vector<std::string>& v) {
                     out << k << '\t';
                     for (std::size_t i = 0; i < v.size(); ++i) {
                       if (i) out << '|';
                       out << v[i];
                     }
                     out << '\n';
                   });
  {
    std::ostringstream out;
    out << "docs\t" << summary_.docs << '\n';
    out << "docs_skipped_type\t" << summary_.docs_skipped_type << '\n';
    out << "entries\t" << summary_.entries << '\n';
    out << "entries_no_doi\t" << summary_.entries_no_doi << '\n';
    out << "distinct\t" << summary_.distinct << '\n';
    out << "duplicated_refs\t" << summary_.duplicated_refs << '\n';
    out << "surplus\t" << summary_.surplus << '\n';
    atomic_write_file(dir / "summary.tsv", out.str());
  }
}

DupAggregates DupAggregates::load(const std::filesystem::path& dir) {
  DupAggregates agg;
  auto each_line = [](const std::filesystem::path& path, auto fn) {
    if (!file_exists(path)) return;
    for (const auto& line : split_lines(read_file(path))) {
      if (line.empty()) continue;
      fn(tsv_fields(line));
    }
  };
  each_line(dir / "benef.tsv", [&](const std::vector<std::string>& f) {
    if (f.size() == 3)
      agg.benef_[f[0]] = BenefStats{std::stoull(f[1]), std::stoull(f[2])};
  });
  each_line(dir / "journal.tsv", [&](const std::vector<std::string>& f) {
    if (f.size() == 3)
      agg.journal_dup_[f[0]] = JournalDup{std::stoull(f[1]), std::stoull(f[2])};
  });
  each_line(dir / "journal_totals.tsv", [&](const std::vector<std::string>& f) {
    if (f.size() == 3)
      agg.journal_totals_[f[0]] = JournalTotals{std::stoull(f[1]), std::stoull(f[2])};
  });
  each_line(dir / "journal_cited.tsv", [&](const std::vector<std::string>& f) {
    if (f.size() == 4)
      agg.journal_cited_[f[0]][f[1]] = CitedCounts{std::stoull(f[2]), std::stoull(f[3])};
  });
  each_line(dir / "doc_authors.tsv", [&](const std::vector<std::string>& f) {
    if (f.size() != 2) return;
    std::vector<std::string> authors;
    std::size_t start = 0;
    const std::string& s = f[1];
    for (std::size_t i = 0; i <= s.size(); ++i) {
      if (i == s.size() || s[i] == '|') {
        if (i > start) authors.push_back(s.substr(start, i - start));
        start = i + 1;
      }
    }
    agg.doc_authors_[f[0]] = std::move(authors);
  });
  each_line(dir / "summary.tsv", [&](const std::vector<std::string>& f) {
    if (f.size() != 2) return;
    std::uint64_t v = std::stoull(f[1]);
    if (f[0] == "docs") agg.summary_.docs = v;
    else if (f[0] == "docs_skipped_type") agg.summary_.docs_skipped_type = v;
    else if (f[0] == "entries") agg.summary_.entries = v;
    else if (f[0] == "entries_no_doi") agg.summary_.entries_no_doi = v;
    else if (f[0] == "distinct") agg.summary_.distinct = v;
    else if (f[0] == "duplicated_refs") agg.summary_.duplicated_refs = v;
    else if (f[0] == "surplus") agg.summary_.surplus = v;
  });
  return agg;
}

namespace {

DupAggregates aggregate_all(const std::vector<CrossrefRecord>& records) {
  DupAggregates agg;
  for (const auto& r : records) agg.add(r);
  return agg;
}

}  // namespace

std::unordered_map<std::string, BenefStats> aggregate_benef(
    const std::vector<CrossrefRecord>& records) {
  return aggregate_all(records).benef();
}

std::unordered_map<std::string, JournalDup> aggregate_journal(
    const std::vector<CrossrefRecord>& records) {
  return aggregate_all(records).journals();
}

std::vector<AuthorJournalScore> score_author_journal(const std::vector<CrossrefRecord>& records,
                                                     std::uint64_t min_dup_refs) {
  return aggregate_all(records).author_journal_scores(min_dup_refs);
}

SnapshotSummary snapshot_summary(const std::vector<CrossrefRecord>& records) {
  return aggregate_all(records).summary();
}

}  // namespace refaudit
