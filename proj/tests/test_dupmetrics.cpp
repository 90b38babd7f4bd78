#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "helpers.hpp"
#include "refaudit/dupmetrics.hpp"

using namespace refaudit;
using namespace testhelpers;
namespace fs = std::filesystem;

namespace {

CrossrefRecord citing(const std::string& doi, const std::vector<std::string>& cited,
                      const std::string& journal = "Journal A") {
  CrossrefRecord rec = make_record(doi);
  rec.container_title = journal;
  for (const auto& c : cited) rec.references.push_back(make_entry(rec.references.size(), c, ""));
  return rec;
}

// Enumeration oracle: every statistic recomputed from first principles.
struct GraphOracle {
  std::map<std::string, std::map<std::string, std::uint64_t>> mult;  // doc -> cited -> n

  explicit GraphOracle(const std::vector<CrossrefRecord>& records) {
    for (const auto& r : records) {
      if (!graph_eligible(r)) continue;
      for (const auto& e : r.references)
        if (e.doi) ++mult[r.doi][*e.doi];
    }
  }

  std::uint64_t total_nbrefdup_plus() const {
    std::uint64_t sum = 0;
    for (const auto& [d, cited] : mult)
      for (const auto& [r, n] : cited)
        if (n > 1) sum += n - 1;
    return sum;
  }

  std::uint64_t total_benef_plus(const std::unordered_map<std::string, BenefStats>& benef) const {
    std::uint64_t sum = 0;
    for (const auto& [doi, b] : benef) sum += b.benef_plus;
    return sum;
  }

  BenefStats benef_of(const std::string& target) const {
    BenefStats b;
    for (const auto& [d, cited] : mult) {
      auto it = cited.find(target);
      if (it != cited.end() && it->second > 1) {
        b.benef_plus += it->second - 1;
        ++b.benef;
      }
    }
    return b;
  }
};

std::vector<CrossrefRecord> random_multigraph(std::mt19937& rng, std::size_t max_nodes,
                                              std::size_t max_edges) {
  std::uniform_int_distribution<std::size_t> nodes(2, max_nodes), edges(1, max_edges);
  std::size_t n = nodes(rng), m = edges(rng);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_int_distribution<int> journal(0, 3), dup(0, 3);
  std::map<std::string, CrossrefRecord> by_doi;
  for (std::size_t i = 0; i < n; ++i) {
    std::string doi = "10.7/n" + std::to_string(i);
    auto rec = make_record(doi);
    rec.container_title = "Journal " + std::to_string(journal(rng));
    by_doi[doi] = rec;
  }
  for (std::size_t e = 0; e < m; ++e) {
    std::string from = "10.7/n" + std::to_string(pick(rng));
    std::string to = "10.7/n" + std::to_string(pick(rng));
    auto& rec = by_doi[from];
    int copies = 1 + (dup(rng) == 0 ? dup(rng) : 0);
    for (int c = 0; c < copies; ++c)
      rec.references.push_back(make_entry(rec.references.size(), to, ""));
  }
  std::vector<CrossrefRecord> out;
  for (auto& [doi, rec] : by_doi) out.push_back(std::move(rec));
  return out;
}

}  // namespace

TEST_SUITE("dupmetrics") {

TEST_CASE("doc_dup_stats: d cites r1 x3 and r2 x1") {
  auto rec = citing("10.1/d", {"10.2/r1", "10.2/r1", "10.2/r2", "10.2/r1"});
  auto stats = doc_dup_stats(rec);
  CHECK(stats.nbrefdup_plus == 2);
  CHECK(stats.nbrefdup == 1);
}

TEST_CASE("doc_dup_stats: duplicate-free document") {
  auto rec = citing("10.1/d", {"10.2/a", "10.2/b"});
  auto stats = doc_dup_stats(rec);
  CHECK(stats.nbrefdup_plus == 0);
  CHECK(stats.nbrefdup == 0);
}

TEST_CASE("doc_dup_stats ignores entries without DOI") {
  auto rec = citing("10.1/d", {"10.2/a", "10.2/a"});
  rec.references.push_back(make_entry(2, "", "free text only"));
  rec.references.push_back(make_entry(3, "", "free text only"));
  auto stats = doc_dup_stats(rec);
  CHECK(stats.nbrefdup_plus == 1);
  CHECK(stats.nbrefdup == 1);
}

TEST_CASE("aggregate_benef: c1 cites d x3, c2 cites d x1") {
  std::vector<CrossrefRecord> records = {
      citing("10.1/c1", {"10.9/d", "10.9/d", "10.9/d"}),
      citing("10.1/c2", {"10.9/d"}),
  };
  auto benef = aggregate_benef(records);
  REQUIRE(benef.count("10.9/d") == 1);
  CHECK(benef.at("10.9/d").benef_plus == 2);
  CHECK(benef.at("10.9/d").benef == 1);
}

TEST_CASE("aggregate_benef: uncited and never-duplicated targets are absent") {
  std::vector<CrossrefRecord> records = {citing("10.1/c1", {"10.9/d"})};
  auto benef = aggregate_benef(records);
  CHECK(benef.empty());
}

TEST_CASE("aggregate_journal: docs with nbrefdup_plus {2,0,5}") {
  std::vector<CrossrefRecord> records = {
      citing("10.1/a", {"10.9/x", "10.9/x", "10.9/y", "10.9/y"}, "Journal J"),   // +2
      citing("10.1/b", {"10.9/x", "10.9/z"}, "Journal J"),                       // +0
      citing("10.1/c", {"10.9/q", "10.9/q", "10.9/q", "10.9/q", "10.9/q", "10.9/w", "10.9/w"},
             "Journal J"),                                                        // +5
  };
  auto journals = aggregate_journal(records);
  auto key = journal_key(records[0]);
  REQUIRE(journals.count(key) == 1);
  CHECK(journals.at(key).jourdup_plus == 7);
  CHECK(journals.at(key).jourdup == 2);
}

TEST_CASE("aggregate_journal: missing container title lands under (none)") {
  auto rec = citing("10.1/a", {"10.9/x", "10.9/x"});
  rec.container_title.reset();
  auto journals = aggregate_journal({rec});
  REQUIRE(journals.count("(none)") == 1);
  CHECK(journals.at("(none)").jourdup_plus == 1);
}

TEST_CASE("books and book chapters are excluded") {
  auto book = citing("10.1/book", {"10.9/x", "10.9/x"});
  book.work_type = "book";
  auto chapter = citing("10.1/ch", {"10.9/x", "10.9/x"});
  chapter.work_type = "book-chapter";
  auto article = citing("10.1/art", {"10.9/x", "10.9/x"});
  auto benef = aggregate_benef({book, chapter, article});
  CHECK(benef.at("10.9/x").benef_plus == 1);  // only the article counts
  auto summary = snapshot_summary({book, chapter, article});
  CHECK(summary.docs == 1);
  CHECK(summary.docs_skipped_type == 2);
}

TEST_CASE("snapshot_summary: tiny graph") {
  std::vector<CrossrefRecord> records = {
      citing("10.1/d", {"10.9/r1", "10.9/r1", "10.9/r1", "10.9/r2"})};
  auto s = snapshot_summary(records);
  CHECK(s.entries == 4);
  CHECK(s.distinct == 2);
  CHECK(s.duplicated_refs == 1);
  CHECK(s.surplus == 2);
  CHECK(s.avg_duplicates() == doctest::Approx(2.0));
}

TEST_CASE("snapshot_summary: empty stream is all zeros") {
  auto s = snapshot_summary({});
  CHECK(s.entries == 0);
  CHECK(s.distinct == 0);
  CHECK(s.duplicated_refs == 0);
  CHECK(s.surplus == 0);
  CHECK(s.avg_duplicates() == doctest::Approx(0.0));
}

TEST_CASE("top_k: ties break by key ascending") {
  std::unordered_map<std::string, std::uint64_t> m = {{"b", 3}, {"a", 3}, {"c", 1}};
  auto rows = top_k(m, 2, [](std::uint64_t v) { return v; });
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].first == "a");
  CHECK(rows[1].first == "b");
}

TEST_CASE("top_k: k beyond the map returns everything sorted") {
  std::unordered_map<std::string, std::uint64_t> m = {{"x", 1}, {"y", 9}};
  auto rows = top_k(m, 10, [](std::uint64_t v) { return v; });
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].first == "y");
}

TEST_CASE("s1 reproduces every published leaderboard row within 0.05") {
  struct Row {
    std::uint64_t dup_author, dup_total, ref_author, ref_total;
    double score;
  };
  const Row rows[] = {
      {76, 104, 204, 1391, 44.4},  {35, 49, 58, 1273, 23.4},   {142, 981, 213, 18990, 19.0},
      {142, 981, 242, 18990, 18.7}, {75, 315, 75, 7653, 17.1},  {25, 49, 57, 1273, 11.6},
      {199, 2650, 283, 10303, 9.5}, {54, 182, 551, 4154, 8.9},  {213, 3901, 1027, 56035, 7.7},
      {36, 164, 64, 2224, 6.9},     {49, 216, 227, 2455, 6.6},  {114, 1071, 249, 4602, 6.0},
  };
  for (const Row& r : rows) {
    double s1 = s1_score(r.dup_author, r.dup_total, r.ref_author, r.ref_total);
    CHECK(std::abs(s1 - r.score) <= 0.05);
  }
}

TEST_CASE("s1 with zero denominators is zero") {
  CHECK(s1_score(0, 0, 0, 0) == doctest::Approx(0.0));
  CHECK(s1_score(0, 0, 10, 100) == doctest::Approx(0.0 - 0.1 * 0.0).epsilon(1e-12));
}

TEST_CASE("author_journal_scores resolves authors from the stream's own records") {
  std::vector<CrossrefRecord> records;
  // Cited works with authors.
  auto cited1 = make_record("10.9/t1");
  cited1.authors = {"David F. Hendry"};
  auto cited2 = make_record("10.9/t2");
  cited2.authors = {"David F. Hendry", "Ada Byron"};
  auto cited3 = make_record("10.9/t3");
  cited3.authors = {"Someone Else"};
  records.push_back(cited1);
  records.push_back(cited2);
  records.push_back(cited3);
  // One journal duplicating refs toward Hendry's works.
  records.push_back(citing("10.1/a", {"10.9/t1", "10.9/t1", "10.9/t3"}, "Econ Journal"));
  records.push_back(citing("10.1/b", {"10.9/t2", "10.9/t2", "10.9/t3"}, "Econ Journal"));

  auto scores = score_author_journal(records, 0);
  REQUIRE(!scores.empty());
  const auto& top = scores.front();
  CHECK(top.author == author_key("David F. Hendry"));
  CHECK(top.journal == journal_key(records[3]));
  // R_d is a set: doc a contributes {t1, t3}, doc b {t2, t3} -> ref_total 4.
  CHECK(top.dup_to_author == 2);
  CHECK(top.dup_total == 2);
  CHECK(top.ref_to_author == 2);
  CHECK(top.ref_total == 4);
  CHECK(top.s1 == doctest::Approx((2.0 / 2.0 - 2.0 / 4.0) * 2.0));
}

TEST_CASE("author_journal_scores skips journals below min_dup_refs") {
  std::vector<CrossrefRecord> records;
  auto cited = make_record("10.9/t");
  cited.authors = {"Solo Author"};
  records.push_back(cited);
  records.push_back(citing("10.1/a", {"10.9/t", "10.9/t"}, "Small Journal"));
  CHECK(score_author_journal(records, 20).empty());
  CHECK(!score_author_journal(records, 1).empty());
}

TEST_CASE("journal with zero duplicates scores zero for every author") {
  std::vector<CrossrefRecord> records;
  auto cited = make_record("10.9/t");
  cited.authors = {"Solo Author"};
  records.push_back(cited);
  records.push_back(citing("10.1/a", {"10.9/t", "10.9/u"}, "Clean Journal"));
  auto scores = score_author_journal(records, 0);
  for (const auto& s : scores) CHECK(s.s1 == doctest::Approx(0.0));
}

TEST_CASE("author_key folds case, diacritics and initials punctuation") {
  CHECK(author_key("David F. Hendry") == "david f hendry");
  CHECK(author_key("  TIMOFEY   Krakhmalnyy ") == "timofey krakhmalnyy");
  CHECK(author_key("Jos\xC3\xA9 \xC3\x81lvarez") == "jose alvarez");
}

TEST_CASE("conservation: sum benef_plus equals sum nbrefdup_plus on random graphs") {
  std::mt19937 rng(2025);
  for (int g = 0; g < 50; ++g) {
    auto records = random_multigraph(rng, 50, 400);
    GraphOracle oracle(records);
    auto benef = aggregate_benef(records);
    std::uint64_t benef_sum = oracle.total_benef_plus(benef);
    std::uint64_t dup_sum = 0;
    for (const auto& r : records)
      if (graph_eligible(r)) dup_sum += doc_dup_stats(r).nbrefdup_plus;
    CHECK(benef_sum == dup_sum);
    CHECK(dup_sum == oracle.total_nbrefdup_plus());
    // Spot-check individual beneficiaries against the oracle.
    for (const auto& [doi, stats] : benef) {
      auto expected = oracle.benef_of(doi);
      CHECK(stats.benef_plus == expected.benef_plus);
      CHECK(stats.benef == expected.benef);
    }
  }
}

TEST_CASE("journal consistency: jourdup_plus equals the per-doc sum") {
  std::mt19937 rng(31);
  auto records = random_multigraph(rng, 40, 300);
  auto journals = aggregate_journal(records);
  std::map<std::string, std::uint64_t> expected;
  for (const auto& r : records) {
    if (!graph_eligible(r)) continue;
    expected[journal_key(r)] += doc_dup_stats(r).nbrefdup_plus;
  }
  for (const auto& [j, v] : journals) CHECK(v.jourdup_plus == expected[j]);
}

TEST_CASE("shard-merge equals single pass for p in {1,2,7}") {
  std::mt19937 rng(777);
  auto records = random_multigraph(rng, 50, 400);

  DupAggregates single;
  for (const auto& r : records) single.add(r);

  for (std::size_t p : {1u, 2u, 7u}) {
    std::vector<DupAggregates> shards(p);
    for (std::size_t i = 0; i < records.size(); ++i) shards[i % p].add(records[i]);
    DupAggregates merged;
    for (auto& s : shards) merged.merge(s);

    CHECK(merged.summary().entries == single.summary().entries);
    CHECK(merged.summary().distinct == single.summary().distinct);
    CHECK(merged.summary().surplus == single.summary().surplus);
    CHECK(merged.summary().duplicated_refs == single.summary().duplicated_refs);
    REQUIRE(merged.benef().size() == single.benef().size());
    for (const auto& [doi, b] : single.benef()) {
      CHECK(merged.benef().at(doi).benef_plus == b.benef_plus);
      CHECK(merged.benef().at(doi).benef == b.benef);
    }
    REQUIRE(merged.journals().size() == single.journals().size());
    for (const auto& [j, v] : single.journals()) {
      CHECK(merged.journals().at(j).jourdup_plus == v.jourdup_plus);
      CHECK(merged.journals().at(j).jourdup == v.jourdup);
    }
    auto a = merged.author_journal_scores(0);
    auto b = single.author_journal_scores(0);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].journal == b[i].journal);
      CHECK(a[i].author == b[i].author);
      CHECK(a[i].s1 == b[i].s1);
    }
  }
}

TEST_CASE("aggregate state save/load round-trip") {
  std::mt19937 rng(88);
  auto records = random_multigraph(rng, 30, 200);
  auto cited = make_record("10.7/n0");  // give one node authors for coverage
  cited.authors = {"Jos\xC3\xA9 Writer"};
  DupAggregates agg;
  agg.add(cited);
  for (const auto& r : records) agg.add(r);

  auto dir = fs::temp_directory_path() / ("refaudit_dupsave_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  agg.save(dir);
  auto loaded = DupAggregates::load(dir);

  CHECK(loaded.summary().entries == agg.summary().entries);
  CHECK(loaded.summary().surplus == agg.summary().surplus);
  CHECK(loaded.benef().size() == agg.benef().size());
  CHECK(loaded.journals().size() == agg.journals().size());
  auto a = loaded.author_journal_scores(0);
  auto b = agg.author_journal_scores(0);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].journal == b[i].journal);
    CHECK(a[i].s1 == doctest::Approx(b[i].s1));
  }
  fs::remove_all(dir);
}

TEST_CASE("targeted duplication scores far above the random-duplication null") {
  std::mt19937 rng(450);
  // Shared universe: 10 authors x 3 docs each.
  auto build_universe = [&](std::vector<CrossrefRecord>& records) {
    for (int a = 0; a < 10; ++a)
      for (int d = 0; d < 3; ++d) {
        auto rec = make_record("10.9/a" + std::to_string(a) + "d" + std::to_string(d));
        rec.authors = {"author number " + std::to_string(a)};
        records.push_back(rec);
      }
  };
  auto cited_doi = [](int a, int d) {
    return "10.9/a" + std::to_string(a) + "d" + std::to_string(d);
  };

  auto build_graph = [&](bool targeted) {
    std::vector<CrossrefRecord> records;
    build_universe(records);
    std::mt19937 local(targeted ? 1 : 2);
    std::uniform_int_distribution<int> author(0, 9), doc(0, 2);
    for (int c = 0; c < 20; ++c) {
      // 15 distinct cited works per citing doc.
      std::set<std::string> cited;
      cited.insert(cited_doi(0, 0));
      cited.insert(cited_doi(0, 1));
      cited.insert(cited_doi(0, 2));
      while (cited.size() < 15) cited.insert(cited_doi(author(local), doc(local)));
      std::vector<std::string> refs(cited.begin(), cited.end());
      // Three duplicated references per doc.
      if (targeted) {
        refs.push_back(cited_doi(0, 0));
        refs.push_back(cited_doi(0, 1));
        refs.push_back(cited_doi(0, 2));
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, refs.size() - 1);
        std::set<std::size_t> chosen;
        while (chosen.size() < 3) chosen.insert(pick(local));
        for (std::size_t idx : chosen) refs.push_back(refs[idx]);
      }
      records.push_back(citing("10.1/c" + std::to_string(c), refs, "Study Journal"));
    }
    return records;
  };

  auto max_s1 = [](const std::vector<AuthorJournalScore>& scores) {
    double best = 0.0;
    for (const auto& s : scores) best = std::max(best, s.s1);
    return best;
  };
  double targeted = max_s1(score_author_journal(build_graph(true), 20));
  double null = max_s1(score_author_journal(build_graph(false), 20));
  CHECK(targeted > 5.0 * null);
}

}  // TEST_SUITE
