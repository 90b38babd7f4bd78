#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "helpers.hpp"
#include "refaudit/extract.hpp"

using namespace refaudit;
using namespace testhelpers;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  auto dir =
      fs::temp_directory_path() / ("refaudit_extr_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

}  // namespace

TEST_SUITE("extract") {

TEST_CASE("TEI with 8 biblStruct entries") {
  std::vector<std::pair<std::string, std::string>> refs;
  for (int i = 0; i < 8; ++i)
    refs.emplace_back("Reference text number " + std::to_string(i),
                      i % 2 == 0 ? "10.5555/r" + std::to_string(i) : "");
  auto out = parse_tei_refs(tei_document(refs));
  REQUIRE(out.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(out[i].position == i);
    // The flattened line carries all entry text, DOI idno included.
    std::string expected = "Reference text number " + std::to_string(i);
    if (i % 2 == 0) expected += " 10.5555/r" + std::to_string(i);
    CHECK(out[i].raw == expected);
  }
  CHECK(out[0].doi == "10.5555/r0");
  CHECK(!out[1].doi.has_value());
}

TEST_CASE("TEI with zero bibliographic entries") {
  auto out = parse_tei_refs(tei_document({}));
  CHECK(out.empty());
}

TEST_CASE("TEI last entry may be a hallucinated biography paragraph") {
  std::vector<std::pair<std::string, std::string>> refs = {
      {"Garcia, J. (2001). A study. Journal, 1(1), 1-10.", "10.1/a"},
      {"Dr. Garcia received the PhD degree in 1990 and works on things.", ""},
  };
  auto out = parse_tei_refs(tei_document(refs));
  REQUIRE(out.size() == 2);
  CHECK(out.back().raw.find("PhD degree") != std::string::npos);
}

TEST_CASE("TEI doi normalization strips resolver and lowercases") {
  auto out = parse_tei_refs(tei_document({{"text entry", "https://doi.org/10.1000/UP"}}));
  REQUIRE(out.size() == 1);
  CHECK(out[0].doi == "10.1000/up");
}

TEST_CASE("malformed TEI raises") {
  CHECK_THROWS_AS(parse_tei_refs("<TEI><unclosed"), MalformedTei);
}

TEST_CASE("references-only TEI response (no full document wrapper)") {
  std::string tei =
      "<tei><listBibl>"
      "<biblStruct><title>Alpha beta gamma</title></biblStruct>"
      "<biblStruct><title>Delta epsilon</title></biblStruct>"
      "</listBibl></tei>";
  auto out = parse_tei_refs(tei);
  REQUIRE(out.size() == 2);
  CHECK(out[0].raw == "Alpha beta gamma");
  CHECK(out[1].raw == "Delta epsilon");
}

TEST_CASE("single-page PDF extracts its text") {
  MiniPdf pdf;
  pdf.add_page({"alpha beta"});
  FullText ft = extract_fulltext(pdf.build());
  CHECK(ft.text == "alpha beta");
  CHECK(ft.page_count == 1);
}

TEST_CASE("flate-compressed content stream") {
  MiniPdf pdf;
  pdf.add_page({"compressed page content here"});
  FullText ft = extract_fulltext(pdf.build(/*compress=*/true));
  CHECK(ft.text == "compressed page content here");
}

TEST_CASE("reference spanning a page break with a running footer in between") {
  MiniPdf pdf;
  pdf.add_page({"Garcia, J. (2001). A long reference that", "Journal Footer Page 1"});
  pdf.add_page({"continues on the next page. Journal, 1(1), 1-10."});
  FullText ft = extract_fulltext(pdf.build());
  // Both fragments present; the footer text is tolerated in between.
  CHECK(ft.text.find("A long reference that") != std::string::npos);
  CHECK(ft.text.find("continues on the next page") != std::string::npos);
  CHECK(ft.text.find("Journal Footer Page 1") != std::string::npos);
  CHECK(ft.page_count == 2);
}

TEST_CASE("round-trip: PDF generated from a known string extracts to it") {
  std::mt19937 rng(4242);
  for (int i = 0; i < 10; ++i) {
    std::string source = synth_reference(rng, "10.7777/rt" + std::to_string(i));
    MiniPdf pdf;
    pdf.add_page({source});
    FullText ft = extract_fulltext(pdf.build(i % 2 == 0));
    CHECK(ft.text == normalize_extracted_text(source));
  }
}

TEST_CASE("hyphenation at line breaks is repaired") {
  MiniPdf pdf;
  pdf.add_page({"this is an exam-", "ple of wrapped text"});
  FullText ft = extract_fulltext(pdf.build());
  CHECK(ft.text == "this is an example of wrapped text");
}

TEST_CASE("soft hyphens are removed") {
  CHECK(normalize_extracted_text("exam\xC2\xADple") == "example");
}

TEST_CASE("hyphen before a capital letter or digit survives") {
  CHECK(normalize_extracted_text("state-\nOf the art") == "state- Of the art");
  CHECK(normalize_extracted_text("pages 10-\n20") == "pages 10- 20");
  CHECK(normalize_extracted_text("wrap-\naround") == "wraparound");
}

TEST_CASE("normalize_extracted_text is a fixed point on its own output") {
  std::mt19937 rng(9);
  for (int i = 0; i < 100; ++i) {
    std::string raw = synth_reference(rng, "10.1/fp") + "\nmore-\nlines  here\t ok";
    std::string once = normalize_extracted_text(raw);
    CHECK(normalize_extracted_text(once) == once);
  }
}

TEST_CASE("encrypted PDF is rejected") {
  MiniPdf pdf;
  pdf.add_page({"secret"});
  std::string bytes = pdf.build();
  std::size_t at = bytes.find("/Root");
  bytes.insert(at, "/Encrypt 9 0 R ");
  CHECK_THROWS_AS(extract_fulltext(bytes), UnreadablePdf);
}

TEST_CASE("non-PDF bytes are rejected") {
  CHECK_THROWS_AS(extract_fulltext("this is not a pdf at all"), UnreadablePdf);
  CHECK_THROWS_AS(extract_fulltext(""), UnreadablePdf);
}

TEST_CASE("object-stream PDFs: catalog and pages inside an ObjStm") {
  // Objects 2 (catalog), 3 (pages) and 4 (page) packed into object stream 1;
  // content stream and font stay as top-level objects.
  std::string o2 = "<< /Type /Catalog /Pages 3 0 R >>";
  std::string o3 = "<< /Type /Pages /Kids [4 0 R] /Count 1 >>";
  std::string o4 =
      "<< /Type /Page /Parent 3 0 R /MediaBox [0 0 612 792] /Contents 5 0 R "
      "/Resources << /Font << /F1 6 0 R >> >> >>";
  std::string header = "2 0 3 " + std::to_string(o2.size() + 1) + " 4 " +
                       std::to_string(o2.size() + o3.size() + 2) + " ";
  std::string payload = header + o2 + "\n" + o3 + "\n" + o4;
  std::string objstm_dict = "<< /Type /ObjStm /N 3 /First " + std::to_string(header.size()) +
                            " /Length " + std::to_string(payload.size()) + " >>";
  std::string content = "BT /F1 11 Tf 50 760 Td (packed object stream text) Tj ET";

  std::string pdf = "%PDF-1.5\n";
  pdf += "1 0 obj\n" + objstm_dict + "\nstream\n" + payload + "\nendstream\nendobj\n";
  pdf += "5 0 obj\n<< /Length " + std::to_string(content.size()) + " >>\nstream\n" + content +
         "\nendstream\nendobj\n";
  pdf += "6 0 obj\n<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica >>\nendobj\n";
  pdf += "trailer\n<< /Size 7 /Root 2 0 R >>\n%%EOF\n";

  FullText ft = extract_fulltext(pdf);
  CHECK(ft.text == "packed object stream text");
  CHECK(ft.page_count == 1);
}

TEST_CASE("UTF-16BE string decoding") {
  // (FE FF 00 41 00 42) is "AB" as a UTF-16BE PDF string; build raw content.
  MiniPdf pdf;
  pdf.add_page({"placeholder"});
  std::string bytes = pdf.build();
  std::string needle = "(placeholder) Tj";
  std::string utf16 = std::string("(\xFE\xFF") + '\0' + 'A' + '\0' + 'B' + ") Tj";
  // Splice without changing /Length validity: lengths differ, so rebuild via
  // the search fallback by padding to the same size.
  REQUIRE(needle.size() >= utf16.size());
  utf16.append(needle.size() - utf16.size(), ' ');
  bytes.replace(bytes.find(needle), needle.size(), utf16);
  FullText ft = extract_fulltext(bytes);
  CHECK(ft.text == "AB");
}

TEST_CASE("load_or_extract: cache hit issues no service call") {
  auto corpus = temp_dir("cachehit");
  CorpusPaths paths{corpus};
  write(paths.tei("10.1/doc"), tei_document({{"Cached ref one", "10.2/a"}}));
  write(paths.txt("10.1/doc"), "cached text body");
  write(paths.txt_meta("10.1/doc"), R"({"page_count":3,"warnings":[]})");

  ServiceConfig service;
  service.base_url = "http://127.0.0.1:1";  // unreachable: a call would throw
  auto outcome = load_or_extract("10.1/doc", corpus, &service);
  REQUIRE(outcome.refs.has_value());
  CHECK(outcome.refs->size() == 1);
  CHECK(outcome.tei_from_cache);
  REQUIRE(outcome.fulltext.has_value());
  CHECK(outcome.fulltext->text == "cached text body");
  CHECK(outcome.fulltext->page_count == 3);
  CHECK(!outcome.no_pdf);
  fs::remove_all(corpus);
}

TEST_CASE("load_or_extract: miss invokes both extractors once and writes the cache") {
  auto corpus = temp_dir("cachemiss");
  CorpusPaths paths{corpus};
  MiniPdf pdf;
  pdf.add_page({"Body text. Garcia, J. (2001). A study. Journal, 1(1), 1-10."});
  write(paths.pdf("10.1/doc"), pdf.build());

  std::atomic<int> service_calls{0};
  httplib::Server server;
  std::string tei = tei_document({{"Garcia, J. (2001). A study. Journal, 1(1), 1-10.", ""}});
  server.Post("/api/processReferences", [&](const httplib::Request& req, httplib::Response& res) {
    ++service_calls;
    CHECK(req.has_file("input"));
    res.set_content(tei, "application/xml");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ServiceConfig service;
  service.base_url = "http://127.0.0.1:" + std::to_string(port);

  auto outcome = load_or_extract("10.1/doc", corpus, &service);
  REQUIRE(outcome.refs.has_value());
  CHECK(outcome.refs->size() == 1);
  REQUIRE(outcome.fulltext.has_value());
  CHECK(outcome.fulltext->text.find("Garcia") != std::string::npos);
  CHECK(service_calls.load() == 1);
  CHECK(fs::exists(paths.tei("10.1/doc")));
  CHECK(fs::exists(paths.txt("10.1/doc")));
  CHECK(fs::exists(paths.txt_meta("10.1/doc")));

  // Second call is served from the cache.
  auto again = load_or_extract("10.1/doc", corpus, &service);
  CHECK(service_calls.load() == 1);
  CHECK(again.tei_from_cache);
  CHECK(again.txt_from_cache);
  CHECK(again.fulltext->text == outcome.fulltext->text);

  server.stop();
  server_thread.join();
  fs::remove_all(corpus);
}

TEST_CASE("load_or_extract: absent PDF reports no_pdf") {
  auto corpus = temp_dir("nopdf");
  auto outcome = load_or_extract("10.1/absent", corpus, nullptr);
  CHECK(!outcome.refs.has_value());
  CHECK(!outcome.fulltext.has_value());
  CHECK(outcome.no_pdf);
  fs::remove_all(corpus);
}

TEST_CASE("cache determinism: identical inputs give byte-identical artifacts") {
  auto corpus_a = temp_dir("det_a");
  auto corpus_b = temp_dir("det_b");
  MiniPdf pdf;
  pdf.add_page({"Deterministic content line"});
  std::string bytes = pdf.build();
  write(CorpusPaths{corpus_a}.pdf("10.1/d"), bytes);
  write(CorpusPaths{corpus_b}.pdf("10.1/d"), bytes);
  (void)load_or_extract("10.1/d", corpus_a, nullptr);
  (void)load_or_extract("10.1/d", corpus_b, nullptr);
  CHECK(read_file(CorpusPaths{corpus_a}.txt("10.1/d")) ==
        read_file(CorpusPaths{corpus_b}.txt("10.1/d")));
  CHECK(read_file(CorpusPaths{corpus_a}.txt_meta("10.1/d")) ==
        read_file(CorpusPaths{corpus_b}.txt_meta("10.1/d")));
  fs::remove_all(corpus_a);
  fs::remove_all(corpus_b);
}

}  // TEST_SUITE
