#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "refaudit/util.hpp"

namespace refaudit {

/// One reference as registered in metadata.
struct ReferenceEntry {
  std::string key;
  std::optional<std::string> doi;  // lowercase "10.<digits>/<suffix>"
  std::optional<std::string> unstructured;
  std::map<std::string, std::string> structured;  // author, article-title, year, ...
  std::size_t position = 0;                       // 0-based index in registered order
};

/// One registered work: identity, creation instant and the ordered
/// reference list exactly as deposited (no sorting, no dedup).
struct CrossrefRecord {
  std::string doi;     // lowercase
  std::string prefix;  // doi up to the first '/'
  std::string work_type;
  std::optional<Instant> created;
  std::optional<std::string> container_title;
  std::optional<std::string> member_id;
  std::vector<std::string> authors;  // "given family" per author, as deposited
  std::vector<ReferenceEntry> references;
};

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what, std::size_t byte = 0)
      : std::runtime_error(what), byte_offset(byte) {}
  std::size_t byte_offset;
};

struct RecordRejected : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotRegistered : std::runtime_error {
  explicit NotRegistered(const std::string& doi)
      : std::runtime_error("not registered: " + doi), doi(doi) {}
  std::string doi;
};

struct TransportError : std::runtime_error {
  TransportError(const std::string& doi, const std::string& what)
      : std::runtime_error(what), doi(doi) {}
  std::string doi;
};

/// Parses one Crossref work message: either the API envelope
/// `{"status":...,"message":{...}}` or a bare work object (snapshot item).
CrossrefRecord parse_record(std::string_view raw_json);

/// Serializes back to the snapshot item format; parse_record(serialize_record(r))
/// reproduces every reference element-wise.
std::string serialize_record(const CrossrefRecord& record);

struct EndpointConfig {
  std::string base_url = "https://api.crossref.org";
  std::string contact;          // sent as mailto in the User-Agent when set
  double delay_seconds = 1.0;   // politeness delay before each request
  int max_retries = 3;          // extra attempts after a retryable status
  int timeout_seconds = 30;
};

/// GET {base_url}/works/{doi}. 404 -> NotRegistered, other persistent
/// failures -> TransportError. Retries 429/5xx with backoff.
CrossrefRecord fetch_record(const std::string& doi, const EndpointConfig& config);

/// Raw body variant, used to populate the on-disk record cache byte-faithfully.
std::string fetch_record_body(const std::string& doi, const EndpointConfig& config);

struct SnapshotStats {
  std::uint64_t files_read = 0;
  std::uint64_t files_skipped = 0;  // unreadable / corrupt batch files
  std::uint64_t items_yielded = 0;
  std::uint64_t items_skipped = 0;  // individual corrupt items
};

/// Streams every item of a snapshot exactly once, in file order, with
/// per-batch memory bounds. Source is a directory of *.json.gz / *.json
/// batches (each `{"items":[...]}`) or a tar archive of the same. Plain
/// tars stream from disk; .tar.gz is inflated up front and suits small
/// archives only.
class SnapshotReader {
 public:
  explicit SnapshotReader(const std::filesystem::path& source);
  ~SnapshotReader();
  SnapshotReader(SnapshotReader&&) noexcept;
  SnapshotReader& operator=(SnapshotReader&&) noexcept;

  std::optional<CrossrefRecord> next();
  const SnapshotStats& stats() const { return stats_; }

 private:
  bool load_next_batch();
  void ingest_batch(const std::string& name, const std::string& bytes);
  bool next_tar_entry(std::string& name, std::string& data);

  std::vector<std::filesystem::path> files_;  // directory mode
  std::size_t file_index_ = 0;

  bool tar_mode_ = false;
  struct TarSource;
  std::unique_ptr<TarSource> tar_;

  std::vector<CrossrefRecord> pending_;
  std::size_t pending_index_ = 0;
  SnapshotStats stats_;
};

/// True for "10.<digits>/<non-empty suffix>" (lowercase input expected).
bool is_doi_syntax(std::string_view s);

/// cache/records/<percent-encoded-doi>.json
std::filesystem::path record_cache_path(const std::filesystem::path& cache_dir,
                                        std::string_view doi);

}  // namespace refaudit
