#include "refaudit/ingest.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <thread>

#include <httplib.h>
#include <json.hpp>

using nlohmann::json;

namespace refaudit {

bool is_doi_syntax(std::string_view s) {
  if (s.rfind("10.", 0) != 0) return false;
  std::size_t i = 3, digits = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    ++i;
    ++digits;
  }
  return digits > 0 && i + 1 < s.size() && s[i] == '/';
}

namespace {

std::string lowercase_doi(std::string doi) {
  // Strip resolver forms the wild occasionally carries.
  for (std::string_view prefix :
       {"https://doi.org/", "http://doi.org/", "https://dx.doi.org/", "http://dx.doi.org/",
        "doi:"}) {
    if (doi.size() > prefix.size() &&
        ascii_lower(doi.substr(0, prefix.size())) == prefix) {
      doi = doi.substr(prefix.size());
      break;
    }
  }
  return ascii_lower(trim_view(doi));
}

std::string json_to_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return std::to_string(v.get<double>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return {};
}

ReferenceEntry parse_reference(const json& ref, std::size_t position) {
  ReferenceEntry entry;
  entry.position = position;
  for (auto it = ref.begin(); it != ref.end(); ++it) {
    const std::string& name = it.key();
    if (name == "key") {
      entry.key = json_to_text(it.value());
    } else if (name == "DOI" || name == "doi") {
      std::string d = lowercase_doi(json_to_text(it.value()));
      if (is_doi_syntax(d))
        entry.doi = d;
      else if (!d.empty())
        entry.structured[name] = d;  // malformed identifier, kept as a plain field
    } else if (name == "unstructured") {
      std::string u = json_to_text(it.value());
      if (!u.empty()) entry.unstructured = u;
    } else if (name == "doi-asserted-by") {
      continue;  // provenance, not content
    } else {
      std::string v = json_to_text(it.value());
      if (!v.empty()) entry.structured[name] = v;
    }
  }
  return entry;
}

CrossrefRecord parse_message(const json& msg) {
  CrossrefRecord rec;
  auto doi_it = msg.find("DOI");
  if (doi_it == msg.end()) doi_it = msg.find("doi");
  if (doi_it == msg.end() || !doi_it->is_string() || doi_it->get<std::string>().empty())
    throw RecordRejected("record has no DOI field");
  rec.doi = lowercase_doi(doi_it->get<std::string>());
  if (!is_doi_syntax(rec.doi)) throw RecordRejected("record DOI malformed: " + rec.doi);
  rec.prefix = rec.doi.substr(0, rec.doi.find('/'));

  if (auto it = msg.find("type"); it != msg.end() && it->is_string())
    rec.work_type = it->get<std::string>();

  if (auto it = msg.find("created"); it != msg.end() && it->is_object()) {
    if (auto dt = it->find("date-time"); dt != it->end() && dt->is_string())
      rec.created = parse_iso8601(dt->get<std::string>());
  }

  if (auto it = msg.find("container-title"); it != msg.end()) {
    if (it->is_array() && !it->empty() && (*it)[0].is_string())
      rec.container_title = (*it)[0].get<std::string>();
    else if (it->is_string() && !it->get<std::string>().empty())
      rec.container_title = it->get<std::string>();
  }

  if (auto it = msg.find("member"); it != msg.end() && it->is_string())
    rec.member_id = it->get<std::string>();

  if (auto it = msg.find("author"); it != msg.end() && it->is_array()) {
    for (const auto& a : *it) {
      std::string given, family;
      if (a.contains("given") && a["given"].is_string()) given = a["given"].get<std::string>();
      if (a.contains("family") && a["family"].is_string())
        family = a["family"].get<std::string>();
      std::string full = given.empty() ? family : (family.empty() ? given : given + " " + family);
      if (full.empty() && a.contains("name") && a["name"].is_string())
        full = a["name"].get<std::string>();
      if (!full.empty()) rec.authors.push_back(full);
    }
  }

  if (auto it = msg.find("reference"); it != msg.end() && it->is_array()) {
    rec.references.reserve(it->size());
    for (const auto& r : *it) {
      if (r.is_object()) {
        rec.references.push_back(parse_reference(r, rec.references.size()));
      } else if (r.is_string() && !r.get<std::string>().empty()) {
        // Degenerate deposits: a bare citation string in the array.
        ReferenceEntry entry;
        entry.position = rec.references.size();
        entry.unstructured = r.get<std::string>();
        rec.references.push_back(std::move(entry));
      }
    }
    // Positions are dense 0..n-1 in array order by construction.
  }
  return rec;
}

}  // namespace

CrossrefRecord parse_record(std::string_view raw_json) {
  json doc;
  try {
    doc = json::parse(raw_json);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!doc.is_object()) throw ParseError("top-level JSON value is not an object");
  if (auto it = doc.find("message"); it != doc.end() && it->is_object())
    return parse_message(*it);
  return parse_message(doc);
}

std::string serialize_record(const CrossrefRecord& record) {
  json msg;
  msg["DOI"] = record.doi;
  msg["prefix"] = record.prefix;
  if (!record.work_type.empty()) msg["type"] = record.work_type;
  if (record.created) msg["created"] = {{"date-time", format_iso8601(*record.created)}};
  if (record.container_title) msg["container-title"] = json::array({*record.container_title});
  if (record.member_id) msg["member"] = *record.member_id;
  if (!record.authors.empty()) {
    json arr = json::array();
    for (const auto& a : record.authors) arr.push_back({{"name", a}});
    msg["author"] = arr;
  }
  json refs = json::array();
  for (const auto& r : record.references) {
    json jr;
    if (!r.key.empty()) jr["key"] = r.key;
    if (r.doi) jr["DOI"] = *r.doi;
    if (r.unstructured) jr["unstructured"] = *r.unstructured;
    for (const auto& [k, v] : r.structured) jr[k] = v;
    refs.push_back(std::move(jr));
  }
  msg["reference"] = std::move(refs);
  return msg.dump();
}

namespace {

bool is_retryable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

std::string request_body(const std::string& doi, const EndpointConfig& config) {
  std::string base = config.base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  httplib::Client client(base);
  client.set_connection_timeout(config.timeout_seconds, 0);
  client.set_read_timeout(config.timeout_seconds, 0);
  client.set_follow_location(true);
  std::string agent = "refaudit/0.1";
  if (!config.contact.empty()) agent += " (mailto:" + config.contact + ")";
  client.set_default_headers({{"User-Agent", agent}});

  std::string path = "/works/" + percent_encode(doi);
  int attempts = config.max_retries + 1;
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    double delay = config.delay_seconds * (attempt == 0 ? 1.0 : static_cast<double>(attempt + 1));
    if (delay > 0)
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    auto res = client.Get(path);
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 404) throw NotRegistered(doi);
    if (res->status >= 200 && res->status < 300) return res->body;
    last_error = "HTTP " + std::to_string(res->status);
    if (!is_retryable_status(res->status)) break;
  }
  throw TransportError(doi, "fetch failed for " + doi + ": " + last_error);
}

}  // namespace

std::string fetch_record_body(const std::string& doi, const EndpointConfig& config) {
  return request_body(doi, config);
}

CrossrefRecord fetch_record(const std::string& doi, const EndpointConfig& config) {
  return parse_record(request_body(doi, config));
}

namespace {

bool has_suffix(const std::string& name, std::string_view suffix) {
  return name.size() >= suffix.size() &&
         name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool is_batch_name(const std::string& name) {
  return has_suffix(name, ".json.gz") || has_suffix(name, ".json");
}

}  // namespace

// Plain tars stream from disk; a .tar.gz is inflated into the buffer once.
struct SnapshotReader::TarSource {
  std::ifstream file;
  std::string buffer;
  std::size_t offset = 0;
  bool buffered = false;

  bool read_exact(char* dst, std::size_t n) {
    if (buffered) {
      if (offset + n > buffer.size()) return false;
      std::memcpy(dst, buffer.data() + offset, n);
      offset += n;
      return true;
    }
    file.read(dst, static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(file.gcount()) == n;
  }

  bool skip(std::size_t n) {
    if (buffered) {
      if (offset + n > buffer.size()) return false;
      offset += n;
      return true;
    }
    file.seekg(static_cast<std::streamoff>(n), std::ios::cur);
    return static_cast<bool>(file);
  }
};

SnapshotReader::SnapshotReader(const std::filesystem::path& source) {
  std::error_code ec;
  if (std::filesystem::is_directory(source, ec)) {
    for (const auto& e : std::filesystem::directory_iterator(source)) {
      if (e.is_regular_file() && is_batch_name(e.path().filename().string()))
        files_.push_back(e.path());
    }
    std::sort(files_.begin(), files_.end());
  } else if (std::filesystem::is_regular_file(source, ec)) {
    tar_mode_ = true;
    tar_ = std::make_unique<TarSource>();
    const std::string fname = source.filename().string();
    if (has_suffix(fname, ".tar.gz") || has_suffix(fname, ".tgz")) {
      tar_->buffer = gunzip(read_file(source));
      tar_->buffered = true;
    } else {
      tar_->file.open(source, std::ios::binary);
      if (!tar_->file) throw std::runtime_error("cannot open " + source.string());
    }
  } else {
    throw std::runtime_error("snapshot source not readable: " + source.string());
  }
}

SnapshotReader::~SnapshotReader() = default;
SnapshotReader::SnapshotReader(SnapshotReader&&) noexcept = default;
SnapshotReader& SnapshotReader::operator=(SnapshotReader&&) noexcept = default;

// One ustar entry: 512-byte header, octal size at offset 124, data padded to
// 512. Returns regular *.json / *.json.gz members only.
bool SnapshotReader::next_tar_entry(std::string& name, std::string& data) {
  char hdr[512];
  while (tar_->read_exact(hdr, sizeof(hdr))) {
    if (hdr[0] == '\0') return false;  // end-of-archive blocks
    name.assign(hdr, strnlen(hdr, 100));
    char size_field[13];
    std::memcpy(size_field, hdr + 124, 12);
    size_field[12] = '\0';
    std::size_t size = static_cast<std::size_t>(strtoull(size_field, nullptr, 8));
    std::size_t padded = (size + 511) / 512 * 512;
    char type = hdr[156];
    if ((type == '0' || type == '\0') && !name.empty() && is_batch_name(name)) {
      data.resize(size);
      if (!tar_->read_exact(data.data(), size)) return false;  // truncated
      if (!tar_->skip(padded - size)) return true;             // last entry unpadded
      return true;
    }
    if (!tar_->skip(padded)) return false;
  }
  return false;
}

void SnapshotReader::ingest_batch(const std::string& name, const std::string& bytes) {
  std::string text;
  try {
    text = has_suffix(name, ".gz") ? gunzip(bytes) : bytes;
  } catch (const std::exception&) {
    ++stats_.files_skipped;
    return;
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error&) {
    ++stats_.files_skipped;
    return;
  }
  auto items = doc.find("items");
  if (items == doc.end() || !items->is_array()) {
    ++stats_.files_skipped;
    return;
  }
  ++stats_.files_read;
  pending_.clear();
  pending_index_ = 0;
  pending_.reserve(items->size());
  for (const auto& item : *items) {
    try {
      pending_.push_back(parse_message(item));
    } catch (const std::exception&) {
      ++stats_.items_skipped;
    }
  }
}

bool SnapshotReader::load_next_batch() {
  while (true) {
    if (tar_mode_) {
      std::string name, data;
      if (!next_tar_entry(name, data)) return false;
      ingest_batch(name, data);
    } else {
      if (file_index_ >= files_.size()) return false;
      const auto& path = files_[file_index_++];
      std::string bytes;
      try {
        bytes = read_file(path);
      } catch (const std::exception&) {
        ++stats_.files_skipped;
        continue;
      }
      ingest_batch(path.filename().string(), bytes);
    }
    if (pending_index_ < pending_.size()) return true;
  }
}

std::optional<CrossrefRecord> SnapshotReader::next() {
  if (pending_index_ >= pending_.size() && !load_next_batch()) return std::nullopt;
  ++stats_.items_yielded;
  return std::move(pending_[pending_index_++]);
}

std::filesystem::path record_cache_path(const std::filesystem::path& cache_dir,
                                        std::string_view doi) {
  return cache_dir / "records" / (percent_encode(doi) + ".json");
}

}  // namespace refaudit
