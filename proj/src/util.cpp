#include "refaudit/util.hpp"

#include <unistd.h>
#include <zlib.h>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace refaudit {

namespace {

// Howard Hinnant's days-from-civil; chrono::year_month_day provides the same
// conversion but this keeps the parser independent of chrono formatting gaps
// in libstdc++ 11.
long long days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

void civil_from_days(long long z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const long long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long long yy = static_cast<long long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y = static_cast<int>(yy + (m <= 2));
}

bool parse_uint(std::string_view s, size_t& pos, int digits, int& out) {
  if (pos + digits > s.size()) return false;
  int v = 0;
  for (int i = 0; i < digits; ++i) {
    char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  pos += digits;
  out = v;
  return true;
}

}  // namespace

std::optional<Instant> parse_iso8601(std::string_view text) {
  std::string_view s = trim_view(text);
  size_t p = 0;
  int year, mon, day, hh = 0, mm = 0, ss = 0;
  if (!parse_uint(s, p, 4, year)) return std::nullopt;
  if (p >= s.size() || s[p] != '-') return std::nullopt;
  ++p;
  if (!parse_uint(s, p, 2, mon)) return std::nullopt;
  if (p >= s.size() || s[p] != '-') return std::nullopt;
  ++p;
  if (!parse_uint(s, p, 2, day)) return std::nullopt;
  if (mon < 1 || mon > 12 || day < 1 || day > 31) return std::nullopt;

  long long offset_sec = 0;
  if (p < s.size()) {
    if (s[p] != 'T' && s[p] != 't' && s[p] != ' ') return std::nullopt;
    ++p;
    if (!parse_uint(s, p, 2, hh)) return std::nullopt;
    if (p >= s.size() || s[p] != ':') return std::nullopt;
    ++p;
    if (!parse_uint(s, p, 2, mm)) return std::nullopt;
    if (p < s.size() && s[p] == ':') {
      ++p;
      if (!parse_uint(s, p, 2, ss)) return std::nullopt;
    }
    if (p < s.size() && s[p] == '.') {
      ++p;
      while (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p]))) ++p;
    }
    if (p < s.size()) {
      char c = s[p];
      if (c == 'Z' || c == 'z') {
        ++p;
      } else if (c == '+' || c == '-') {
        ++p;
        int oh, om = 0;
        if (!parse_uint(s, p, 2, oh)) return std::nullopt;
        if (p < s.size() && s[p] == ':') ++p;
        if (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p]))) {
          if (!parse_uint(s, p, 2, om)) return std::nullopt;
        }
        offset_sec = (c == '+' ? 1 : -1) * (oh * 3600LL + om * 60LL);
      }
    }
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  }
  if (p != s.size()) return std::nullopt;

  long long days = days_from_civil(year, static_cast<unsigned>(mon), static_cast<unsigned>(day));
  long long secs = days * 86400LL + hh * 3600LL + mm * 60LL + ss - offset_sec;
  return Instant{std::chrono::seconds{secs}};
}

std::string format_iso8601(Instant t) {
  long long total = t.time_since_epoch().count();
  long long days = total / 86400;
  long long rem = total % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  int y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", y, m, d, rem / 3600,
                (rem % 3600) / 60, rem % 60);
  return buf;
}

long long delta_days(Instant a, Instant b) {
  auto day_of = [](Instant t) {
    long long s = t.time_since_epoch().count();
    long long d = s / 86400;
    if (s % 86400 < 0) --d;
    return d;
  };
  return day_of(a) - day_of(b);
}

std::string percent_encode(std::string_view s) {
  static const char hex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 0xF]);
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool file_exists(const std::filesystem::path& path) {
  std::error_code ec;
  return std::filesystem::exists(path, ec);
}

void atomic_write_file(const std::filesystem::path& path, std::string_view content) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim_view(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == '\n') {
      std::string_view line = s.substr(start, i - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      out.emplace_back(line);
      start = i + 1;
    }
  }
  if (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string gunzip(std::string_view compressed) {
  z_stream strm{};
  // 32 + MAX_WBITS: accept both gzip and zlib wrappers.
  if (inflateInit2(&strm, 32 + MAX_WBITS) != Z_OK) throw std::runtime_error("inflateInit failed");
  std::string out;
  std::vector<unsigned char> buf(1 << 16);
  strm.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
  strm.avail_in = static_cast<uInt>(compressed.size());
  int ret = Z_OK;
  do {
    strm.next_out = buf.data();
    strm.avail_out = static_cast<uInt>(buf.size());
    ret = inflate(&strm, Z_NO_FLUSH);
    if (ret != Z_OK && ret != Z_STREAM_END) {
      inflateEnd(&strm);
      throw std::runtime_error("corrupt gzip stream");
    }
    out.append(reinterpret_cast<char*>(buf.data()), buf.size() - strm.avail_out);
  } while (ret != Z_STREAM_END && strm.avail_in > 0);
  inflateEnd(&strm);
  if (ret != Z_STREAM_END) throw std::runtime_error("truncated gzip stream");
  return out;
}

namespace {

std::string deflate_with_window(std::string_view plain, int window_bits) {
  z_stream strm{};
  if (deflateInit2(&strm, Z_DEFAULT_COMPRESSION, Z_DEFLATED, window_bits, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK)
    throw std::runtime_error("deflateInit failed");
  std::string out;
  std::vector<unsigned char> buf(1 << 16);
  strm.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(plain.data()));
  strm.avail_in = static_cast<uInt>(plain.size());
  int ret;
  do {
    strm.next_out = buf.data();
    strm.avail_out = static_cast<uInt>(buf.size());
    ret = deflate(&strm, Z_FINISH);
    out.append(reinterpret_cast<char*>(buf.data()), buf.size() - strm.avail_out);
  } while (ret != Z_STREAM_END);
  deflateEnd(&strm);
  return out;
}

}  // namespace

std::string gzip_compress(std::string_view plain) {
  return deflate_with_window(plain, 16 + MAX_WBITS);
}

std::string zlib_compress(std::string_view plain) {
  return deflate_with_window(plain, MAX_WBITS);
}

}  // namespace refaudit
