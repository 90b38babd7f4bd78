#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace refaudit {

using Instant = std::chrono::sys_seconds;

// Parses "YYYY-MM-DDTHH:MM:SS[.frac][Z|+hh:mm|-hh:mm]". Fractional seconds
// are dropped, offsets folded into UTC. Returns nullopt on anything else.
std::optional<Instant> parse_iso8601(std::string_view text);

// "YYYY-MM-DDTHH:MM:SSZ", always UTC.
std::string format_iso8601(Instant t);

// Calendar-day difference a - b, both taken as UTC days.
long long delta_days(Instant a, Instant b);

// RFC 3986 percent-encoding of everything outside [A-Za-z0-9._~-],
// so a DOI maps to a single safe file name.
std::string percent_encode(std::string_view s);

std::string read_file(const std::filesystem::path& path);
bool file_exists(const std::filesystem::path& path);

// Writes to a sibling temp file and renames into place.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

std::string ascii_lower(std::string_view s);
std::string_view trim_view(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);

// Minimal CSV quoting: wraps the field when it contains , " or newline.
std::string csv_field(std::string_view s);

// Inflates a gzip (or zlib) buffer. Throws std::runtime_error on corrupt input.
std::string gunzip(std::string_view compressed);
std::string gzip_compress(std::string_view plain);   // gzip wrapper
std::string zlib_compress(std::string_view plain);   // zlib wrapper (PDF FlateDecode)

}  // namespace refaudit
