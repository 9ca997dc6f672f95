#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mcforge {

std::string_view ltrim(std::string_view s);
std::string_view rtrim(std::string_view s);
std::string_view trim(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_ws(std::string_view s);
std::vector<std::string> split_lines(std::string_view text);

std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

/// Full-token numeric parse ("-110.", "1e-5", "+3").  Rejects inf/nan and
/// partial matches.
std::optional<double> parse_number(std::string_view token);

std::string read_file(const std::filesystem::path& path);      // throws io_error / missing_file
void write_file(const std::filesystem::path& path, std::string_view content);
/// Write to a sibling temp file then rename over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view data);

/// splitmix64: cheap deterministic mixing for reproducible pseudo-noise.
std::uint64_t splitmix64(std::uint64_t x);
/// Uniform in (0,1), never exactly 0 or 1.
double hash_uniform(std::uint64_t x);
/// Standard normal deviate derived from two hash_uniform draws.
double hash_gaussian(std::uint64_t x);

} // namespace mcforge
