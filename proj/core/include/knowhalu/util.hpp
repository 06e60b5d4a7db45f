#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace knowhalu {

// 64-bit FNV-1a. Used for prompt fingerprints and asset checksums.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ull);

std::string to_hex(std::uint64_t value);

// Collapses runs of whitespace to a single space and trims both ends.
std::string normalize_whitespace(std::string_view text);

std::vector<std::string> split_words(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string trim(std::string_view text);

std::string to_lower(std::string_view text);

// Writes `content` to `path` via a temp file + rename so a killed run never
// leaves a truncated file that parses.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace knowhalu
