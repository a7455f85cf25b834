#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace qacgen {

// 64-bit FNV-1a. Stable content hash for fingerprints and config digests.
class Fnv1a {
 public:
  Fnv1a& update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001B3ULL;
    }
    return *this;
  }
  Fnv1a& update_u64(std::uint64_t v);
  std::uint64_t value() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xCBF29CE484222325ULL;
};

std::string to_hex(std::uint64_t v);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);  // ASCII only
bool starts_with_icase(std::string_view s, std::string_view prefix);
std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string> split_words(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
// Replaces each run of '\r'/'\n' with a single space.
std::string flatten_newlines(std::string_view s);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
std::string to_jsonl(const std::vector<nlohmann::ordered_json>& rows);

}  // namespace qacgen
