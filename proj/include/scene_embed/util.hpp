#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace scene_embed {

/// Data-level error (bad file, bad record, contract violation). The CLI maps
/// these to exit code 2, as opposed to usage errors (exit 1).
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

std::string read_file(const std::string& path);

// FNV-1a, used to fingerprint input files in run manifests.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64_file(const std::string& path);

}  // namespace scene_embed
