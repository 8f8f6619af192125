#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace h2rat {

/// Plain-text run configuration.
///
///   # comment            '#' starts a comment anywhere on a line
///   seed = 7             keys before any header belong to section ""
///   [train]              section header
///   epochs = 40          key = value; surrounding whitespace is trimmed
///
/// Later assignments override earlier ones, which is how command-line flags
/// are layered on top of a file.
class RunConfig {
 public:
  // Throws FormatError with the line number on malformed input.
  static RunConfig parse(std::string_view text, const std::string& source = "config");
  static RunConfig load(const std::filesystem::path& path);

  void set(const std::string& section, const std::string& key, std::string value);
  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  bool has(const std::string& section, const std::string& key) const;

  // Copies every entry of other over this one.
  void merge(const RunConfig& other);

  // Throws InvalidArgument naming the first key not listed for its section.
  void require_known(const std::map<std::string, std::set<std::string>>& allowed) const;

  // Typed lookups; FormatError when the value does not parse.
  std::size_t get_count(const std::string& section, const std::string& key) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key) const;
  bool get_flag(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  const std::string& require(const std::string& section, const std::string& key) const;

  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace h2rat
