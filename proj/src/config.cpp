#include "h2rat/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "h2rat/errors.hpp"

namespace h2rat {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& text, const std::string& key) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw FormatError("setting '" + key + "': '" + text + "' is not a valid number");
  }
  return value;
}

}  // namespace

RunConfig RunConfig::parse(std::string_view text, const std::string& source) {
  RunConfig config;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(std::string_view(raw).substr(0, raw.find('#')));
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw FormatError(where + ": unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw FormatError(where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw FormatError(where + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError(where + ": missing key");
    config.set(section, std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return config;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

void RunConfig::set(const std::string& section, const std::string& key, std::string value) {
  sections_[section][key] = std::move(value);
}

std::optional<std::string> RunConfig::get(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return std::nullopt;
  auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

bool RunConfig::has(const std::string& section, const std::string& key) const {
  return get(section, key).has_value();
}

void RunConfig::merge(const RunConfig& other) {
  for (const auto& [section, entries] : other.sections_) {
    for (const auto& [key, value] : entries) set(section, key, value);
  }
}

void RunConfig::require_known(const std::map<std::string, std::set<std::string>>& allowed) const {
  for (const auto& [section, entries] : sections_) {
    auto a = allowed.find(section);
    for (const auto& [key, value] : entries) {
      if (a == allowed.end() || a->second.count(key) == 0) {
        throw InvalidArgument("unknown setting '" + (section.empty() ? key : section + "." + key) + "'");
      }
    }
  }
}

const std::string& RunConfig::require(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s != sections_.end()) {
    if (auto k = s->second.find(key); k != s->second.end()) return k->second;
  }
  throw InvalidArgument("missing setting '" + (section.empty() ? key : section + "." + key) + "'");
}

std::size_t RunConfig::get_count(const std::string& section, const std::string& key) const {
  return parse_number<std::size_t>(require(section, key), key);
}

std::uint64_t RunConfig::get_u64(const std::string& section, const std::string& key) const {
  return parse_number<std::uint64_t>(require(section, key), key);
}

double RunConfig::get_double(const std::string& section, const std::string& key) const {
  return parse_number<double>(require(section, key), key);
}

bool RunConfig::get_flag(const std::string& section, const std::string& key) const {
  const auto& v = require(section, key);
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw FormatError("setting '" + key + "': '" + v + "' is not on/off");
}

std::string RunConfig::get_string(const std::string& section, const std::string& key) const {
  return require(section, key);
}

}  // namespace h2rat
