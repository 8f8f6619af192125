#pragma once

#include <json.hpp>

#include "h2rat/attention.hpp"
#include "h2rat/errors.hpp"
#include "h2rat/textenc.hpp"

namespace h2rat::json_io {

using nlohmann::json;

json to_json(const CorrectionTable& table);
CorrectionTable correction_table_from_json(const json& j);

json to_json(const Vocabulary& vocab);
Vocabulary vocabulary_from_json(const json& j);

// Parses a metadata document, converting library exceptions to FormatError.
json parse_document(const std::string& text, const std::string& what);

// Runs fn and rethrows nlohmann type/key errors as FormatError.
template <typename Fn>
auto guarded(const std::string& what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw FormatError(what + ": malformed metadata (" + e.what() + ")");
  } catch (const InvalidArgument& e) {
    throw FormatError(what + ": " + e.what());
  }
}

}  // namespace h2rat::json_io
