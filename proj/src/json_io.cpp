#include "json_io.hpp"

namespace h2rat::json_io {

json to_json(const CorrectionTable& table) {
  json rows = json::array();
  for (const auto& [key, candidates] : table.rows()) {
    json cands = json::array();
    for (const auto& c : candidates) cands.push_back({{"action", c.action}, {"p", c.probability}});
    rows.push_back({{"class", key.first}, {"zone", key.second}, {"candidates", cands}});
  }
  return {{"actions", table.action_names}, {"rows", rows}};
}

CorrectionTable correction_table_from_json(const json& j) {
  CorrectionTable table;
  table.action_names = j.at("actions").get<std::vector<std::string>>();
  for (const auto& row : j.at("rows")) {
    std::vector<CorrectionTable::Candidate> cands;
    for (const auto& c : row.at("candidates")) {
      cands.push_back({c.at("action").get<int>(), c.at("p").get<double>()});
    }
    table.set(row.at("class").get<int>(), row.at("zone").get<int>(), std::move(cands));
  }
  return table;
}

json to_json(const Vocabulary& vocab) { return vocab.tokens(); }

Vocabulary vocabulary_from_json(const json& j) {
  const auto tokens = j.get<std::vector<std::string>>();
  if (tokens.size() < 2 || tokens[kPadIndex] != "<pad>" || tokens[kUnkIndex] != "<unk>") {
    throw InvalidArgument("vocabulary must start with <pad>, <unk>");
  }
  Vocabulary v = Vocabulary::from_words(tokens);
  if (v.size() != tokens.size()) throw InvalidArgument("vocabulary contains duplicate tokens");
  return v;
}

json parse_document(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(what + ": metadata is not valid JSON (" + e.what() + ")");
  }
}

}  // namespace h2rat::json_io
