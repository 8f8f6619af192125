#include "h2rat/textenc.hpp"

#include <algorithm>
#include <cctype>

#include "h2rat/errors.hpp"

namespace h2rat {

Vocabulary::Vocabulary() {
  add("<pad>");
  add("<unk>");
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
  Vocabulary v;
  for (const auto& w : words) v.add(w);
  return v;
}

std::size_t Vocabulary::add(const std::string& word) {
  if (auto it = index_.find(word); it != index_.end()) return it->second;
  const std::size_t idx = tokens_.size();
  tokens_.push_back(word);
  index_.emplace(word, idx);
  return idx;
}

std::size_t Vocabulary::index_of(std::string_view word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnkIndex : it->second;
}

bool Vocabulary::contains(std::string_view word) const { return index_.find(word) != index_.end(); }

const std::string& Vocabulary::token(std::size_t index) const {
  if (index >= tokens_.size()) {
    throw InvalidArgument("vocabulary index " + std::to_string(index) + " out of range");
  }
  return tokens_[index];
}

std::size_t Reminder::unknown_count() const {
  return static_cast<std::size_t>(std::count(tokens.begin(), tokens.end(), kUnkIndex));
}

std::vector<std::string> normalize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (u < 0x80 && std::isspace(u)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else if (u < 0x80 && std::ispunct(u)) {
      continue;
    } else {
      current.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : ch);
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

Reminder tokenize(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len == 0) throw InvalidArgument("tokenize: max_len must be positive");
  Reminder r;
  r.raw_text = std::string(text);
  r.words = normalize_words(text);
  if (r.words.empty()) throw InvalidArgument("reminder is empty after normalization");
  if (r.words.size() > max_len) r.words.resize(max_len);
  r.tokens.reserve(r.words.size());
  for (const auto& w : r.words) r.tokens.push_back(vocab.index_of(w));
  return r;
}

LstmParams LstmParams::zeros(std::size_t m) {
  auto gate = [m](const std::string& name) {
    return Gate{Parameter{"lstm." + name + ".input", Tensor(m, m)},
                Parameter{"lstm." + name + ".recurrent", Tensor(m, m)},
                Parameter{"lstm." + name + ".bias", Tensor(m, 1)}};
  };
  return LstmParams{gate("in"), gate("forget"), gate("out"), gate("cell")};
}

std::vector<Parameter*> LstmParams::parameters() {
  std::vector<Parameter*> out;
  for (Gate* g : {&in_gate, &forget_gate, &out_gate, &cell_gate}) {
    out.insert(out.end(), {&g->input, &g->recurrent, &g->bias});
  }
  return out;
}

std::vector<const Parameter*> LstmParams::parameters() const {
  auto mut = const_cast<LstmParams*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

std::vector<Var> embed(Tape& tape, const Reminder& reminder, Var embedding) {
  const Tensor& table = tape.value(embedding);
  std::vector<Var> out;
  out.reserve(reminder.tokens.size());
  for (std::size_t token : reminder.tokens) {
    if (token >= table.cols()) {
      throw InvalidArgument("token index " + std::to_string(token) +
                            " outside embedding with " + std::to_string(table.cols()) +
                            " columns");
    }
    out.push_back(tape.column(embedding, token));
  }
  return out;
}

std::vector<Tensor> embed(const Reminder& reminder, const Tensor& embedding) {
  Tape tape;
  const auto vars = embed(tape, reminder, tape.constant(embedding));
  std::vector<Tensor> out;
  out.reserve(vars.size());
  for (Var v : vars) out.push_back(tape.value(v));
  return out;
}

namespace {

Var gate_preactivation(Tape& tape, const LstmParams::Gate& gate, Var x, Var h) {
  Var wx = tape.matmul(tape.param(gate.input), x);
  Var uh = tape.matmul(tape.param(gate.recurrent), h);
  return tape.add(tape.add(wx, uh), tape.param(gate.bias));
}

}  // namespace

Var encode_reminder(Tape& tape, const std::vector<Var>& sequence, const LstmParams& params) {
  if (sequence.empty()) throw InvalidArgument("encode_reminder: empty sequence");
  const std::size_t m = params.hidden();
  for (Var x : sequence) {
    if (tape.value(x).shape() != Shape{m, 1}) {
      throw DimensionError("encode_reminder: input " + tape.value(x).shape().str() +
                           " does not match hidden size " + std::to_string(m));
    }
  }
  Var h = tape.constant(Tensor(m, 1));
  Var c = tape.constant(Tensor(m, 1));
  for (Var x : sequence) {
    Var i = tape.sigmoid(gate_preactivation(tape, params.in_gate, x, h));
    Var f = tape.sigmoid(gate_preactivation(tape, params.forget_gate, x, h));
    Var o = tape.sigmoid(gate_preactivation(tape, params.out_gate, x, h));
    Var g = tape.tanh(gate_preactivation(tape, params.cell_gate, x, h));
    c = tape.add(tape.hadamard(f, c), tape.hadamard(i, g));
    h = tape.hadamard(o, tape.tanh(c));
  }
  return h;
}

Tensor encode_reminder(const std::vector<Tensor>& sequence, const LstmParams& params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(sequence.size());
  for (const auto& t : sequence) vars.push_back(tape.constant(t));
  return tape.value(encode_reminder(tape, vars, params));
}

}  // namespace h2rat
