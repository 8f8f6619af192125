#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "h2rat/tape.hpp"
#include "h2rat/tensor.hpp"

namespace h2rat {

inline constexpr std::size_t kPadIndex = 0;
inline constexpr std::size_t kUnkIndex = 1;
inline constexpr std::size_t kMaxReminderLength = 15;

class Vocabulary {
 public:
  // PAD and UNK only.
  Vocabulary();

  // Adds words in the given order, skipping duplicates.
  static Vocabulary from_words(const std::vector<std::string>& words);

  // Returns the existing index if word is already present.
  std::size_t add(const std::string& word);

  // UNK for unknown words.
  std::size_t index_of(std::string_view word) const;
  bool contains(std::string_view word) const;
  const std::string& token(std::size_t index) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct Reminder {
  std::string raw_text;
  std::vector<std::string> words;
  std::vector<std::size_t> tokens;

  std::size_t length() const { return tokens.size(); }
  std::size_t unknown_count() const;
};

// Lowercases ASCII letters, drops ASCII punctuation and splits on whitespace.
// Non-ASCII bytes pass through unchanged.
std::vector<std::string> normalize_words(std::string_view text);

// Throws InvalidArgument when nothing survives normalization. Longer inputs
// are truncated to max_len words.
Reminder tokenize(std::string_view text, const Vocabulary& vocab,
                  std::size_t max_len = kMaxReminderLength);

/// Single-layer LSTM cell with hidden size equal to input size.
///
///   i = sigmoid(W_i x + U_i h + b_i)     f = sigmoid(W_f x + U_f h + b_f)
///   o = sigmoid(W_o x + U_o h + b_o)     g = tanh(W_g x + U_g h + b_g)
///   c' = f * c + i * g                   h' = o * tanh(c')
struct LstmParams {
  struct Gate {
    Parameter input;      // m x m
    Parameter recurrent;  // m x m
    Parameter bias;       // m x 1
  };
  Gate in_gate;
  Gate forget_gate;
  Gate out_gate;
  Gate cell_gate;

  static LstmParams zeros(std::size_t m);
  std::size_t hidden() const { return in_gate.bias.value.rows(); }
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

// Column lookup into the m x |V| embedding: equivalent to M_we times a
// one-hot vector.
std::vector<Var> embed(Tape& tape, const Reminder& reminder, Var embedding);
std::vector<Tensor> embed(const Reminder& reminder, const Tensor& embedding);

// Final hidden state after scanning the sequence from a zero state.
Var encode_reminder(Tape& tape, const std::vector<Var>& sequence, const LstmParams& params);
Tensor encode_reminder(const std::vector<Tensor>& sequence, const LstmParams& params);

}  // namespace h2rat
