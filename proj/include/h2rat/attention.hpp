#pragma once

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "h2rat/tape.hpp"
#include "h2rat/tensor.hpp"
#include "h2rat/vision.hpp"

namespace h2rat {

/// Weights of one attention hop over m x d region features.
struct AttentionLayerParams {
  Parameter region_weight;  // k x m, applied to V
  Parameter query_weight;   // k x m, applied to the query
  Parameter query_bias;     // k x 1
  Parameter score_weight;   // 1 x k, applied to every column of h
  Parameter score_bias;     // 1 x 1

  static AttentionLayerParams zeros(const std::string& prefix, std::size_t k, std::size_t m);
  std::size_t attention_dim() const { return region_weight.value.rows(); }
  std::size_t feature_dim() const { return region_weight.value.cols(); }
};

struct H2ratParams {
  AttentionLayerParams layer1;
  AttentionLayerParams layer2;
  Parameter head_weight;  // C x m
  Parameter head_bias;    // C x 1
  // 1 or 2 stacked hops. Layer2 weights are carried but unused when 1.
  std::size_t layers = 2;

  static H2ratParams zeros(std::size_t m, std::size_t k, std::size_t classes);
  std::size_t classes() const { return head_bias.value.rows(); }
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

struct LayerVars {
  Var p;  // d x 1 attention over regions
  Var v;  // m x 1 attended feature, V p
  Var u;  // m x 1 refined query, v + query
};

/// One attention hop:
///   h = tanh((W_V V) (+) (W_R q + b_R))      k x d
///   p = softmax((w_p h + b_p)^T)              d x 1
///   v = V p,  u = v + q
LayerVars attention_layer(Tape& tape, Var regions, Var query, const AttentionLayerParams& params);

struct OutcomeVars {
  LayerVars first;
  LayerVars second;  // same as first for a single-layer model
  Var p_ans;
};

OutcomeVars forward(Tape& tape, Var regions, Var reminder, const H2ratParams& params);

struct AttentionOutcome {
  Tensor p1;
  Tensor p2;
  Tensor v1;
  Tensor v2;
  Tensor u1;
  Tensor u2;
  Tensor p_ans;
  std::size_t predicted_class = 0;
  double confidence = 0.0;
};

AttentionOutcome read_outcome(const Tape& tape, const OutcomeVars& vars);
AttentionOutcome forward(const Tensor& regions, const Tensor& reminder, const H2ratParams& params);

// Quadrant of a region: 0 upper-left, 1 upper-right, 2 lower-left,
// 3 lower-right. Middle rows/cols of odd grids fall to the upper/left half.
int zone_of(const GridGeometry& g, std::size_t region);

/// Conditional action distributions keyed by (predicted class, zone of the
/// most attended region).
class CorrectionTable {
 public:
  struct Candidate {
    int action = 0;
    double probability = 0.0;
    friend bool operator==(const Candidate&, const Candidate&) = default;
  };
  using Key = std::pair<int, int>;

  // Throws InvalidArgument unless candidates are non-empty, nonnegative and
  // sum to one within 1e-9.
  void set(int cls, int zone, std::vector<Candidate> candidates);
  const std::vector<Candidate>* find(int cls, int zone) const;
  const std::map<Key, std::vector<Candidate>>& rows() const { return rows_; }

  std::vector<std::string> action_names;

  friend bool operator==(const CorrectionTable&, const CorrectionTable&) = default;

 private:
  std::map<Key, std::vector<Candidate>> rows_;
};

// argmax of the candidate probabilities, ties to the lowest action id.
int best_action(const std::vector<CorrectionTable::Candidate>& candidates);

// Looks up (predicted class, zone of argmax p2). Throws NoCorrectionKnown.
int recommend_correction(const AttentionOutcome& outcome, const GridGeometry& geometry,
                         const CorrectionTable& table);

}  // namespace h2rat
