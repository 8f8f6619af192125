#include "h2rat/attention.hpp"

#include <algorithm>
#include <cmath>

#include "h2rat/errors.hpp"

namespace h2rat {

AttentionLayerParams AttentionLayerParams::zeros(const std::string& prefix, std::size_t k,
                                                 std::size_t m) {
  return AttentionLayerParams{
      Parameter{prefix + ".region_weight", Tensor(k, m)},
      Parameter{prefix + ".query_weight", Tensor(k, m)},
      Parameter{prefix + ".query_bias", Tensor(k, 1)},
      Parameter{prefix + ".score_weight", Tensor(1, k)},
      Parameter{prefix + ".score_bias", Tensor(1, 1)},
  };
}

H2ratParams H2ratParams::zeros(std::size_t m, std::size_t k, std::size_t classes) {
  return H2ratParams{
      AttentionLayerParams::zeros("attention1", k, m),
      AttentionLayerParams::zeros("attention2", k, m),
      Parameter{"head.weight", Tensor(classes, m)},
      Parameter{"head.bias", Tensor(classes, 1)},
      2,
  };
}

std::vector<Parameter*> H2ratParams::parameters() {
  std::vector<Parameter*> out;
  for (AttentionLayerParams* l : {&layer1, &layer2}) {
    out.insert(out.end(), {&l->region_weight, &l->query_weight, &l->query_bias, &l->score_weight,
                           &l->score_bias});
  }
  out.insert(out.end(), {&head_weight, &head_bias});
  return out;
}

std::vector<const Parameter*> H2ratParams::parameters() const {
  auto mut = const_cast<H2ratParams*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

LayerVars attention_layer(Tape& tape, Var regions, Var query, const AttentionLayerParams& params) {
  const Tensor& v = tape.value(regions);
  const Tensor& q = tape.value(query);
  if (q.cols() != 1 || q.rows() != v.rows()) {
    throw DimensionError("attention_layer: query " + q.shape().str() + " does not match regions " +
                         v.shape().str());
  }
  Var projected_regions = tape.matmul(tape.param(params.region_weight), regions);
  Var projected_query =
      tape.add(tape.matmul(tape.param(params.query_weight), query), tape.param(params.query_bias));
  Var hidden = tape.tanh(tape.broadcast_add_columns(projected_regions, projected_query));
  // 1 x d scores; the scalar bias broadcasts along the single row.
  Var scores = tape.broadcast_add_columns(tape.matmul(tape.param(params.score_weight), hidden),
                                          tape.param(params.score_bias));
  Var p = tape.softmax(tape.transpose(scores));
  Var attended = tape.matmul(regions, p);
  return LayerVars{p, attended, tape.add(attended, query)};
}

OutcomeVars forward(Tape& tape, Var regions, Var reminder, const H2ratParams& params) {
  if (params.layers != 1 && params.layers != 2) {
    throw InvalidArgument("attention model supports 1 or 2 layers, got " +
                          std::to_string(params.layers));
  }
  OutcomeVars out;
  out.first = attention_layer(tape, regions, reminder, params.layer1);
  out.second = params.layers == 2 ? attention_layer(tape, regions, out.first.u, params.layer2)
                                  : out.first;
  Var logits =
      tape.add(tape.matmul(tape.param(params.head_weight), out.second.u), tape.param(params.head_bias));
  out.p_ans = tape.softmax(logits);
  return out;
}

AttentionOutcome read_outcome(const Tape& tape, const OutcomeVars& vars) {
  AttentionOutcome o;
  o.p1 = tape.value(vars.first.p);
  o.v1 = tape.value(vars.first.v);
  o.u1 = tape.value(vars.first.u);
  o.p2 = tape.value(vars.second.p);
  o.v2 = tape.value(vars.second.v);
  o.u2 = tape.value(vars.second.u);
  o.p_ans = tape.value(vars.p_ans);
  o.predicted_class = argmax(o.p_ans);
  o.confidence = o.p_ans[o.predicted_class];
  return o;
}

AttentionOutcome forward(const Tensor& regions, const Tensor& reminder, const H2ratParams& params) {
  Tape tape;
  const auto vars = forward(tape, tape.constant(regions), tape.constant(reminder), params);
  return read_outcome(tape, vars);
}

int zone_of(const GridGeometry& g, std::size_t region) {
  if (region >= g.regions()) throw InvalidArgument("zone_of: region out of range");
  const std::size_t r = region / g.cols;
  const std::size_t c = region % g.cols;
  const int lower = 2 * r >= g.rows ? 1 : 0;
  const int right = 2 * c >= g.cols ? 1 : 0;
  return 2 * lower + right;
}

void CorrectionTable::set(int cls, int zone, std::vector<Candidate> candidates) {
  if (candidates.empty()) throw InvalidArgument("correction row must not be empty");
  double total = 0.0;
  for (const auto& c : candidates) {
    if (!(c.probability >= 0.0) || !std::isfinite(c.probability)) {
      throw InvalidArgument("correction probabilities must be finite and nonnegative");
    }
    total += c.probability;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidArgument("correction row (" + std::to_string(cls) + ", " + std::to_string(zone) +
                          ") sums to " + std::to_string(total));
  }
  rows_[{cls, zone}] = std::move(candidates);
}

const std::vector<CorrectionTable::Candidate>* CorrectionTable::find(int cls, int zone) const {
  auto it = rows_.find({cls, zone});
  return it == rows_.end() ? nullptr : &it->second;
}

int best_action(const std::vector<CorrectionTable::Candidate>& candidates) {
  if (candidates.empty()) throw InvalidArgument("best_action: no candidates");
  const CorrectionTable::Candidate* best = &candidates.front();
  for (const auto& c : candidates) {
    if (c.probability > best->probability ||
        (c.probability == best->probability && c.action < best->action)) {
      best = &c;
    }
  }
  return best->action;
}

int recommend_correction(const AttentionOutcome& outcome, const GridGeometry& geometry,
                         const CorrectionTable& table) {
  const int cls = static_cast<int>(outcome.predicted_class);
  const int zone = zone_of(geometry, argmax(outcome.p2));
  const auto* row = table.find(cls, zone);
  if (row == nullptr) throw NoCorrectionKnown(cls, zone);
  return best_action(*row);
}

}  // namespace h2rat
