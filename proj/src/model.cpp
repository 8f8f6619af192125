#include "h2rat/model.hpp"

#include <cmath>

#include "h2rat/errors.hpp"

namespace h2rat {

Model Model::zeros(const ModelDims& dims) {
  Model m{dims,
          Parameter{"embedding", Tensor(dims.hidden, dims.vocabulary)},
          LstmParams::zeros(dims.hidden),
          ProjectionParams::zeros(dims.hidden, dims.feature),
          H2ratParams::zeros(dims.hidden, dims.attention, dims.classes)};
  m.attention.layers = dims.layers;
  return m;
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out{&embedding};
  for (Parameter* p : lstm.parameters()) out.push_back(p);
  out.push_back(&projection.weight);
  out.push_back(&projection.bias);
  for (Parameter* p : attention.parameters()) out.push_back(p);
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  auto mut = const_cast<Model*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

void Model::validate() const {
  const Model reference = zeros(dims);
  const auto expected = reference.parameters();
  const auto actual = parameters();
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (actual[i]->value.shape() != expected[i]->value.shape()) {
      throw ShapeError("tensor '" + expected[i]->name + "' has shape " +
                       actual[i]->value.shape().str() + ", model dimensions require " +
                       expected[i]->value.shape().str());
    }
  }
  if (dims.layers != 1 && dims.layers != 2) throw ShapeError("model must have 1 or 2 layers");
}

namespace {

void glorot(Tensor& t, RngStream& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
  for (double& x : t.values()) x = rng.uniform(-limit, limit);
}

bool is_bias(const Parameter& p) { return p.value.cols() == 1 && p.name.ends_with("bias"); }

}  // namespace

Model init_model(const ModelDims& dims, RngStream& rng) {
  Model model = Model::zeros(dims);
  for (Parameter* p : model.parameters()) {
    if (is_bias(*p)) continue;
    glorot(p->value, rng);
  }
  model.lstm.forget_gate.bias.value.fill(1.0);
  return model;
}

void round_to_float32(Model& model) {
  for (Parameter* p : model.parameters()) {
    for (double& x : p->value.values()) x = static_cast<double>(static_cast<float>(x));
  }
}

ModelVars run_model(Tape& tape, const Model& model, const Reminder& reminder,
                    const Tensor& features) {
  if (features.rows() != model.dims.feature || features.cols() != model.dims.grid.regions()) {
    throw DimensionError("region features " + features.shape().str() + " do not match model (f=" +
                         std::to_string(model.dims.feature) +
                         ", d=" + std::to_string(model.dims.grid.regions()) + ")");
  }
  ModelVars out;
  const auto words = embed(tape, reminder, tape.param(model.embedding));
  out.reminder = encode_reminder(tape, words, model.lstm);
  out.regions = project_regions(tape, tape.constant(features), model.projection);
  out.outcome = forward(tape, out.regions, out.reminder, model.attention);
  return out;
}

AttentionOutcome infer(const Model& model, const Reminder& reminder, const Tensor& features) {
  Tape tape;
  const auto vars = run_model(tape, model, reminder, features);
  return read_outcome(tape, vars.outcome);
}

}  // namespace h2rat
