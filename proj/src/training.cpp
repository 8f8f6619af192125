#include "h2rat/training.hpp"

#include <algorithm>
#include <cmath>

#include "binio.hpp"
#include "h2rat/errors.hpp"
#include "h2rat/kernels.hpp"
#include "json_io.hpp"

namespace h2rat {

namespace {
constexpr double kProbabilityFloor = 1e-12;
}

void TrainConfig::validate() const {
  if (epochs == 0 || batch_size == 0 || eval_every == 0 || patience == 0 || hidden == 0 ||
      attention == 0) {
    throw InvalidArgument("training counts must be positive");
  }
  if (layers != 1 && layers != 2) throw InvalidArgument("layers must be 1 or 2");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("learning rate must be finite and nonnegative");
  }
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
    throw InvalidArgument("Adam hyperparameters out of range");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw InvalidArgument("validation fraction must be in [0, 1)");
  }
}

bool bit_equal(const Checkpoint& a, const Checkpoint& b) {
  if (!(a.model.dims == b.model.dims) || !(a.vocabulary == b.vocabulary) ||
      !(a.corrections == b.corrections) || !(a.config == b.config) || !(a.summary == b.summary)) {
    return false;
  }
  const auto pa = a.model.parameters();
  const auto pb = b.model.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i]->name != pb[i]->name || !(pa[i]->value == pb[i]->value)) return false;
  }
  return true;
}

Var loss_cross_entropy(Tape& tape, Var p_ans, std::size_t label) {
  if (label >= tape.value(p_ans).rows()) {
    throw InvalidArgument("label " + std::to_string(label) + " out of range for " +
                          std::to_string(tape.value(p_ans).rows()) + " classes");
  }
  return tape.neg_log_pick(p_ans, label, kProbabilityFloor);
}

double loss_cross_entropy(const Tensor& p_ans, std::size_t label) {
  Tape tape;
  return tape.value(loss_cross_entropy(tape, tape.constant(p_ans), label))[0];
}

std::vector<PreparedSample> prepare(const std::vector<Scenario>& scenarios, const Vocabulary& vocab) {
  std::vector<PreparedSample> out;
  out.reserve(scenarios.size());
  for (const auto& s : scenarios) {
    out.push_back(PreparedSample{tokenize(s.reminder_text, vocab), s.grid.features, s.spec.label()});
  }
  return out;
}

DatasetScore score(const Model& model, const std::vector<PreparedSample>& samples) {
  if (samples.empty()) return {};
  double loss = 0.0;
  std::size_t correct = 0;
  for (const auto& s : samples) {
    const auto outcome = infer(model, s.reminder, s.features);
    loss += loss_cross_entropy(outcome.p_ans, s.label);
    correct += outcome.predicted_class == s.label ? 1 : 0;
  }
  const auto n = static_cast<double>(samples.size());
  return {loss / n, static_cast<double>(correct) / n};
}

ModelDims dims_for(const Corpus& corpus, const TrainConfig& config) {
  ModelDims dims;
  dims.hidden = config.hidden;
  dims.attention = config.attention;
  dims.feature = corpus.definition.feature_dim;
  dims.grid = corpus.definition.geometry;
  dims.classes = kClassCount;
  dims.vocabulary = corpus.vocabulary.size();
  dims.layers = config.layers;
  return dims;
}

AdamOptimizer::AdamOptimizer(const Model& model, const TrainConfig& config)
    : lr_(config.learning_rate), beta1_(config.beta1), beta2_(config.beta2), eps_(config.epsilon) {
  for (const Parameter* p : model.parameters()) {
    first_.emplace_back(p->value.rows(), p->value.cols());
    second_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void AdamOptimizer::step(Model& model, const std::vector<Tensor>& grads) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(beta1_, t);
  const double c2 = 1.0 - std::pow(beta2_, t);
  const auto params = model.parameters();
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& value = params[i]->value;
    k.adam(value.data(), grads[i].data(), first_[i].data(), second_[i].data(), value.size(), lr_,
           beta1_, beta2_, eps_, c1, c2);
    require_finite(value, "optimizer step");
  }
}

double batch_gradients(const Model& model, const std::vector<const PreparedSample*>& batch,
                       std::vector<Tensor>& grads) {
  const auto params = model.parameters();
  grads.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    grads[i] = Tensor(params[i]->value.rows(), params[i]->value.cols());
  }
  const auto& k = kernels::active();
  double total = 0.0;
  for (const PreparedSample* s : batch) {
    Tape tape;
    const auto vars = run_model(tape, model, s->reminder, s->features);
    Var loss = loss_cross_entropy(tape, vars.outcome.p_ans, s->label);
    total += tape.value(loss)[0];
    tape.backward(loss);
    // Parameters that never reached the tape (the unused second layer of a
    // one-layer model) contribute nothing.
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& bound = tape.parameters();
      if (std::find(bound.begin(), bound.end(), params[i]) == bound.end()) continue;
      const Tensor& g = tape.grad(*params[i]);
      k.accumulate(g.data(), grads[i].data(), g.size());
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& g : grads) {
    for (double& x : g.values()) x *= inv;
  }
  return total;
}

Checkpoint train(const Corpus& corpus, const TrainConfig& config, const EpochLogger& log) {
  config.validate();
  if (corpus.train.empty()) throw InvalidArgument("training split is empty");

  const ModelDims dims = dims_for(corpus, config);
  RngStream root(config.seed);
  RngStream init_rng = root.fork();
  RngStream split_rng = root.fork();
  RngStream shuffle_rng = root.fork();

  Model model = init_model(dims, init_rng);
  const auto all = prepare(corpus.train, corpus.vocabulary);

  std::vector<std::size_t> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  split_rng.shuffle(std::span<std::size_t>(order));
  const auto held_out = static_cast<std::size_t>(
      std::llround(config.validation_fraction * static_cast<double>(all.size())));
  const std::size_t val_count = std::min(held_out, all.size() - 1);
  std::vector<PreparedSample> fit, validation;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < val_count ? validation : fit).push_back(all[order[i]]);
  }
  if (validation.empty()) validation = fit;

  AdamOptimizer optimizer(model, config);
  Checkpoint best{model, corpus.vocabulary, corpus.definition.corrections, config, {}};
  best.summary.corpus_seed = corpus.seed;
  bool have_best = false;
  std::size_t stale = 0;

  std::vector<std::size_t> fit_order(fit.size());
  for (std::size_t i = 0; i < fit.size(); ++i) fit_order[i] = i;
  std::vector<Tensor> grads;
  TrainingSummary summary;
  summary.corpus_seed = corpus.seed;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(fit_order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0, batch_no = 0; start < fit.size(); start += config.batch_size, ++batch_no) {
      std::vector<const PreparedSample*> batch;
      for (std::size_t i = start; i < std::min(fit.size(), start + config.batch_size); ++i) {
        batch.push_back(&fit[fit_order[i]]);
      }
      try {
        epoch_loss += batch_gradients(model, batch, grads);
        optimizer.step(model, grads);
      } catch (const NumericError& e) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batch_no) + ": " + e.what());
      }
    }
    summary.epochs_run = epoch;
    summary.final_train_loss = epoch_loss / static_cast<double>(fit.size());

    if (epoch % config.eval_every != 0 && epoch != config.epochs) continue;
    Model snapshot = model;
    round_to_float32(snapshot);
    const auto val = score(snapshot, validation);
    const EpochRecord record{epoch, summary.final_train_loss, val.accuracy, val.mean_loss};
    summary.history.push_back(record);
    if (log) log(record);

    const bool better = !have_best || val.accuracy > summary.best_validation_accuracy ||
                        (val.accuracy == summary.best_validation_accuracy &&
                         val.mean_loss < summary.best_validation_loss);
    if (better) {
      have_best = true;
      best.model = std::move(snapshot);
      summary.best_epoch = epoch;
      summary.best_validation_accuracy = val.accuracy;
      summary.best_validation_loss = val.mean_loss;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  best.summary = std::move(summary);
  return best;
}

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;
const std::string kCheckpointWhat = "checkpoint file";

using json_io::json;

json config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},         {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate}, {"beta1", c.beta1},
          {"beta2", c.beta2},           {"epsilon", c.epsilon},
          {"seed", c.seed},             {"eval_every", c.eval_every},
          {"patience", c.patience},     {"validation_fraction", c.validation_fraction},
          {"hidden", c.hidden},         {"attention", c.attention},
          {"layers", c.layers}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.eval_every = j.at("eval_every").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.validation_fraction = j.at("validation_fraction").get<double>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.attention = j.at("attention").get<std::size_t>();
  c.layers = j.at("layers").get<std::size_t>();
  return c;
}

json summary_to_json(const TrainingSummary& s) {
  json history = json::array();
  for (const auto& r : s.history) {
    history.push_back({{"epoch", r.epoch},
                       {"train_loss", r.train_loss},
                       {"val_acc", r.validation_accuracy},
                       {"val_loss", r.validation_loss}});
  }
  return {{"corpus_seed", s.corpus_seed},
          {"epochs_run", s.epochs_run},
          {"best_epoch", s.best_epoch},
          {"final_train_loss", s.final_train_loss},
          {"best_val_acc", s.best_validation_accuracy},
          {"best_val_loss", s.best_validation_loss},
          {"history", history}};
}

TrainingSummary summary_from_json(const json& j) {
  TrainingSummary s;
  s.corpus_seed = j.at("corpus_seed").get<std::uint64_t>();
  s.epochs_run = j.at("epochs_run").get<std::size_t>();
  s.best_epoch = j.at("best_epoch").get<std::size_t>();
  s.final_train_loss = j.at("final_train_loss").get<double>();
  s.best_validation_accuracy = j.at("best_val_acc").get<double>();
  s.best_validation_loss = j.at("best_val_loss").get<double>();
  for (const auto& r : j.at("history")) {
    s.history.push_back({r.at("epoch").get<std::size_t>(), r.at("train_loss").get<double>(),
                         r.at("val_acc").get<double>(), r.at("val_loss").get<double>()});
  }
  return s;
}

json dims_to_json(const ModelDims& d) {
  return {{"m", d.hidden},           {"k", d.attention}, {"f", d.feature},
          {"rows", d.grid.rows},     {"cols", d.grid.cols}, {"d", d.grid.regions()},
          {"classes", d.classes},    {"vocabulary", d.vocabulary}, {"layers", d.layers}};
}

ModelDims dims_from_json(const json& j) {
  ModelDims d;
  d.hidden = j.at("m").get<std::size_t>();
  d.attention = j.at("k").get<std::size_t>();
  d.feature = j.at("f").get<std::size_t>();
  d.grid.rows = j.at("rows").get<std::size_t>();
  d.grid.cols = j.at("cols").get<std::size_t>();
  d.classes = j.at("classes").get<std::size_t>();
  d.vocabulary = j.at("vocabulary").get<std::size_t>();
  d.layers = j.at("layers").get<std::size_t>();
  if (j.at("d").get<std::size_t>() != d.grid.regions()) throw ShapeError("d does not equal rows*cols");
  // Guards allocations against a corrupted manifest before the CRC is checked.
  constexpr std::size_t kMaxDim = std::size_t{1} << 16;
  for (std::size_t v : {d.hidden, d.attention, d.feature, d.grid.rows, d.grid.cols, d.classes}) {
    if (v == 0 || v > kMaxDim) throw FormatError(kCheckpointWhat + ": implausible model dimensions");
  }
  if (d.vocabulary == 0 || d.vocabulary > (std::size_t{1} << 22) ||
      d.hidden * (d.hidden + d.vocabulary + d.feature) > (std::size_t{1} << 28)) {
    throw FormatError(kCheckpointWhat + ": implausible model dimensions");
  }
  return d;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  json tensors = json::array();
  for (const Parameter* p : ckpt.model.parameters()) {
    tensors.push_back({{"name", p->name}, {"shape", {p->value.rows(), p->value.cols()}}});
  }
  const json manifest = {
      {"format", "h2rat-checkpoint"},
      {"dims", dims_to_json(ckpt.model.dims)},
      {"tensors", tensors},
      {"vocabulary", json_io::to_json(ckpt.vocabulary)},
      {"corrections", json_io::to_json(ckpt.corrections)},
      {"config", config_to_json(ckpt.config)},
      {"summary", summary_to_json(ckpt.summary)},
  };
  binio::Writer out;
  out.magic("H2RW");
  out.u32(kCheckpointVersion);
  const std::size_t body = out.size();
  out.string(manifest.dump());
  for (const Parameter* p : ckpt.model.parameters()) {
    for (double x : p->value.values()) out.f32(x);
  }
  out.crc_trailer(body);
  binio::write_file(path, out.bytes());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = binio::read_file(path);
  const auto container = binio::open_container(bytes, "H2RW", kCheckpointVersion, kCheckpointWhat);
  return binio::parse_checked(bytes, container, kCheckpointWhat, [&] {
    binio::Reader in(bytes, kCheckpointWhat, container.body_begin, container.body_end);
    const json manifest = json_io::parse_document(in.string(), kCheckpointWhat);
    Checkpoint ckpt;
    std::vector<std::pair<std::string, Shape>> layout;
    json_io::guarded(kCheckpointWhat, [&] {
      ckpt.model = Model::zeros(dims_from_json(manifest.at("dims")));
      ckpt.vocabulary = json_io::vocabulary_from_json(manifest.at("vocabulary"));
      ckpt.corrections = json_io::correction_table_from_json(manifest.at("corrections"));
      ckpt.config = config_from_json(manifest.at("config"));
      ckpt.summary = summary_from_json(manifest.at("summary"));
      for (const auto& t : manifest.at("tensors")) {
        const auto shape = t.at("shape").get<std::vector<std::size_t>>();
        if (shape.size() != 2) throw FormatError(kCheckpointWhat + ": tensor shape must be rank 2");
        layout.emplace_back(t.at("name").get<std::string>(), Shape{shape[0], shape[1]});
      }
      return 0;
    });
    const auto params = ckpt.model.parameters();
    if (layout.size() != params.size()) {
      throw ShapeError(kCheckpointWhat + ": expected " + std::to_string(params.size()) +
                       " tensors, manifest lists " + std::to_string(layout.size()));
    }
    // Read with the manifest shapes so a short file is reported as truncated
    // before any shape disagreement.
    std::vector<Tensor> data;
    for (const auto& [name, shape] : layout) {
      Tensor t(shape.rows, shape.cols);
      for (double& x : t.values()) x = in.f32();
      data.push_back(std::move(t));
    }
    if (!in.at_end()) throw FormatError(kCheckpointWhat + ": trailing bytes after tensors");
    binio::verify_crc(bytes, container, kCheckpointWhat);
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (layout[i].first != params[i]->name) {
        throw ShapeError(kCheckpointWhat + ": tensor " + std::to_string(i) + " is '" +
                         layout[i].first + "', expected '" + params[i]->name + "'");
      }
      if (data[i].shape() != params[i]->value.shape()) {
        throw ShapeError(kCheckpointWhat + ": tensor '" + params[i]->name + "' has shape " +
                         data[i].shape().str() + ", dimensions require " +
                         params[i]->value.shape().str());
      }
      if (!data[i].all_finite()) throw FormatError(kCheckpointWhat + ": non-finite tensor data");
      params[i]->value = std::move(data[i]);
    }
    if (ckpt.vocabulary.size() != ckpt.model.dims.vocabulary) {
      throw ShapeError(kCheckpointWhat + ": vocabulary has " + std::to_string(ckpt.vocabulary.size()) +
                       " tokens, dimensions declare " + std::to_string(ckpt.model.dims.vocabulary));
    }
    ckpt.model.attention.layers = ckpt.model.dims.layers;
    return ckpt;
  });
}

}  // namespace h2rat
