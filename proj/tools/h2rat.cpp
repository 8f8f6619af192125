// h2rat: generate scenario corpora, train, evaluate and run the stacked
// attention model from the command line.
//
// Exit codes: 0 success, 1 I/O or other failure, 2 usage, 3 format/parse,
// 4 numeric failure.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "h2rat/config.hpp"
#include "h2rat/errors.hpp"
#include "h2rat/eval.hpp"
#include "h2rat/kernels.hpp"
#include "h2rat/scenarios.hpp"
#include "h2rat/training.hpp"

namespace fs = std::filesystem;
using namespace h2rat;

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kFormat = 3, kNumeric = 4 };

class UsageError : public Error {
 public:
  using Error::Error;
};

using Defaults = std::map<std::string, std::string>;

// Settings per subcommand. Flags of the same name override config values.
const std::map<std::string, Defaults> kDefaults{
    {"gen",
     {{"n", "2000"}, {"sigma", "0.3"}, {"ambiguous_fraction", "0.3"}, {"generic_fraction", "0"},
      {"split_ratio", "0.5"}, {"rows", "4"}, {"cols", "4"}, {"signature_seed", "1211257409"}}},
    {"train",
     {{"epochs", "40"}, {"batch_size", "16"}, {"learning_rate", "0.001"}, {"beta1", "0.9"},
      {"beta2", "0.999"}, {"epsilon", "1e-08"}, {"eval_every", "1"}, {"patience", "10"},
      {"validation_fraction", "0.1"}, {"hidden", "32"}, {"attention", "24"}, {"layers", "2"}}},
    {"eval",
     {{"threshold", "0.5"}, {"edge_filter", "on"}, {"border_width", "1"}, {"heatmaps", "4"},
      {"split", "test"}}},
    {"infer", {{"edge_filter", "on"}, {"border_width", "1"}}},
    {"viz", {{"block", "32"}}},
    {"ablate", {{"edge_filter", "on"}, {"border_width", "1"}}},
};

struct Settings {
  std::string command;
  RunConfig effective;

  std::string section() const { return command == "ablate" ? "train" : command; }
};

// Layers defaults, then the config file, then explicit flags; echoes the
// result to stderr.
Settings resolve(const std::string& command, const std::string& config_path,
                 const std::map<std::string, std::string>& flags, std::uint64_t seed) {
  RunConfig merged;
  std::vector<std::string> sections{command};
  if (command == "ablate") sections.push_back("train");
  for (const auto& s : sections) {
    for (const auto& [k, v] : kDefaults.at(s)) merged.set(s, k, v);
  }
  merged.set("", "seed", std::to_string(seed));
  if (!config_path.empty()) {
    const RunConfig file = RunConfig::load(config_path);
    std::map<std::string, std::set<std::string>> allowed{{"", {"seed"}}};
    for (const auto& [s, defaults] : kDefaults) {
      for (const auto& [k, v] : defaults) allowed[s].insert(k);
    }
    try {
      file.require_known(allowed);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    merged.merge(file);
  }
  for (const auto& [key, value] : flags) {
    bool placed = false;
    for (const auto& s : sections) {
      if (kDefaults.at(s).count(key)) {
        merged.set(s, key, value);
        placed = true;
      }
    }
    if (key == "seed") {
      merged.set("", "seed", value);
      placed = true;
    }
    if (!placed) throw UsageError("flag --" + key + " does not apply to '" + command + "'");
  }
  for (const auto& s : sections) {
    for (const auto& [k, v] : merged.sections().at(s)) std::cerr << "setting " << s << "." << k << " = " << v << "\n";
  }
  std::cerr << "setting seed = " << *merged.get("", "seed") << "\n";
  std::cerr << "setting kernels = " << kernels::active().name << "\n";
  return Settings{command, merged};
}

TrainConfig train_config(const RunConfig& c, std::uint64_t seed) {
  TrainConfig t;
  t.epochs = c.get_count("train", "epochs");
  t.batch_size = c.get_count("train", "batch_size");
  t.learning_rate = c.get_double("train", "learning_rate");
  t.beta1 = c.get_double("train", "beta1");
  t.beta2 = c.get_double("train", "beta2");
  t.epsilon = c.get_double("train", "epsilon");
  t.eval_every = c.get_count("train", "eval_every");
  t.patience = c.get_count("train", "patience");
  t.validation_fraction = c.get_double("train", "validation_fraction");
  t.hidden = c.get_count("train", "hidden");
  t.attention = c.get_count("train", "attention");
  t.layers = c.get_count("train", "layers");
  t.seed = seed;
  try {
    t.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return t;
}

EvalOptions eval_options(const RunConfig& c, const std::string& section) {
  EvalOptions o;
  o.edge_filter = c.get_flag(section, "edge_filter");
  o.filter.border_width = c.get_count(section, "border_width");
  if (c.has(section, "threshold")) o.reference_threshold = c.get_double(section, "threshold");
  return o;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  return os;
}

int cmd_gen(const Settings& s, const fs::path& out) {
  const auto& c = s.effective;
  const std::size_t n = c.get_count("gen", "n");
  if (n < 2) throw UsageError("--n must be at least 2");
  CorpusDefinition def = default_corpus_definition(c.get_u64("gen", "signature_seed"));
  def.geometry.rows = c.get_count("gen", "rows");
  def.geometry.cols = c.get_count("gen", "cols");
  def.sigma = c.get_double("gen", "sigma");
  def.ambiguous_fraction = c.get_double("gen", "ambiguous_fraction");
  def.generic_fraction = c.get_double("gen", "generic_fraction");
  def.split_ratio = c.get_double("gen", "split_ratio");
  const std::uint64_t seed = c.get_u64("", "seed");
  Corpus corpus;
  try {
    corpus = generate_corpus(def, n, seed);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  save_corpus(corpus, out);

  std::array<std::size_t, kClassCount> train_counts{}, test_counts{};
  for (const auto& sc : corpus.train) ++train_counts[sc.spec.label()];
  for (const auto& sc : corpus.test) ++test_counts[sc.spec.label()];
  std::cout << "corpus " << out.string() << "\n";
  std::cout << "seed " << seed << "  sigma " << def.sigma << "  samples " << n << "  train "
            << corpus.train.size() << "  test " << corpus.test.size() << "\n";
  for (std::size_t cls = 0; cls < kClassCount; ++cls) {
    std::cout << std::left << std::setw(24) << abnormality_name(static_cast<Abnormality>(cls))
              << " train " << train_counts[cls] << "  test " << test_counts[cls] << "\n";
  }
  return kOk;
}

int cmd_train(const Settings& s, const fs::path& corpus_path, const fs::path& out) {
  const Corpus corpus = load_corpus(corpus_path);
  const TrainConfig config = train_config(s.effective, s.effective.get_u64("", "seed"));
  std::cout << std::fixed << std::setprecision(6);
  const Checkpoint ckpt = train(corpus, config, [](const EpochRecord& r) {
    std::cout << "epoch " << r.epoch << ", train_loss " << r.train_loss << ", val_acc "
              << r.validation_accuracy << std::endl;
  });
  save_checkpoint(ckpt, out);
  std::cout << "best epoch " << ckpt.summary.best_epoch << ", val_acc "
            << ckpt.summary.best_validation_accuracy << "\n";
  std::cout << "checkpoint " << out.string() << "\n";
  return kOk;
}

int cmd_eval(const Settings& s, const fs::path& ckpt_path, const fs::path& corpus_path,
             const fs::path& out) {
  const auto& c = s.effective;
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const Corpus corpus = load_corpus(corpus_path);
  const std::string split = c.get_string("eval", "split");
  if (split != "test" && split != "train") throw UsageError("--split must be test or train");
  const auto& samples = split == "test" ? corpus.test : corpus.train;
  if (!(corpus.definition.geometry == ckpt.model.dims.grid) ||
      corpus.definition.feature_dim != ckpt.model.dims.feature) {
    throw ShapeError("corpus geometry/feature size does not match the checkpoint");
  }
  const EvalOptions options = eval_options(c, "eval");
  if (!(options.reference_threshold >= 0.0 && options.reference_threshold <= 1.0)) {
    throw UsageError("--threshold must lie in [0, 1]");
  }
  const EvalReport report = evaluate(ckpt, samples, default_thresholds(), options);

  ensure_dir(out);
  {
    auto os = open_out(out / "report.txt");
    write_report(os, report);
  }
  {
    auto os = open_out(out / "metrics.txt");
    write_metrics(os, report);
  }
  {
    auto os = open_out(out / "pr.csv");
    write_pr_rows(os, report);
  }
  const std::size_t heatmaps = std::min(c.get_count("eval", "heatmaps"), samples.size());
  if (heatmaps > 0) ensure_dir(out / "samples");
  const GridGeometry& g = ckpt.model.dims.grid;
  for (std::size_t i = 0; i < heatmaps; ++i) {
    std::ostringstream stem;
    stem << "sample_" << std::setw(4) << std::setfill('0') << i;
    const auto& r = report.samples[i];
    render_heatmap(r.attention, g, out / "samples" / (stem.str() + "_predicted.pgm"));
    render_heatmap(samples[i].baseline_attention, g, out / "samples" / (stem.str() + "_baseline.pgm"));
    write_outcome_dump(OutcomeDump{g, r.label, r.outcome.predicted_class, r.outcome.confidence,
                                   r.outcome.p1, r.attention, samples[i].baseline_attention},
                       out / "samples" / (stem.str() + ".outcome"));
    // Region features and reminder so the sample can be replayed with infer.
    save_feature_file(samples[i].grid, out / "samples" / (stem.str() + ".h2rf"));
    auto os = open_out(out / "samples" / (stem.str() + ".reminder.txt"));
    os << samples[i].reminder_text << "\n";
  }
  write_report(std::cout, report);
  return kOk;
}

int cmd_infer(const Settings& s, const fs::path& ckpt_path, const std::string& text,
              const fs::path& features_path, const fs::path& out) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const RegionGrid grid = load_feature_file(features_path);
  const auto& dims = ckpt.model.dims;
  if (!(grid.geometry == dims.grid) || grid.feature_dim() != dims.feature) {
    throw ShapeError("feature file is " + std::to_string(grid.geometry.rows) + "x" +
                     std::to_string(grid.geometry.cols) + " with f=" +
                     std::to_string(grid.feature_dim()) + ", checkpoint expects " +
                     std::to_string(dims.grid.rows) + "x" + std::to_string(dims.grid.cols) +
                     " with f=" + std::to_string(dims.feature));
  }
  Reminder reminder;
  try {
    reminder = tokenize(text, ckpt.vocabulary);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (reminder.unknown_count() == reminder.length()) {
    std::cerr << "warning: no reminder word is in the vocabulary; running on <unk> tokens\n";
  }
  const EvalOptions options = eval_options(s.effective, "infer");
  AttentionOutcome outcome = infer(ckpt.model, reminder, grid.features);
  if (options.edge_filter) outcome.p2 = apply_edge_filter(outcome.p2, dims.grid, options.filter);

  std::ostringstream doc;
  doc << std::fixed << std::setprecision(6);
  doc << "predicted_class: " << abnormality_name(static_cast<Abnormality>(outcome.predicted_class))
      << " (" << outcome.predicted_class << ")\n";
  doc << "confidence: " << outcome.confidence << "\n";
  doc << "edge_filter: " << (options.edge_filter ? "on" : "off") << "\n";
  std::vector<std::size_t> order(outcome.p2.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return outcome.p2[a] > outcome.p2[b]; });
  for (std::size_t i = 0; i < std::min<std::size_t>(3, order.size()); ++i) {
    doc << "attention_region: row " << order[i] / dims.grid.cols << ", col " << order[i] % dims.grid.cols
        << ", mass " << outcome.p2[order[i]] << "\n";
  }
  try {
    const int action = recommend_correction(outcome, dims.grid, ckpt.corrections);
    const auto& names = ckpt.corrections.action_names;
    doc << "recommended_action: "
        << (static_cast<std::size_t>(action) < names.size() ? names[static_cast<std::size_t>(action)] : "action")
        << " (" << action << ")\n";
  } catch (const NoCorrectionKnown& e) {
    doc << "recommended_action: none (" << e.what() << ")\n";
  }
  std::cout << doc.str();
  if (!out.empty()) {
    auto os = open_out(out);
    os << doc.str();
  }
  return kOk;
}

int cmd_viz(const Settings& s, const fs::path& input, const fs::path& out) {
  const OutcomeDump dump = read_outcome_dump(input);
  const std::size_t block = s.effective.get_count("viz", "block");
  if (block == 0) throw UsageError("--block must be positive");
  ensure_dir(out);
  render_heatmap(dump.p1, dump.geometry, out / "p1.pgm", block);
  render_heatmap(dump.p2, dump.geometry, out / "p2.pgm", block);
  render_heatmap(dump.baseline, dump.geometry, out / "baseline.pgm", block);
  std::cout << "wrote " << (out / "p1.pgm").string() << ", " << (out / "p2.pgm").string() << ", "
            << (out / "baseline.pgm").string() << "\n";
  return kOk;
}

int cmd_ablate(const Settings& s, const fs::path& corpus_path, const fs::path& out) {
  const Corpus corpus = load_corpus(corpus_path);
  const TrainConfig config = train_config(s.effective, s.effective.get_u64("", "seed"));
  const AblationReport report = ablate_layers(corpus, config, eval_options(s.effective, "ablate"));
  std::ostringstream text;
  write_ablation(text, report);
  std::cout << text.str();
  if (!out.empty()) {
    auto os = open_out(out);
    os << text.str();
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stacked attention abnormality detection: gen | train | eval | infer | viz | ablate"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 7;
  std::string out;
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_options;

  auto common = [&](CLI::App* sub, bool out_required) {
    sub->add_option("--config", config_path, "Key/value configuration file")->check(CLI::ExistingFile);
    const std::string key = sub->get_name() + ".seed";
    flag_options[key] = sub->add_option("--seed", flag_values[key], "Seed for all randomness");
    auto* o = sub->add_option("--out", out, "Output path");
    if (out_required) o->required();
  };
  auto setting = [&](CLI::App* sub, const std::string& key, const std::string& help) {
    flag_options[sub->get_name() + "." + key] = sub->add_option("--" + key, flag_values[sub->get_name() + "." + key], help);
  };

  auto* gen = app.add_subcommand("gen", "Generate a synthetic scenario corpus");
  common(gen, true);
  for (const auto& [k, v] : kDefaults.at("gen")) setting(gen, k, "default " + v);

  std::string corpus_path, ckpt_path, features_path, reminder, input;
  auto* trn = app.add_subcommand("train", "Train a model on a corpus");
  common(trn, true);
  trn->add_option("--corpus", corpus_path, "Corpus file")->required();
  for (const auto& [k, v] : kDefaults.at("train")) setting(trn, k, "default " + v);

  auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus split");
  common(evl, true);
  evl->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
  evl->add_option("--corpus", corpus_path, "Corpus file")->required();
  for (const auto& [k, v] : kDefaults.at("eval")) setting(evl, k, "default " + v);

  auto* inf = app.add_subcommand("infer", "Classify one reminder against a feature file");
  common(inf, false);
  inf->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
  inf->add_option("--reminder", reminder, "Reminder text")->required();
  inf->add_option("--features", features_path, "H2RF feature file")->required();
  for (const auto& [k, v] : kDefaults.at("infer")) setting(inf, k, "default " + v);

  auto* viz = app.add_subcommand("viz", "Render heatmaps from an outcome dump");
  common(viz, true);
  viz->add_option("--input", input, "Outcome dump written by eval")->required();
  for (const auto& [k, v] : kDefaults.at("viz")) setting(viz, k, "default " + v);

  auto* abl = app.add_subcommand("ablate", "Compare one- and two-layer attention");
  common(abl, false);
  abl->add_option("--corpus", corpus_path, "Corpus file")->required();
  for (const auto& [k, v] : kDefaults.at("ablate")) setting(abl, k, "default " + v);
  for (const auto& [k, v] : kDefaults.at("train")) setting(abl, k, "default " + v);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    CLI::App* active = app.get_subcommands().front();
    const std::string command = active->get_name();
    std::map<std::string, std::string> flags;
    for (const auto& [key, opt] : flag_options) {
      if (opt->count() == 0) continue;
      const auto dot = key.find('.');
      if (key.substr(0, dot) == command) flags[key.substr(dot + 1)] = flag_values[key];
    }
    if (flags.count("seed")) {
      try {
        seed = std::stoull(flags["seed"]);
      } catch (const std::exception&) {
        throw UsageError("--seed must be an unsigned integer");
      }
    }
    const Settings settings = resolve(command, config_path, flags, seed);
    if (command == "gen") return cmd_gen(settings, out);
    if (command == "train") return cmd_train(settings, corpus_path, out);
    if (command == "eval") return cmd_eval(settings, ckpt_path, corpus_path, out);
    if (command == "infer") return cmd_infer(settings, ckpt_path, reminder, features_path, out);
    if (command == "viz") return cmd_viz(settings, input, out);
    if (command == "ablate") return cmd_ablate(settings, corpus_path, out);
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kFormat;
  } catch (const DimensionError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return kFormat;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
