#include "h2rat/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "binio.hpp"
#include "h2rat/errors.hpp"

namespace h2rat {

PrPoint precision_recall_at(const std::vector<Prediction>& predictions, std::size_t classes,
                            double threshold) {
  PrPoint point;
  point.threshold = threshold;
  point.per_class.resize(classes);
  for (const auto& p : predictions) {
    if (p.label >= classes || p.predicted >= classes) {
      throw InvalidArgument("prediction class outside [0, " + std::to_string(classes) + ")");
    }
    const bool accepted = p.confidence >= threshold;
    if (accepted) ++point.accepted;
    if (accepted && p.predicted == p.label) {
      ++point.per_class[p.label].true_positives;
    } else {
      ++point.per_class[p.label].false_negatives;
      if (accepted) ++point.per_class[p.predicted].false_positives;
    }
  }
  for (auto& c : point.per_class) {
    const std::size_t claimed = c.true_positives + c.false_positives;
    const std::size_t actual = c.true_positives + c.false_negatives;
    c.precision_undefined = claimed == 0;
    c.recall_undefined = actual == 0;
    c.precision = claimed == 0 ? 0.0 : static_cast<double>(c.true_positives) / static_cast<double>(claimed);
    c.recall = actual == 0 ? 0.0 : static_cast<double>(c.true_positives) / static_cast<double>(actual);
    point.macro_precision += c.precision;
    point.macro_recall += c.recall;
  }
  if (classes > 0) {
    point.macro_precision /= static_cast<double>(classes);
    point.macro_recall /= static_cast<double>(classes);
  }
  return point;
}

std::vector<PrPoint> precision_recall_curve(const std::vector<Prediction>& predictions,
                                            std::size_t classes,
                                            const std::vector<double>& thresholds) {
  std::vector<PrPoint> curve;
  curve.reserve(thresholds.size());
  for (double t : thresholds) curve.push_back(precision_recall_at(predictions, classes, t));
  return curve;
}

std::vector<double> default_thresholds() {
  std::vector<double> out;
  for (int i = 0; i <= 20; ++i) out.push_back(static_cast<double>(i) / 20.0);
  return out;
}

AttentionAgreement attention_agreement(const std::vector<Tensor>& attention,
                                       const std::vector<const Scenario*>& scenarios) {
  if (attention.size() != scenarios.size() || attention.empty()) {
    throw InvalidArgument("attention agreement needs one distribution per scenario");
  }
  AttentionAgreement a;
  for (std::size_t i = 0; i < attention.size(); ++i) {
    const Tensor& p = attention[i];
    const Scenario& s = *scenarios[i];
    const auto& culprits = s.spec.culprit_regions;
    if (std::find(culprits.begin(), culprits.end(), argmax(p)) != culprits.end()) a.argmax_hit_rate += 1.0;
    double mass = 0.0;
    for (std::size_t r : culprits) mass += p[r];
    a.mean_culprit_mass += mass;
    double tv = 0.0;
    for (std::size_t r = 0; r < p.size(); ++r) tv += std::abs(p[r] - s.baseline_attention[r]);
    a.mean_tv_distance += 0.5 * tv;
  }
  const auto n = static_cast<double>(attention.size());
  a.argmax_hit_rate /= n;
  a.mean_culprit_mass /= n;
  a.mean_tv_distance /= n;
  return a;
}

EvalReport evaluate(const Checkpoint& ckpt, const std::vector<Scenario>& test,
                    std::vector<double> thresholds, const EvalOptions& options) {
  if (test.empty()) throw InvalidArgument("evaluation needs a non-empty test set");
  if (thresholds.empty()) thresholds = default_thresholds();
  thresholds.push_back(options.reference_threshold);
  for (double t : thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("thresholds must lie in [0, 1]");
  }
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const GridGeometry& geometry = ckpt.model.dims.grid;
  EvalReport report;
  report.edge_filter = options.edge_filter;
  std::vector<Prediction> predictions;
  std::vector<Tensor> attention;
  std::vector<const Scenario*> scenarios;
  std::size_t correct = 0, corrected = 0;

  for (const auto& s : test) {
    if (!(s.grid.geometry == geometry) || s.grid.feature_dim() != ckpt.model.dims.feature) {
      throw DimensionError("test scenario geometry or feature size does not match the checkpoint");
    }
    SampleResult r;
    r.label = s.spec.label();
    r.outcome = infer(ckpt.model, tokenize(s.reminder_text, ckpt.vocabulary), s.grid.features);
    r.attention = options.edge_filter ? apply_edge_filter(r.outcome.p2, geometry, options.filter)
                                      : r.outcome.p2;
    const auto& culprits = s.spec.culprit_regions;
    r.attention_hit = std::find(culprits.begin(), culprits.end(), argmax(r.attention)) != culprits.end();

    AttentionOutcome routed = r.outcome;
    routed.p2 = r.attention;
    try {
      r.recommended_action = recommend_correction(routed, geometry, ckpt.corrections);
    } catch (const NoCorrectionKnown&) {
      ++report.summary.unknown_corrections;
    }
    if (r.recommended_action == s.spec.correction_action) ++corrected;
    if (r.outcome.predicted_class == r.label) ++correct;

    predictions.push_back({r.label, r.outcome.predicted_class, r.outcome.confidence});
    attention.push_back(r.attention);
    scenarios.push_back(&s);
    report.samples.push_back(std::move(r));
  }

  report.curve = precision_recall_curve(predictions, ckpt.model.dims.classes, thresholds);
  report.agreement = attention_agreement(attention, scenarios);

  auto& sum = report.summary;
  const auto n = static_cast<double>(test.size());
  sum.samples = test.size();
  sum.reference_threshold = options.reference_threshold;
  const PrPoint ref = precision_recall_at(predictions, ckpt.model.dims.classes, options.reference_threshold);
  sum.macro_precision = ref.macro_precision;
  sum.macro_recall = ref.macro_recall;
  sum.precision_recall_mean = 0.5 * (ref.macro_precision + ref.macro_recall);
  sum.classification_accuracy = static_cast<double>(correct) / n;
  sum.correction_accuracy = static_cast<double>(corrected) / n;
  return report;
}

std::vector<std::uint8_t> heatmap_pgm(const Tensor& attention, const GridGeometry& geometry,
                                      std::size_t block) {
  if (attention.cols() != 1 || attention.rows() != geometry.regions()) {
    throw DimensionError("heatmap: attention " + attention.shape().str() + " does not match grid");
  }
  if (block == 0) throw InvalidArgument("heatmap block size must be positive");
  double total = 0.0, peak = 0.0;
  for (double a : attention.values()) {
    if (!std::isfinite(a) || a < 0.0) throw InvalidArgument("heatmap: attention is not a distribution");
    total += a;
    peak = std::max(peak, a);
  }
  if (std::abs(total - 1.0) > 1e-6 || peak <= 0.0) {
    throw InvalidArgument("heatmap: attention is not a distribution (sums to " + std::to_string(total) + ")");
  }
  const std::size_t width = geometry.cols * block;
  const std::size_t height = geometry.rows * block;
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + width * height);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double a = attention[geometry.index(y / block, x / block)];
      out.push_back(static_cast<std::uint8_t>(std::lround(255.0 * a / peak)));
    }
  }
  return out;
}

void render_heatmap(const Tensor& attention, const GridGeometry& geometry,
                    const std::filesystem::path& path, std::size_t block) {
  binio::write_file(path, heatmap_pgm(attention, geometry, block));
}

namespace {

const char* kClassLabels[] = {"wrong_action", "wrong_pose", "wrong_region", "wrong_spatial_relation"};

std::string class_label(std::size_t c) {
  return c < std::size(kClassLabels) ? kClassLabels[c] : "class" + std::to_string(c);
}

const PrPoint& point_at(const EvalReport& report, double threshold) {
  for (const auto& p : report.curve) {
    if (p.threshold == threshold) return p;
  }
  throw InvalidArgument("threshold not on the evaluated curve");
}

}  // namespace

void write_report(std::ostream& os, const EvalReport& report) {
  const auto& s = report.summary;
  const PrPoint& ref = point_at(report, s.reference_threshold);
  os << std::defaultfloat << std::setprecision(6);
  os << "threshold " << s.reference_threshold << "  edge_filter "
     << (report.edge_filter ? "on" : "off") << "  samples " << s.samples << "\n";
  os << std::fixed << std::setprecision(4);
  os << std::left << std::setw(24) << "class" << std::right << std::setw(10) << "precision"
     << std::setw(10) << "recall" << std::setw(6) << "tp" << std::setw(6) << "fp" << std::setw(6)
     << "fn" << "\n";
  for (std::size_t c = 0; c < ref.per_class.size(); ++c) {
    const auto& pc = ref.per_class[c];
    os << std::left << std::setw(24) << class_label(c) << std::right << std::setw(10) << pc.precision
       << std::setw(10) << pc.recall << std::setw(6) << pc.true_positives << std::setw(6)
       << pc.false_positives << std::setw(6) << pc.false_negatives
       << (pc.precision_undefined ? "  (precision undefined, reported as 0)" : "") << "\n";
  }
  os << std::left << std::setw(24) << "macro" << std::right << std::setw(10) << ref.macro_precision
     << std::setw(10) << ref.macro_recall << "\n";
  os << "precision/recall mean      " << s.precision_recall_mean << "\n";
  os << "classification accuracy    " << s.classification_accuracy << "\n";
  os << "attention argmax hit rate  " << report.agreement.argmax_hit_rate << "\n";
  os << "culprit mass captured      " << report.agreement.mean_culprit_mass << "\n";
  os << "tv distance to baseline    " << report.agreement.mean_tv_distance << "\n";
  os << "correction accuracy        " << s.correction_accuracy << "  (unknown "
     << s.unknown_corrections << ")\n";
}

void write_metrics(std::ostream& os, const EvalReport& report) {
  const auto& s = report.summary;
  os << std::setprecision(17);
  os << "samples=" << s.samples << "\n";
  os << "threshold=" << s.reference_threshold << "\n";
  os << "edge_filter=" << (report.edge_filter ? "on" : "off") << "\n";
  os << "macro_precision=" << s.macro_precision << "\n";
  os << "macro_recall=" << s.macro_recall << "\n";
  os << "precision_recall_mean=" << s.precision_recall_mean << "\n";
  os << "classification_accuracy=" << s.classification_accuracy << "\n";
  os << "attention_argmax_hit_rate=" << report.agreement.argmax_hit_rate << "\n";
  os << "attention_culprit_mass=" << report.agreement.mean_culprit_mass << "\n";
  os << "attention_tv_distance=" << report.agreement.mean_tv_distance << "\n";
  os << "correction_accuracy=" << s.correction_accuracy << "\n";
  os << "unknown_corrections=" << s.unknown_corrections << "\n";
  const PrPoint& ref = point_at(report, s.reference_threshold);
  for (std::size_t c = 0; c < ref.per_class.size(); ++c) {
    os << "precision." << class_label(c) << "=" << ref.per_class[c].precision << "\n";
    os << "recall." << class_label(c) << "=" << ref.per_class[c].recall << "\n";
    if (ref.per_class[c].precision_undefined) os << "precision_undefined." << class_label(c) << "=1\n";
  }
}

void write_pr_rows(std::ostream& os, const EvalReport& report) {
  os << std::setprecision(17);
  os << "threshold,class,precision,recall\n";
  for (const auto& p : report.curve) {
    for (std::size_t c = 0; c < p.per_class.size(); ++c) {
      os << p.threshold << "," << class_label(c) << "," << p.per_class[c].precision << ","
         << p.per_class[c].recall << "\n";
    }
    os << p.threshold << ",macro," << p.macro_precision << "," << p.macro_recall << "\n";
  }
}

namespace {

void write_vector(std::ostream& os, const char* key, const Tensor& t) {
  os << key;
  for (double x : t.values()) os << " " << x;
  os << "\n";
}

}  // namespace

void write_outcome_dump(const OutcomeDump& dump, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << std::setprecision(17);
  os << "h2rat-outcome 1\n";
  os << "rows " << dump.geometry.rows << "\n";
  os << "cols " << dump.geometry.cols << "\n";
  os << "label " << dump.label << "\n";
  os << "predicted " << dump.predicted << "\n";
  os << "confidence " << dump.confidence << "\n";
  write_vector(os, "p1", dump.p1);
  write_vector(os, "p2", dump.p2);
  write_vector(os, "baseline", dump.baseline);
  if (!os) throw IoError("error writing '" + path.string() + "'");
}

OutcomeDump read_outcome_dump(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
  const std::string what = "outcome dump '" + path.string() + "'";
  std::string line;
  if (!std::getline(is, line) || line != "h2rat-outcome 1") throw FormatError(what + ": bad header");
  OutcomeDump dump;
  bool have_rows = false, have_cols = false;
  auto read_vec = [&](std::istringstream& in, Tensor& out) {
    if (!have_rows || !have_cols) throw FormatError(what + ": vectors before geometry");
    out = Tensor(dump.geometry.regions(), 1);
    for (double& x : out.values()) {
      if (!(in >> x)) throw FormatError(what + ": short attention vector");
    }
    double extra;
    if (in >> extra) throw FormatError(what + ": long attention vector");
  };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream in(line);
    std::string key;
    in >> key;
    if (key == "rows") {
      have_rows = static_cast<bool>(in >> dump.geometry.rows);
    } else if (key == "cols") {
      have_cols = static_cast<bool>(in >> dump.geometry.cols);
    } else if (key == "label") {
      in >> dump.label;
    } else if (key == "predicted") {
      in >> dump.predicted;
    } else if (key == "confidence") {
      in >> dump.confidence;
    } else if (key == "p1") {
      read_vec(in, dump.p1);
    } else if (key == "p2") {
      read_vec(in, dump.p2);
    } else if (key == "baseline") {
      read_vec(in, dump.baseline);
    } else {
      throw FormatError(what + ": unknown key '" + key + "'");
    }
    if (in.fail() && !in.eof()) throw FormatError(what + ": bad value for '" + key + "'");
  }
  if (dump.p1.empty() || dump.p2.empty() || dump.baseline.empty()) {
    throw FormatError(what + ": missing attention vectors");
  }
  return dump;
}

AblationReport ablate_layers(const Corpus& corpus, TrainConfig config, const EvalOptions& options) {
  AblationReport report;
  for (std::size_t layers : {std::size_t{1}, std::size_t{2}}) {
    config.layers = layers;
    const Checkpoint ckpt = train(corpus, config);
    const EvalReport eval = evaluate(ckpt, corpus.test, {}, options);
    AblationVariant& v = layers == 1 ? report.one_layer : report.two_layer;
    v.layers = layers;
    v.summary = eval.summary;
    v.agreement = eval.agreement;
    v.training = ckpt.summary;
  }
  return report;
}

void write_ablation(std::ostream& os, const AblationReport& report) {
  os << std::fixed << std::setprecision(4);
  os << std::left << std::setw(8) << "layers" << std::right << std::setw(12) << "accuracy"
     << std::setw(12) << "pr_mean" << std::setw(12) << "attn_hit" << std::setw(12) << "culprit_mass"
     << std::setw(12) << "best_epoch" << "\n";
  for (const AblationVariant* v : {&report.one_layer, &report.two_layer}) {
    os << std::left << std::setw(8) << v->layers << std::right << std::setw(12)
       << v->summary.classification_accuracy << std::setw(12) << v->summary.precision_recall_mean
       << std::setw(12) << v->agreement.argmax_hit_rate << std::setw(12)
       << v->agreement.mean_culprit_mass << std::setw(12) << v->training.best_epoch << "\n";
  }
  const bool holds = report.two_layer.agreement.argmax_hit_rate >= report.one_layer.agreement.argmax_hit_rate;
  os << "two-layer attention hit rate >= one-layer: " << (holds ? "yes" : "no") << "\n";
}

}  // namespace h2rat
