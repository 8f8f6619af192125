#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "h2rat/errors.hpp"
#include "h2rat/eval.hpp"
#include "oracle.hpp"

using namespace h2rat;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "h2rat_test_eval";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<Prediction> random_predictions(std::size_t per_class, RngStream& rng) {
  std::vector<Prediction> out;
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < per_class; ++i) out.push_back({c, rng.below(4), 0.25 + 0.75 * rng.uniform()});
  return out;
}

const Corpus& corpus() {
  static const Corpus c = generate_corpus(default_corpus_definition(), 40, 31);
  return c;
}

const Checkpoint& checkpoint() {
  static const Checkpoint ckpt = [] {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.hidden = 8;
    cfg.attention = 6;
    return train(corpus(), cfg);
  }();
  return ckpt;
}

}  // namespace

TEST_CASE("perfect predictions give unit precision and recall everywhere") {
  std::vector<Prediction> preds;
  for (std::size_t i = 0; i < 40; ++i) preds.push_back({i % 4, i % 4, 1.0});
  for (const auto& p : precision_recall_curve(preds, 4, default_thresholds())) {
    CHECK(p.macro_precision == 1.0);
    CHECK(p.macro_recall == 1.0);
    for (const auto& c : p.per_class) CHECK((c.precision == 1.0 && c.recall == 1.0));
  }
}

TEST_CASE("hand-computed confusion at one threshold") {
  // label, predicted, confidence
  const std::vector<Prediction> preds{{0, 0, 0.9}, {0, 1, 0.8}, {1, 1, 0.4}, {1, 1, 0.7}, {2, 0, 0.95}};
  const PrPoint p = precision_recall_at(preds, 3, 0.5);
  CHECK(p.accepted == 4);
  CHECK(p.per_class[0].true_positives == 1);
  CHECK(p.per_class[0].false_positives == 1);
  CHECK(p.per_class[0].false_negatives == 1);
  CHECK(p.per_class[0].precision == 0.5);
  CHECK(p.per_class[0].recall == 0.5);
  CHECK(p.per_class[1].precision == 0.5);
  CHECK(p.per_class[1].recall == 0.5);
  CHECK(p.per_class[2].precision == 0.0);
  CHECK(p.per_class[2].precision_undefined);
  CHECK(p.per_class[2].recall == 0.0);
  CHECK_FALSE(p.per_class[2].recall_undefined);
  CHECK(p.macro_precision == doctest::Approx(1.0 / 3));
  CHECK(p.macro_recall == doctest::Approx(1.0 / 3));
}

TEST_CASE("threshold edge cases") {
  RngStream rng(1);
  const auto preds = random_predictions(25, rng);
  const PrPoint zero = precision_recall_at(preds, 4, 0.0);
  for (std::size_t c = 0; c < 4; ++c) {
    std::size_t hit = 0;
    for (const auto& p : preds) hit += p.label == c && p.predicted == c;
    CHECK(zero.per_class[c].recall == doctest::Approx(hit / 25.0));
  }
  const PrPoint above = precision_recall_at(preds, 4, 1.0 + 1e-9);
  CHECK(above.accepted == 0);
  for (const auto& c : above.per_class) {
    CHECK(c.precision == 0.0);
    CHECK(c.precision_undefined);
  }
}

TEST_CASE("curve monotonicity and macro means") {
  RngStream rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto preds = random_predictions(1 + rng.below(20), rng);
    const auto curve = precision_recall_curve(preds, 4, default_thresholds());
    for (std::size_t i = 1; i < curve.size(); ++i) {
      REQUIRE(curve[i].accepted <= curve[i - 1].accepted);
      for (std::size_t c = 0; c < 4; ++c) REQUIRE(curve[i].per_class[c].recall <= curve[i - 1].per_class[c].recall);
    }
    for (const auto& p : curve) {
      double mp = 0.0, mr = 0.0;
      for (const auto& c : p.per_class) {
        REQUIRE(c.precision >= 0.0);
        REQUIRE(c.precision <= 1.0);
        REQUIRE(c.recall >= 0.0);
        REQUIRE(c.recall <= 1.0);
        mp += c.precision;
        mr += c.recall;
      }
      REQUIRE(p.macro_precision == doctest::Approx(mp / 4).epsilon(1e-15));
      REQUIRE(p.macro_recall == doctest::Approx(mr / 4).epsilon(1e-15));
    }
  }
}

TEST_CASE("uniform random predictor recalls about a quarter") {
  RngStream rng(3);
  const std::size_t per_class = 500, n = 4 * per_class;
  const auto preds = random_predictions(per_class, rng);
  const PrPoint p = precision_recall_at(preds, 4, 0.0);
  // Macro recall of a balanced set is the overall hit rate, Binomial(n, 1/4).
  const double sigma = std::sqrt(0.25 * 0.75 / static_cast<double>(n));
  CHECK(std::fabs(p.macro_recall - 0.25) < 3 * sigma);
}

TEST_CASE("default thresholds step by 0.05 and include 0.5") {
  const auto t = default_thresholds();
  CHECK(t.size() == 21);
  CHECK(t.front() == 0.0);
  CHECK(t.back() == 1.0);
  CHECK(std::find(t.begin(), t.end(), 0.5) != t.end());
}

TEST_CASE("heatmap examples") {
  const GridGeometry g{2, 2};
  const auto one_hot = heatmap_pgm(Tensor::column({0, 0, 1, 0}), g, 2);
  const std::string header = "P5\n4 4\n255\n";
  REQUIRE(one_hot.size() == header.size() + 16);
  CHECK(std::string(one_hot.begin(), one_hot.begin() + static_cast<long>(header.size())) == header);
  const std::vector<std::uint8_t> pixels(one_hot.begin() + static_cast<long>(header.size()), one_hot.end());
  const std::vector<std::uint8_t> want{0, 0, 0, 0, 0, 0, 0, 0, 255, 255, 0, 0, 255, 255, 0, 0};
  CHECK(pixels == want);

  const auto uniform = heatmap_pgm(Tensor(4, 1, 0.25), g, 3);
  for (std::size_t i = std::string("P5\n6 6\n255\n").size(); i < uniform.size(); ++i) CHECK(uniform[i] == 255);

  const auto half = heatmap_pgm(Tensor::column({0.5, 0.25, 0.25, 0.0}), g, 1);
  CHECK(std::vector<std::uint8_t>(half.end() - 4, half.end()) == std::vector<std::uint8_t>{255, 128, 128, 0});

  CHECK_THROWS_AS(heatmap_pgm(Tensor(4, 1), g), InvalidArgument);
  CHECK_THROWS_AS(heatmap_pgm(Tensor::column({0.5, 0.5, 0.5, -0.5}), g), InvalidArgument);
  CHECK_THROWS_AS(heatmap_pgm(Tensor(3, 1, 1.0 / 3), g), DimensionError);
  CHECK(heatmap_pgm(Tensor::column({0.1, 0.2, 0.3, 0.4}), g) == heatmap_pgm(Tensor::column({0.1, 0.2, 0.3, 0.4}), g));
}

TEST_CASE("rendered heatmaps use 32 pixel blocks by default") {
  const auto path = temp_path("map.pgm");
  render_heatmap(Tensor(16, 1, 1.0 / 16), GridGeometry{4, 4}, path);
  CHECK(fs::file_size(path) == std::string("P5\n128 128\n255\n").size() + 128 * 128);
}

TEST_CASE("outcome dumps round trip") {
  RngStream rng(4);
  OutcomeDump d;
  d.geometry = GridGeometry{3, 2};
  d.label = 2;
  d.predicted = 1;
  d.confidence = 0.73;
  d.p1 = softmax_vec(oracle::random_tensor(6, 1, rng));
  d.p2 = softmax_vec(oracle::random_tensor(6, 1, rng));
  d.baseline = Tensor(6, 1, 1.0 / 6);
  const auto path = temp_path("sample.outcome");
  write_outcome_dump(d, path);
  const OutcomeDump back = read_outcome_dump(path);
  CHECK(back.geometry == d.geometry);
  CHECK(back.label == 2);
  CHECK(back.predicted == 1);
  CHECK(back.confidence == d.confidence);
  CHECK(back.p1 == d.p1);
  CHECK(back.p2 == d.p2);
  CHECK(back.baseline == d.baseline);

  std::ofstream(temp_path("broken.outcome")) << "h2rat-outcome 1\nrows 2\ncols 2\np1 0.5 0.5\n";
  CHECK_THROWS_AS(read_outcome_dump(temp_path("broken.outcome")), FormatError);
  std::ofstream(temp_path("header.outcome")) << "something else\n";
  CHECK_THROWS_AS(read_outcome_dump(temp_path("header.outcome")), FormatError);
}

TEST_CASE("evaluate reports consistent metrics") {
  const auto& test = corpus().test;
  const EvalReport r = evaluate(checkpoint(), test, default_thresholds());
  CHECK(r.summary.samples == test.size());
  CHECK(r.curve.size() == 21);
  CHECK(r.samples.size() == test.size());
  CHECK(r.summary.precision_recall_mean ==
        doctest::Approx(0.5 * (r.summary.macro_precision + r.summary.macro_recall)));
  for (double v : {r.agreement.argmax_hit_rate, r.agreement.mean_culprit_mass, r.agreement.mean_tv_distance,
                   r.summary.classification_accuracy, r.summary.correction_accuracy}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  const auto& g = checkpoint().model.dims.grid;
  for (const auto& s : r.samples) {
    for (std::size_t i = 0; i < g.regions(); ++i)
      if (is_rim(g, i, 1)) REQUIRE(s.attention[i] == 0.0);
  }

  EvalOptions off;
  off.edge_filter = false;
  off.reference_threshold = 0.3;
  const EvalReport raw = evaluate(checkpoint(), test, {0.0, 1.0}, off);
  CHECK(raw.curve.size() == 3);
  CHECK(raw.summary.reference_threshold == 0.3);
  for (std::size_t i = 0; i < raw.samples.size(); ++i) CHECK(raw.samples[i].attention == raw.samples[i].outcome.p2);

  CHECK_THROWS_AS(evaluate(checkpoint(), {}, default_thresholds()), InvalidArgument);
  CHECK_THROWS_AS(evaluate(checkpoint(), test, {1.5}), InvalidArgument);
}

TEST_CASE("report, metrics and P-R rows") {
  const EvalReport r = evaluate(checkpoint(), corpus().test, default_thresholds());
  std::ostringstream report, metrics, rows;
  write_report(report, r);
  write_metrics(metrics, r);
  write_pr_rows(rows, r);
  CHECK(report.str().rfind("threshold 0.5 ", 0) == 0);
  CHECK(metrics.str().find("threshold=0.5\n") != std::string::npos);
  CHECK(metrics.str().find("classification_accuracy=") != std::string::npos);
  std::istringstream in(rows.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "threshold,class,precision,recall");
  std::size_t count = 0;
  while (std::getline(in, line)) ++count;
  CHECK(count == 21 * 5);
}

TEST_CASE("ablation is deterministic and reports both variants") {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.hidden = 6;
  cfg.attention = 4;
  const AblationReport a = ablate_layers(corpus(), cfg), b = ablate_layers(corpus(), cfg);
  std::ostringstream sa, sb;
  write_ablation(sa, a);
  write_ablation(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(a.one_layer.layers == 1);
  CHECK(a.two_layer.layers == 2);
  CHECK(sa.str().find("two-layer attention hit rate") != std::string::npos);
}
