#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "h2rat/attention.hpp"
#include "h2rat/scenarios.hpp"
#include "h2rat/training.hpp"
#include "h2rat/vision.hpp"

namespace h2rat {

struct Prediction {
  std::size_t label = 0;
  std::size_t predicted = 0;
  double confidence = 0.0;
};

struct ClassPr {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  // Set when the denominator was zero and the metric was defined as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

struct PrPoint {
  double threshold = 0.0;
  std::vector<ClassPr> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  std::size_t accepted = 0;
};

/// A prediction is accepted when confidence >= threshold. Precision counts
/// accepted predictions only; recall counts every sample of the class, so a
/// rejected prediction is a false negative. Macro values are unweighted
/// means over classes.
PrPoint precision_recall_at(const std::vector<Prediction>& predictions, std::size_t classes,
                            double threshold);
std::vector<PrPoint> precision_recall_curve(const std::vector<Prediction>& predictions,
                                            std::size_t classes,
                                            const std::vector<double>& thresholds);

// 0, 0.05, ..., 1.
std::vector<double> default_thresholds();

struct AttentionAgreement {
  double argmax_hit_rate = 0.0;     // argmax of p2 lands on a culprit region
  double mean_culprit_mass = 0.0;   // sum of p2 over culprit regions
  double mean_tv_distance = 0.0;    // total variation distance to baseline
};

struct EvalOptions {
  bool edge_filter = true;
  EdgeFilterSpec filter;
  double reference_threshold = 0.5;
};

struct SampleResult {
  AttentionOutcome outcome;
  Tensor attention;  // p2 after the optional edge filter
  std::size_t label = 0;
  bool attention_hit = false;
  int recommended_action = -1;  // -1: no correction known
};

struct EvalSummary {
  std::size_t samples = 0;
  double reference_threshold = 0.5;
  double macro_precision = 0.0;  // at reference_threshold
  double macro_recall = 0.0;
  // Mean of macro precision and macro recall at the reference threshold.
  double precision_recall_mean = 0.0;
  // Plain argmax accuracy over all samples.
  double classification_accuracy = 0.0;
  // Recommended action equals the scenario's correction action.
  double correction_accuracy = 0.0;
  std::size_t unknown_corrections = 0;
};

struct EvalReport {
  std::vector<PrPoint> curve;
  AttentionAgreement agreement;
  EvalSummary summary;
  std::vector<SampleResult> samples;
  bool edge_filter = true;
};

// Throws InvalidArgument on an empty test set or thresholds outside [0, 1].
EvalReport evaluate(const Checkpoint& ckpt, const std::vector<Scenario>& test,
                    std::vector<double> thresholds, const EvalOptions& options = {});

AttentionAgreement attention_agreement(const std::vector<Tensor>& attention,
                                       const std::vector<const Scenario*>& scenarios);

// Binary PGM (P5, maxval 255) with one block x block cell per region and
// intensity round(255 * a / max(a)). Rejects anything that is not a
// probability vector over the grid.
std::vector<std::uint8_t> heatmap_pgm(const Tensor& attention, const GridGeometry& geometry,
                                      std::size_t block = 32);
void render_heatmap(const Tensor& attention, const GridGeometry& geometry,
                    const std::filesystem::path& path, std::size_t block = 32);

void write_report(std::ostream& os, const EvalReport& report);
// key=value lines.
void write_metrics(std::ostream& os, const EvalReport& report);
// threshold,class,precision,recall rows; class "macro" for averages.
void write_pr_rows(std::ostream& os, const EvalReport& report);

/// Attention distributions of one sample, as written by eval and read by viz.
struct OutcomeDump {
  GridGeometry geometry;
  std::size_t label = 0;
  std::size_t predicted = 0;
  double confidence = 0.0;
  Tensor p1;
  Tensor p2;
  Tensor baseline;
};

void write_outcome_dump(const OutcomeDump& dump, const std::filesystem::path& path);
// Throws FormatError on malformed content.
OutcomeDump read_outcome_dump(const std::filesystem::path& path);

struct AblationVariant {
  std::size_t layers = 0;
  EvalSummary summary;
  AttentionAgreement agreement;
  TrainingSummary training;
};

struct AblationReport {
  AblationVariant one_layer;
  AblationVariant two_layer;
};

// Trains 1- and 2-layer models with identical seeds and config, evaluated on
// the corpus test split.
AblationReport ablate_layers(const Corpus& corpus, TrainConfig config,
                             const EvalOptions& options = {});
void write_ablation(std::ostream& os, const AblationReport& report);

}  // namespace h2rat
