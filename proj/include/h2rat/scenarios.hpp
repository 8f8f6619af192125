#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "h2rat/attention.hpp"
#include "h2rat/rng.hpp"
#include "h2rat/textenc.hpp"
#include "h2rat/vision.hpp"

namespace h2rat {

enum class Task : std::uint8_t { kKitchenServeWater = 0, kFactoryPickGear = 1 };
enum class Abnormality : std::uint8_t {
  kWrongAction = 0,
  kWrongPose = 1,
  kWrongRegion = 2,
  kWrongSpatialRelation = 3,
};

inline constexpr std::size_t kTaskCount = 2;
inline constexpr std::size_t kClassCount = 4;

std::string_view task_name(Task t);
std::string_view abnormality_name(Abnormality a);
std::optional<Task> parse_task(std::string_view name);
std::optional<Abnormality> parse_abnormality(std::string_view name);

struct ScenarioSpec {
  Task task = Task::kKitchenServeWater;
  Abnormality abnormality = Abnormality::kWrongAction;
  std::vector<std::size_t> culprit_regions;  // sorted, interior only
  int correction_action = 0;

  std::size_t label() const { return static_cast<std::size_t>(abnormality); }
  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

struct Scenario {
  ScenarioSpec spec;
  RegionGrid grid;
  std::string reminder_text;
  Tensor baseline_attention;  // d x 1, uniform over culprit regions

  friend bool operator==(const Scenario& a, const Scenario& b) {
    return a.spec == b.spec && a.grid.geometry == b.grid.geometry &&
           a.grid.features == b.grid.features && a.grid.source == b.grid.source &&
           a.reminder_text == b.reminder_text && a.baseline_attention == b.baseline_attention;
  }
};

/// Everything needed to regenerate a corpus from a seed.
struct CorpusDefinition {
  GridGeometry geometry;
  std::size_t feature_dim = 16;
  double sigma = 0.3;                 // per-component Gaussian feature noise
  double ambiguous_fraction = 0.3;    // reminders without a location phrase
  double generic_fraction = 0.0;      // reminders drawn from generic_templates
  double split_ratio = 0.5;           // train share, stratified by class
  std::size_t border_width = 1;       // culprits never sit in these rim rings
  std::size_t max_culprits = 2;       // 1 or 2 adjacent interior regions, one zone

  // Unit-norm feature signatures.
  std::array<std::array<std::vector<double>, kClassCount>, kTaskCount> class_signatures;
  std::array<std::vector<double>, kTaskCount> background_signatures;  // interior, non-culprit
  std::array<std::vector<double>, kTaskCount> clutter_signatures;     // rim regions

  // Keyed "task/abnormality"; "{slot}" placeholders resolve per task.
  std::map<std::string, std::vector<std::string>> templates;
  // Class-agnostic complaints; the abnormality must then come from vision.
  std::vector<std::string> generic_templates;
  std::array<std::map<std::string, std::vector<std::string>>, kTaskCount> slots;
  std::array<std::vector<std::string>, 4> location_phrases;  // by zone

  CorrectionTable corrections;

  friend bool operator==(const CorpusDefinition&, const CorpusDefinition&) = default;
};

std::string template_key(Task t, Abnormality a);

// The stock kitchen/factory definition. Signatures are orthonormalized
// Gaussian draws from signature_seed.
CorpusDefinition default_corpus_definition(std::uint64_t signature_seed = 0x48325241u);

// Every word a generated reminder can contain.
Vocabulary build_vocabulary(const CorpusDefinition& def);

// Throws TemplateError naming the first (task, abnormality) pair without
// templates, or a template referencing an unknown slot.
void validate_definition(const CorpusDefinition& def);

struct Corpus {
  CorpusDefinition definition;
  std::uint64_t seed = 0;
  Vocabulary vocabulary;
  std::vector<Scenario> train;
  std::vector<Scenario> test;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// Draws n labelled scenarios (class counts balanced to within one) and
/// splits them per class by def.split_ratio. Feature values are rounded to
/// float32 so the corpus file reproduces them exactly.
Corpus generate_corpus(const CorpusDefinition& def, std::size_t n, std::uint64_t seed);

// "H2RC" container: magic, u32 version, length-prefixed JSON metadata,
// per-sample records, CRC32 of everything between version and CRC.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

}  // namespace h2rat
