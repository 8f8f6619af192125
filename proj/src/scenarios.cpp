#include "h2rat/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "binio.hpp"
#include "h2rat/errors.hpp"
#include "json_io.hpp"

namespace h2rat {

namespace {

constexpr std::array<std::string_view, kTaskCount> kTaskNames{"kitchen_serve_water",
                                                              "factory_pick_gear"};
constexpr std::array<std::string_view, kClassCount> kAbnormalityNames{
    "wrong_action", "wrong_pose", "wrong_region", "wrong_spatial_relation"};

}  // namespace

std::string_view task_name(Task t) { return kTaskNames.at(static_cast<std::size_t>(t)); }

std::string_view abnormality_name(Abnormality a) {
  return kAbnormalityNames.at(static_cast<std::size_t>(a));
}

std::optional<Task> parse_task(std::string_view name) {
  for (std::size_t i = 0; i < kTaskCount; ++i) {
    if (kTaskNames[i] == name) return static_cast<Task>(i);
  }
  return std::nullopt;
}

std::optional<Abnormality> parse_abnormality(std::string_view name) {
  for (std::size_t i = 0; i < kClassCount; ++i) {
    if (kAbnormalityNames[i] == name) return static_cast<Abnormality>(i);
  }
  return std::nullopt;
}

std::string template_key(Task t, Abnormality a) {
  return std::string(task_name(t)) + "/" + std::string(abnormality_name(a));
}

namespace {

// Gaussian draws, Gram-Schmidt orthonormalized while the dimension allows.
std::vector<std::vector<double>> make_signatures(std::size_t count, std::size_t dim,
                                                 std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<std::vector<double>> out;
  for (std::size_t n = 0; n < count; ++n) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.normal();
    if (out.size() < dim) {
      for (const auto& u : out) {
        const double proj = std::inner_product(v.begin(), v.end(), u.begin(), 0.0);
        for (std::size_t i = 0; i < dim; ++i) v[i] -= proj * u[i];
      }
    }
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (double& x : v) x /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

enum Action : int {
  kRetryPlannedAction = 0,
  kRotateGripper,
  kApproachFromAbove,
  kShiftLeft,
  kShiftRight,
  kPlaceRelativeToReference,
  kLiftAndRealign,
  kPauseAndAskHuman,
};

CorrectionTable default_corrections() {
  CorrectionTable t;
  t.action_names = {"retry_planned_action",   "rotate_gripper_to_planned_pose",
                    "approach_from_above",    "shift_left",
                    "shift_right",            "place_relative_to_reference",
                    "lift_and_realign",       "pause_and_ask_human"};
  for (int zone = 0; zone < 4; ++zone) {
    const bool upper = zone < 2;
    const bool left = zone % 2 == 0;
    t.set(0, zone, {{kRetryPlannedAction, 0.75}, {kPauseAndAskHuman, 0.25}});
    if (upper) {
      t.set(1, zone, {{kRotateGripper, 0.6}, {kApproachFromAbove, 0.3}, {kPauseAndAskHuman, 0.1}});
      t.set(3, zone,
            {{kPlaceRelativeToReference, 0.4}, {kLiftAndRealign, 0.5}, {kPauseAndAskHuman, 0.1}});
    } else {
      t.set(1, zone, {{kRotateGripper, 0.3}, {kApproachFromAbove, 0.6}, {kPauseAndAskHuman, 0.1}});
      t.set(3, zone,
            {{kPlaceRelativeToReference, 0.6}, {kLiftAndRealign, 0.3}, {kPauseAndAskHuman, 0.1}});
    }
    // Culprit on the left means the arm overshot that way.
    if (left) {
      t.set(2, zone, {{kShiftLeft, 0.1}, {kShiftRight, 0.7}, {kPauseAndAskHuman, 0.2}});
    } else {
      t.set(2, zone, {{kShiftLeft, 0.7}, {kShiftRight, 0.1}, {kPauseAndAskHuman, 0.2}});
    }
  }
  return t;
}

}  // namespace

CorpusDefinition default_corpus_definition(std::uint64_t signature_seed) {
  CorpusDefinition def;
  const auto sigs = make_signatures(kTaskCount * (kClassCount + 2), def.feature_dim, signature_seed);
  std::size_t next = 0;
  for (std::size_t t = 0; t < kTaskCount; ++t) {
    for (std::size_t c = 0; c < kClassCount; ++c) def.class_signatures[t][c] = sigs[next++];
    def.background_signatures[t] = sigs[next++];
    def.clutter_signatures[t] = sigs[next++];
  }

  const std::map<Abnormality, std::vector<std::string>> shared{
      {Abnormality::kWrongAction,
       {"stop you are {wrong_verb} the {object}",
        "that is the wrong action you should {right_verb} the {object}",
        "do not keep {wrong_verb} the {object}",
        "wrong move please {right_verb} the {object} instead"}},
      {Abnormality::kWrongPose,
       {"the {part} pose is wrong", "your {part} is {pose_adj} when grasping the {object}",
        "rotate the {part} the grasp angle is off", "bad pose the {part} is {pose_adj}"}},
      {Abnormality::kWrongRegion,
       {"you are going to the wrong area", "the {object} belongs on the {place} not there",
        "wrong region move to the {place}", "that is not the right spot for the {object}"}},
      {Abnormality::kWrongSpatialRelation,
       {"the {object} is too close to the {target}",
        "do not put the {object} {relation} the {target}",
        "the {object} should be next to the {target}",
        "keep the {object} away from the edge of the {place}"}},
  };
  for (std::size_t t = 0; t < kTaskCount; ++t) {
    for (const auto& [abn, templates] : shared) {
      def.templates[template_key(static_cast<Task>(t), abn)] = templates;
    }
  }

  const std::map<std::string, std::vector<std::string>> common{
      {"part", {"gripper", "hand", "fingers", "wrist"}},
      {"pose_adj", {"tilted", "twisted", "sideways", "upside down"}},
      {"relation", {"behind", "under", "on top of", "beside"}},
  };
  def.slots[0] = common;
  def.slots[0]["object"] = {"cup", "glass", "mug"};
  def.slots[0]["target"] = {"person", "guest", "kettle"};
  def.slots[0]["place"] = {"counter", "table", "tray"};
  def.slots[0]["wrong_verb"] = {"pouring", "dropping", "shaking", "tipping"};
  def.slots[0]["right_verb"] = {"hold", "carry", "serve"};
  def.slots[1] = common;
  def.slots[1]["object"] = {"gear", "part", "cog"};
  def.slots[1]["target"] = {"bin", "box", "shaft"};
  def.slots[1]["place"] = {"conveyor", "bench", "rack"};
  def.slots[1]["wrong_verb"] = {"pushing", "dropping", "hitting", "spinning"};
  def.slots[1]["right_verb"] = {"pick", "lift", "grab"};

  def.generic_templates = {"stop that is wrong", "no not like that", "something is off with the {object}",
                           "that is not what i wanted"};

  def.location_phrases = {{
      {"on the upper left", "at the top left"},
      {"on the upper right", "at the top right"},
      {"on the lower left", "at the bottom left"},
      {"on the lower right", "at the bottom right"},
  }};
  def.corrections = default_corrections();
  return def;
}

namespace {

// Splits a template into literal text and {slot} references.
std::vector<std::string> slot_names(const std::string& tmpl) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = tmpl.find('{', pos)) != std::string::npos) {
    const std::size_t close = tmpl.find('}', pos);
    if (close == std::string::npos) throw TemplateError("unterminated slot in template '" + tmpl + "'");
    names.push_back(tmpl.substr(pos + 1, close - pos - 1));
    pos = close + 1;
  }
  return names;
}

std::string strip_slots(std::string tmpl) {
  std::size_t pos = 0;
  while ((pos = tmpl.find('{', pos)) != std::string::npos) {
    const std::size_t close = tmpl.find('}', pos);
    tmpl.replace(pos, close - pos + 1, " ");
  }
  return tmpl;
}

std::string fill_template(const std::string& tmpl, const std::map<std::string, std::vector<std::string>>& slots,
                          RngStream& rng) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string::npos) {
      out.append(tmpl, pos, std::string::npos);
      return out;
    }
    const std::size_t close = tmpl.find('}', open);
    out.append(tmpl, pos, open - pos);
    const auto& choices = slots.at(tmpl.substr(open + 1, close - open - 1));
    out += choices[static_cast<std::size_t>(rng.below(choices.size()))];
    pos = close + 1;
  }
}

}  // namespace

void validate_definition(const CorpusDefinition& def) {
  if (def.geometry.regions() == 0 || def.feature_dim == 0) {
    throw InvalidArgument("corpus geometry and feature size must be positive");
  }
  if (2 * def.border_width >= std::min(def.geometry.rows, def.geometry.cols)) {
    throw InvalidArgument("border width leaves no interior region for culprits");
  }
  if (def.max_culprits < 1 || def.max_culprits > 2) {
    throw InvalidArgument("max_culprits must be 1 or 2");
  }
  if (!(def.sigma >= 0.0) || !(def.split_ratio > 0.0 && def.split_ratio < 1.0) ||
      !(def.ambiguous_fraction >= 0.0 && def.ambiguous_fraction <= 1.0) ||
      !(def.generic_fraction >= 0.0 && def.generic_fraction <= 1.0)) {
    throw InvalidArgument("corpus sigma, split ratio or reminder fractions out of range");
  }
  if (def.generic_fraction > 0.0 && def.generic_templates.empty()) {
    throw TemplateError("generic_fraction is positive but there are no generic templates");
  }
  auto check_sig = [&](const std::vector<double>& s, const std::string& what) {
    if (s.size() != def.feature_dim) {
      throw InvalidArgument(what + " signature has " + std::to_string(s.size()) +
                            " components, expected " + std::to_string(def.feature_dim));
    }
  };
  for (std::size_t t = 0; t < kTaskCount; ++t) {
    const auto task = static_cast<Task>(t);
    check_sig(def.background_signatures[t], "background");
    check_sig(def.clutter_signatures[t], "clutter");
    for (std::size_t c = 0; c < kClassCount; ++c) {
      const auto abn = static_cast<Abnormality>(c);
      const auto key = template_key(task, abn);
      check_sig(def.class_signatures[t][c], key);
      auto it = def.templates.find(key);
      if (it == def.templates.end() || it->second.empty()) {
        throw TemplateError("no reminder template for (" + std::string(task_name(task)) + ", " +
                            std::string(abnormality_name(abn)) + ")");
      }
      for (const auto& tmpl : it->second) {
        for (const auto& slot : slot_names(tmpl)) {
          auto s = def.slots[t].find(slot);
          if (s == def.slots[t].end() || s->second.empty()) {
            throw TemplateError("template '" + tmpl + "' for " + key + " uses unknown slot {" +
                                slot + "}");
          }
        }
      }
    }
  }
  for (const auto& tmpl : def.generic_templates) {
    for (const auto& slot : slot_names(tmpl)) {
      for (std::size_t t = 0; t < kTaskCount; ++t) {
        auto s = def.slots[t].find(slot);
        if (s == def.slots[t].end() || s->second.empty()) {
          throw TemplateError("generic template '" + tmpl + "' uses unknown slot {" + slot + "} for " +
                              std::string(task_name(static_cast<Task>(t))));
        }
      }
    }
  }
  for (const auto& phrases : def.location_phrases) {
    if (phrases.empty()) throw TemplateError("every zone needs at least one location phrase");
  }
}

Vocabulary build_vocabulary(const CorpusDefinition& def) {
  std::set<std::string> words;
  auto absorb = [&](const std::string& text) {
    for (auto& w : normalize_words(text)) words.insert(std::move(w));
  };
  for (const auto& [key, templates] : def.templates) {
    for (const auto& t : templates) absorb(strip_slots(t));
  }
  for (const auto& t : def.generic_templates) absorb(strip_slots(t));
  for (const auto& task_slots : def.slots) {
    for (const auto& [name, values] : task_slots) {
      for (const auto& v : values) absorb(v);
    }
  }
  for (const auto& phrases : def.location_phrases) {
    for (const auto& p : phrases) absorb(p);
  }
  return Vocabulary::from_words({words.begin(), words.end()});
}

namespace {

Scenario draw_scenario(const CorpusDefinition& def, Abnormality abn, RngStream& rng,
                       const std::vector<std::size_t>& interior) {
  const GridGeometry& g = def.geometry;
  Scenario s;
  s.spec.abnormality = abn;
  s.spec.task = static_cast<Task>(rng.below(kTaskCount));
  const auto t = static_cast<std::size_t>(s.spec.task);

  const std::size_t primary = interior[static_cast<std::size_t>(rng.below(interior.size()))];
  s.spec.culprit_regions = {primary};
  if (def.max_culprits >= 2 && rng.bernoulli(0.5)) {
    std::vector<std::size_t> neighbours;
    const std::size_t r = primary / g.cols, c = primary % g.cols;
    const std::array<std::pair<long, long>, 4> steps{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
    for (auto [dr, dc] : steps) {
      const long nr = static_cast<long>(r) + dr, nc = static_cast<long>(c) + dc;
      if (nr < 0 || nc < 0 || nr >= static_cast<long>(g.rows) || nc >= static_cast<long>(g.cols)) continue;
      const std::size_t idx = g.index(static_cast<std::size_t>(nr), static_cast<std::size_t>(nc));
      // Same zone keeps the correction action and location phrase unambiguous.
      if (!is_rim(g, idx, def.border_width) && zone_of(g, idx) == zone_of(g, primary)) {
        neighbours.push_back(idx);
      }
    }
    if (!neighbours.empty()) {
      s.spec.culprit_regions.push_back(neighbours[static_cast<std::size_t>(rng.below(neighbours.size()))]);
    }
  }
  std::sort(s.spec.culprit_regions.begin(), s.spec.culprit_regions.end());

  s.grid.geometry = g;
  s.grid.source = FeatureSource::kSynthetic;
  s.grid.features = Tensor(def.feature_dim, g.regions());
  for (std::size_t region = 0; region < g.regions(); ++region) {
    const bool culprit = std::binary_search(s.spec.culprit_regions.begin(),
                                            s.spec.culprit_regions.end(), region);
    const auto& base = culprit ? def.class_signatures[t][static_cast<std::size_t>(abn)]
                       : is_rim(g, region, def.border_width) ? def.clutter_signatures[t]
                                                             : def.background_signatures[t];
    for (std::size_t k = 0; k < def.feature_dim; ++k) {
      const double noisy = base[k] + def.sigma * rng.normal();
      s.grid.features(k, region) = static_cast<double>(static_cast<float>(noisy));
    }
  }

  const bool generic = rng.bernoulli(def.generic_fraction);
  const auto& templates = generic ? def.generic_templates : def.templates.at(template_key(s.spec.task, abn));
  const auto& tmpl = templates[static_cast<std::size_t>(rng.below(templates.size()))];
  s.reminder_text = fill_template(tmpl, def.slots[t], rng);
  const int zone = zone_of(g, primary);
  if (!rng.bernoulli(def.ambiguous_fraction)) {
    const auto& phrases = def.location_phrases[static_cast<std::size_t>(zone)];
    s.reminder_text += " " + phrases[static_cast<std::size_t>(rng.below(phrases.size()))];
  }

  s.baseline_attention = Tensor(g.regions(), 1);
  const double share = 1.0 / static_cast<double>(s.spec.culprit_regions.size());
  for (std::size_t region : s.spec.culprit_regions) s.baseline_attention[region] = share;

  const auto* row = def.corrections.find(static_cast<int>(abn), zone);
  if (row == nullptr) throw NoCorrectionKnown(static_cast<int>(abn), zone);
  s.spec.correction_action = best_action(*row);
  return s;
}

}  // namespace

Corpus generate_corpus(const CorpusDefinition& def, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("corpus needs at least 2 samples");
  validate_definition(def);
  const auto interior = interior_regions(def.geometry, def.border_width);

  RngStream rng(seed);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i % kClassCount;
  rng.shuffle(std::span<std::size_t>(labels));

  std::array<std::vector<Scenario>, kClassCount> by_class;
  for (std::size_t i = 0; i < n; ++i) {
    by_class[labels[i]].push_back(
        draw_scenario(def, static_cast<Abnormality>(labels[i]), rng, interior));
  }

  Corpus corpus;
  corpus.definition = def;
  corpus.seed = seed;
  corpus.vocabulary = build_vocabulary(def);
  // Cumulative rounding keeps the overall split at the ratio and every
  // class within one sample of it.
  std::size_t cumulative = 0;
  std::size_t assigned_train = 0;
  for (auto& group : by_class) {
    cumulative += group.size();
    const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(cumulative) * def.split_ratio));
    const std::size_t take = std::min(group.size(), target - assigned_train);
    assigned_train += take;
    for (std::size_t i = 0; i < group.size(); ++i) {
      (i < take ? corpus.train : corpus.test).push_back(std::move(group[i]));
    }
  }
  return corpus;
}

namespace {

constexpr std::uint32_t kCorpusVersion = 1;
const std::string kCorpusWhat = "corpus file";

using json_io::json;

json definition_to_json(const CorpusDefinition& def) {
  json sig = json::object();
  for (std::size_t t = 0; t < kTaskCount; ++t) {
    const std::string task(task_name(static_cast<Task>(t)));
    json classes = json::object();
    for (std::size_t c = 0; c < kClassCount; ++c) {
      classes[std::string(abnormality_name(static_cast<Abnormality>(c)))] = def.class_signatures[t][c];
    }
    sig[task] = {{"classes", classes},
                 {"background", def.background_signatures[t]},
                 {"clutter", def.clutter_signatures[t]}};
  }
  json slots = json::object();
  for (std::size_t t = 0; t < kTaskCount; ++t) slots[std::string(task_name(static_cast<Task>(t)))] = def.slots[t];
  return {
      {"rows", def.geometry.rows},
      {"cols", def.geometry.cols},
      {"feature_dim", def.feature_dim},
      {"sigma", def.sigma},
      {"ambiguous_fraction", def.ambiguous_fraction},
      {"generic_fraction", def.generic_fraction},
      {"split_ratio", def.split_ratio},
      {"border_width", def.border_width},
      {"max_culprits", def.max_culprits},
      {"signatures", sig},
      {"templates", def.templates},
      {"generic_templates", def.generic_templates},
      {"slots", slots},
      {"location_phrases", def.location_phrases},
      {"corrections", json_io::to_json(def.corrections)},
  };
}

CorpusDefinition definition_from_json(const json& j) {
  CorpusDefinition def;
  def.geometry.rows = j.at("rows").get<std::size_t>();
  def.geometry.cols = j.at("cols").get<std::size_t>();
  def.feature_dim = j.at("feature_dim").get<std::size_t>();
  // Guards allocations against a corrupted header before the CRC is checked.
  constexpr std::size_t kMaxSide = 4096, kMaxGridValues = std::size_t{1} << 26;
  if (def.geometry.rows == 0 || def.geometry.cols == 0 || def.feature_dim == 0 ||
      def.geometry.rows > kMaxSide || def.geometry.cols > kMaxSide || def.feature_dim > kMaxSide ||
      def.geometry.regions() * def.feature_dim > kMaxGridValues) {
    throw FormatError(kCorpusWhat + ": implausible grid geometry");
  }
  def.sigma = j.at("sigma").get<double>();
  def.ambiguous_fraction = j.at("ambiguous_fraction").get<double>();
  def.generic_fraction = j.at("generic_fraction").get<double>();
  def.split_ratio = j.at("split_ratio").get<double>();
  def.border_width = j.at("border_width").get<std::size_t>();
  def.max_culprits = j.at("max_culprits").get<std::size_t>();
  for (std::size_t t = 0; t < kTaskCount; ++t) {
    const std::string task(task_name(static_cast<Task>(t)));
    const auto& s = j.at("signatures").at(task);
    for (std::size_t c = 0; c < kClassCount; ++c) {
      def.class_signatures[t][c] =
          s.at("classes").at(std::string(abnormality_name(static_cast<Abnormality>(c)))).get<std::vector<double>>();
    }
    def.background_signatures[t] = s.at("background").get<std::vector<double>>();
    def.clutter_signatures[t] = s.at("clutter").get<std::vector<double>>();
    def.slots[t] = j.at("slots").at(task).get<std::map<std::string, std::vector<std::string>>>();
  }
  def.templates = j.at("templates").get<std::map<std::string, std::vector<std::string>>>();
  def.generic_templates = j.at("generic_templates").get<std::vector<std::string>>();
  def.location_phrases = j.at("location_phrases").get<std::array<std::vector<std::string>, 4>>();
  def.corrections = json_io::correction_table_from_json(j.at("corrections"));
  return def;
}

void write_scenario(binio::Writer& out, const Scenario& s, bool is_test) {
  out.u8(is_test ? 1 : 0);
  out.u8(static_cast<std::uint8_t>(s.spec.task));
  out.u8(static_cast<std::uint8_t>(s.spec.abnormality));
  out.u32(static_cast<std::uint32_t>(s.spec.correction_action));
  out.u32(static_cast<std::uint32_t>(s.spec.culprit_regions.size()));
  for (std::size_t r : s.spec.culprit_regions) out.u32(static_cast<std::uint32_t>(r));
  out.string(s.reminder_text);
  const auto& f = s.grid.features;
  for (std::size_t region = 0; region < f.cols(); ++region) {
    for (std::size_t k = 0; k < f.rows(); ++k) out.f32(f(k, region));
  }
  for (double p : s.baseline_attention.values()) out.f32(p);
}

Scenario read_scenario(binio::Reader& in, const CorpusDefinition& def, bool& is_test) {
  Scenario s;
  const auto split = in.u8();
  const auto task = in.u8();
  const auto abn = in.u8();
  if (split > 1 || task >= kTaskCount || abn >= kClassCount) {
    throw FormatError(kCorpusWhat + ": invalid sample header");
  }
  is_test = split == 1;
  s.spec.task = static_cast<Task>(task);
  s.spec.abnormality = static_cast<Abnormality>(abn);
  s.spec.correction_action = static_cast<int>(in.u32());
  const std::size_t d = def.geometry.regions();
  const auto n_culprits = in.u32();
  if (n_culprits == 0 || n_culprits > d) throw FormatError(kCorpusWhat + ": invalid culprit count");
  for (std::uint32_t i = 0; i < n_culprits; ++i) {
    const auto r = in.u32();
    if (r >= d) throw FormatError(kCorpusWhat + ": culprit region out of range");
    s.spec.culprit_regions.push_back(r);
  }
  s.reminder_text = in.string();
  s.grid.geometry = def.geometry;
  s.grid.source = FeatureSource::kSynthetic;
  s.grid.features = Tensor(def.feature_dim, d);
  for (std::size_t region = 0; region < d; ++region) {
    for (std::size_t k = 0; k < def.feature_dim; ++k) s.grid.features(k, region) = in.f32();
  }
  s.baseline_attention = Tensor(d, 1);
  for (std::size_t region = 0; region < d; ++region) s.baseline_attention[region] = in.f32();
  if (!s.grid.features.all_finite() || !s.baseline_attention.all_finite()) {
    throw FormatError(kCorpusWhat + ": non-finite sample values");
  }
  return s;
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  json meta = {
      {"format", "h2rat-corpus"},
      {"seed", corpus.seed},
      {"definition", definition_to_json(corpus.definition)},
      {"vocabulary", json_io::to_json(corpus.vocabulary)},
      {"train_count", corpus.train.size()},
      {"test_count", corpus.test.size()},
  };
  binio::Writer out;
  out.magic("H2RC");
  out.u32(kCorpusVersion);
  const std::size_t body = out.size();
  out.string(meta.dump());
  for (const auto& s : corpus.train) write_scenario(out, s, false);
  for (const auto& s : corpus.test) write_scenario(out, s, true);
  out.crc_trailer(body);
  binio::write_file(path, out.bytes());
}

Corpus load_corpus(const std::filesystem::path& path) {
  const auto bytes = binio::read_file(path);
  const auto container = binio::open_container(bytes, "H2RC", kCorpusVersion, kCorpusWhat);
  Corpus corpus = binio::parse_checked(bytes, container, kCorpusWhat, [&] {
    binio::Reader in(bytes, kCorpusWhat, container.body_begin, container.body_end);
    const json meta = json_io::parse_document(in.string(), kCorpusWhat);
    Corpus c;
    std::size_t train_count = 0, test_count = 0;
    json_io::guarded(kCorpusWhat, [&] {
      c.seed = meta.at("seed").get<std::uint64_t>();
      c.definition = definition_from_json(meta.at("definition"));
      c.vocabulary = json_io::vocabulary_from_json(meta.at("vocabulary"));
      train_count = meta.at("train_count").get<std::size_t>();
      test_count = meta.at("test_count").get<std::size_t>();
      return 0;
    });
    for (std::size_t i = 0; i < train_count + test_count; ++i) {
      bool is_test = false;
      Scenario s = read_scenario(in, c.definition, is_test);
      (is_test ? c.test : c.train).push_back(std::move(s));
    }
    if (!in.at_end()) throw FormatError(kCorpusWhat + ": trailing bytes after samples");
    if (c.train.size() != train_count || c.test.size() != test_count) {
      throw FormatError(kCorpusWhat + ": split counts disagree with metadata");
    }
    return c;
  });
  return corpus;
}

}  // namespace h2rat
