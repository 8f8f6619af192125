#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <tuple>

#include "h2rat/errors.hpp"
#include "h2rat/scenarios.hpp"

using namespace h2rat;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "h2rat_test_scenarios";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void dump(const fs::path& p, const std::string& bytes) { std::ofstream(p, std::ios::binary) << bytes; }

std::array<std::size_t, kClassCount> class_counts(const std::vector<Scenario>& v) {
  std::array<std::size_t, kClassCount> c{};
  for (const auto& s : v) ++c[s.spec.label()];
  return c;
}

}  // namespace

TEST_CASE("task and abnormality names round trip") {
  for (std::size_t t = 0; t < kTaskCount; ++t) {
    const auto task = static_cast<Task>(t);
    CHECK(parse_task(task_name(task)) == task);
  }
  for (std::size_t a = 0; a < kClassCount; ++a) {
    const auto abn = static_cast<Abnormality>(a);
    CHECK(parse_abnormality(abnormality_name(abn)) == abn);
  }
  CHECK(abnormality_name(Abnormality::kWrongSpatialRelation) == "wrong_spatial_relation");
  CHECK_FALSE(parse_task("juggle").has_value());
}

TEST_CASE("eight samples split one per class per side") {
  const Corpus c = generate_corpus(default_corpus_definition(), 8, 1);
  CHECK(c.train.size() == 4);
  CHECK(c.test.size() == 4);
  for (auto n : class_counts(c.train)) CHECK(n == 1);
  for (auto n : class_counts(c.test)) CHECK(n == 1);
}

TEST_CASE("splits stay class balanced for many sizes") {
  const auto def = default_corpus_definition();
  for (std::size_t n : {2u, 3u, 5u, 9u, 17u, 40u, 101u, 250u}) {
    CAPTURE(n);
    const Corpus c = generate_corpus(def, n, n);
    CHECK(c.train.size() + c.test.size() == n);
    for (const auto* split : {&c.train, &c.test}) {
      const auto counts = class_counts(*split);
      const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
      CHECK(*hi - *lo <= 1);
    }
  }
  CHECK_THROWS_AS(generate_corpus(def, 1, 1), InvalidArgument);
}

TEST_CASE("generation is deterministic per seed") {
  const auto def = default_corpus_definition();
  CHECK(generate_corpus(def, 60, 5) == generate_corpus(def, 60, 5));
  CHECK_FALSE(generate_corpus(def, 60, 5) == generate_corpus(def, 60, 6));
}

TEST_CASE("zero noise makes equal specs produce equal grids") {
  auto def = default_corpus_definition();
  def.sigma = 0.0;
  const Corpus c = generate_corpus(def, 400, 3);
  std::map<std::tuple<int, int, std::vector<std::size_t>>, const Scenario*> seen;
  std::size_t pairs = 0;
  for (const auto* split : {&c.train, &c.test}) {
    for (const auto& s : *split) {
      const auto key = std::make_tuple(static_cast<int>(s.spec.task), static_cast<int>(s.spec.abnormality),
                                       s.spec.culprit_regions);
      auto [it, inserted] = seen.emplace(key, &s);
      if (!inserted) {
        ++pairs;
        CHECK(it->second->grid.features == s.grid.features);
      }
    }
  }
  CHECK(pairs > 0);
}

TEST_CASE("samples satisfy the scenario invariants") {
  const auto def = default_corpus_definition();
  const Corpus c = generate_corpus(def, 300, 9);
  const auto& g = def.geometry;
  std::size_t with_location = 0;
  for (const auto* split : {&c.train, &c.test}) {
    for (const auto& s : *split) {
      REQUIRE(!s.spec.culprit_regions.empty());
      REQUIRE(std::is_sorted(s.spec.culprit_regions.begin(), s.spec.culprit_regions.end()));
      for (auto r : s.spec.culprit_regions) REQUIRE_FALSE(is_rim(g, r, def.border_width));
      REQUIRE(s.grid.features.shape() == Shape{def.feature_dim, g.regions()});

      double total = 0.0, culprit = 0.0;
      for (std::size_t i = 0; i < g.regions(); ++i) {
        REQUIRE(s.baseline_attention[i] >= 0.0);
        total += s.baseline_attention[i];
      }
      for (auto r : s.spec.culprit_regions) culprit += s.baseline_attention[r];
      REQUIRE(std::fabs(total - 1.0) < 1e-9);
      REQUIRE(culprit >= 0.8);
      const Tensor filtered = apply_edge_filter(s.baseline_attention, g, {def.border_width});
      double kept = 0.0;
      for (auto r : s.spec.culprit_regions) kept += filtered[r];
      REQUIRE(kept >= 0.8);

      const Reminder r = tokenize(s.reminder_text, c.vocabulary);
      REQUIRE(r.unknown_count() == 0);
      for (const auto& phrases : def.location_phrases)
        for (const auto& phrase : phrases)
          if (s.reminder_text.find(phrase) != std::string::npos) ++with_location;

      const auto* row = def.corrections.find(static_cast<int>(s.spec.label()),
                                             zone_of(g, s.spec.culprit_regions.front()));
      REQUIRE(row != nullptr);
      REQUIRE(s.spec.correction_action == best_action(*row));
    }
  }
  // Roughly 70% of reminders name a location.
  CHECK(with_location > 150);
  CHECK(with_location < 270);
}

TEST_CASE("larger grids draw same-zone culprit pairs") {
  auto def = default_corpus_definition();
  def.geometry = GridGeometry{8, 8};
  const Corpus c = generate_corpus(def, 200, 4);
  std::size_t pairs = 0;
  for (const auto& s : c.train) {
    if (s.spec.culprit_regions.size() != 2) continue;
    ++pairs;
    const auto a = s.spec.culprit_regions[0], b = s.spec.culprit_regions[1];
    CHECK(zone_of(def.geometry, a) == zone_of(def.geometry, b));
    const auto dr = static_cast<long>(a / 8) - static_cast<long>(b / 8);
    const auto dc = static_cast<long>(a % 8) - static_cast<long>(b % 8);
    CHECK(std::labs(dr) + std::labs(dc) == 1);
    CHECK(s.baseline_attention[a] == 0.5);
  }
  CHECK(pairs > 10);
}

TEST_CASE("default correction table rows are distributions") {
  const auto def = default_corpus_definition();
  CHECK(def.corrections.rows().size() == kClassCount * 4);
  for (const auto& [key, row] : def.corrections.rows()) {
    double total = 0.0;
    for (const auto& c : row) {
      CHECK(c.probability >= 0.0);
      total += c.probability;
    }
    CHECK(std::fabs(total - 1.0) < 1e-9);
  }
}

TEST_CASE("vocabulary covers every template") {
  const auto def = default_corpus_definition();
  const Vocabulary v = build_vocabulary(def);
  CHECK(v.token(0) == "<pad>");
  CHECK(v.contains("gear"));
  CHECK(v.contains("cup"));
}

TEST_CASE("missing templates are named") {
  auto def = default_corpus_definition();
  def.templates.erase(template_key(Task::kFactoryPickGear, Abnormality::kWrongPose));
  try {
    validate_definition(def);
    FAIL("expected TemplateError");
  } catch (const TemplateError& e) {
    const std::string what = e.what();
    CHECK(what.find("factory_pick_gear") != std::string::npos);
    CHECK(what.find("wrong_pose") != std::string::npos);
  }
  CHECK_THROWS_AS(generate_corpus(def, 10, 1), TemplateError);

  auto bad_slot = default_corpus_definition();
  bad_slot.templates[template_key(Task::kKitchenServeWater, Abnormality::kWrongAction)] = {"the {nonesuch} fell"};
  CHECK_THROWS_AS(validate_definition(bad_slot), TemplateError);
}

TEST_CASE("generic reminders replace class templates at the configured rate") {
  auto def = default_corpus_definition();
  def.generic_templates = {"hey robot"};
  def.ambiguous_fraction = 1.0;

  def.generic_fraction = 0.0;
  for (const auto& s : generate_corpus(def, 200, 3).train) CHECK(s.reminder_text != "hey robot");

  def.generic_fraction = 1.0;
  for (const auto& s : generate_corpus(def, 200, 3).train) CHECK(s.reminder_text == "hey robot");

  def.generic_fraction = 0.5;
  const Corpus half = generate_corpus(def, 2000, 3);
  std::size_t generic = 0;
  for (const auto& s : half.train) generic += s.reminder_text == "hey robot";
  // Binomial(1000, 0.5): 4 sigma is about 63.
  CHECK(generic > 437);
  CHECK(generic < 563);
  CHECK(build_vocabulary(def).contains("robot"));
}

TEST_CASE("generic template problems are rejected") {
  auto def = default_corpus_definition();
  def.generic_fraction = 0.2;
  def.generic_templates.clear();
  CHECK_THROWS_AS(validate_definition(def), TemplateError);
  def.generic_templates = {"mind the {nonesuch}"};
  CHECK_THROWS_AS(validate_definition(def), TemplateError);
  def.generic_templates = {"mind the {object}"};
  CHECK_NOTHROW(validate_definition(def));
  def.generic_fraction = 1.5;
  CHECK_THROWS_AS(validate_definition(def), InvalidArgument);
}

TEST_CASE("corpus files round trip exactly") {
  const Corpus c = generate_corpus(default_corpus_definition(), 50, 11);
  const auto path = temp_path("round.h2rc");
  save_corpus(c, path);
  CHECK(load_corpus(path) == c);
  const auto again = temp_path("again.h2rc");
  save_corpus(load_corpus(path), again);
  CHECK(slurp(path) == slurp(again));
}

TEST_CASE("corrupted corpus files raise distinct errors") {
  const Corpus c = generate_corpus(default_corpus_definition(), 20, 12);
  const auto path = temp_path("good.h2rc");
  save_corpus(c, path);
  const std::string good = slurp(path);
  const auto bad = temp_path("bad.h2rc");

  dump(bad, "");
  CHECK_THROWS_AS(load_corpus(bad), TruncatedError);

  std::string magic = good;
  magic[0] = 'X';
  dump(bad, magic);
  CHECK_THROWS_AS(load_corpus(bad), FormatError);
  try {
    load_corpus(bad);
  } catch (const ChecksumError&) {
    FAIL("bad magic should not be reported as a checksum failure");
  } catch (const FormatError&) {
  }

  std::string version = good;
  version[4] = 9;
  dump(bad, version);
  CHECK_THROWS_AS(load_corpus(bad), VersionError);

  dump(bad, good.substr(0, good.size() / 2));
  CHECK_THROWS_AS(load_corpus(bad), TruncatedError);

  std::string flipped = good;
  flipped[good.size() - 40] ^= 0x10;
  dump(bad, flipped);
  CHECK_THROWS_AS(load_corpus(bad), ChecksumError);

  CHECK_THROWS_AS(load_corpus(temp_path("missing.h2rc")), IoError);
}
