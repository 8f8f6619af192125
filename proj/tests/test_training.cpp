#include <doctest.h>

#include <cmath>
#include <cstring>
#include <utility>
#include <filesystem>
#include <fstream>

#include "h2rat/errors.hpp"
#include "h2rat/training.hpp"
#include "oracle.hpp"

using namespace h2rat;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "h2rat_test_training";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void dump(const fs::path& p, const std::string& bytes) { std::ofstream(p, std::ios::binary) << bytes; }

// Bitwise CRC-32 (IEEE, reflected).
std::uint32_t crc32_oracle(const std::string& bytes) {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (unsigned char b : bytes) {
    crc ^= b;
    for (int k = 0; k < 8; ++k) crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
  }
  return ~crc;
}

std::uint32_t read_u32(const std::string& s, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[at + static_cast<std::size_t>(i)]);
  return v;
}

std::string u32_bytes(std::uint32_t v) {
  std::string out(4, '\0');
  for (int i = 0; i < 4; ++i) out[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFF);
  return out;
}

// Replaces the manifest of a checkpoint file and reseals the CRC.
std::string rewrite_manifest(const std::string& file, const std::function<void(std::string&)>& edit) {
  const std::uint32_t len = read_u32(file, 8);
  std::string manifest = file.substr(12, len);
  edit(manifest);
  const std::string rest = file.substr(12 + len, file.size() - 12 - len - 4);
  const std::string body = u32_bytes(static_cast<std::uint32_t>(manifest.size())) + manifest + rest;
  return file.substr(0, 8) + body + u32_bytes(crc32_oracle(body));
}

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 3;
  c.hidden = 8;
  c.attention = 6;
  c.batch_size = 8;
  c.learning_rate = 5e-3;
  return c;
}

const Corpus& small_corpus() {
  static const Corpus c = generate_corpus(default_corpus_definition(), 48, 21);
  return c;
}

}  // namespace

TEST_CASE("cross-entropy examples") {
  CHECK(loss_cross_entropy(Tensor::column({0, 1, 0, 0}), 1) == 0.0);
  CHECK(loss_cross_entropy(Tensor(4, 1, 0.25), 2) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(loss_cross_entropy(Tensor::column({0.5, 0.5}), 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(loss_cross_entropy(Tensor::column({1, 0}), 1) == doctest::Approx(-std::log(1e-12)));
  CHECK_THROWS_AS(loss_cross_entropy(Tensor(4, 1, 0.25), 4), InvalidArgument);
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.learning_rate = 0.0;
  CHECK_NOTHROW(c.validate());
  c.learning_rate = -1e-3;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = TrainConfig{};
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = TrainConfig{};
  c.validation_fraction = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = TrainConfig{};
  c.layers = 3;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("initialization follows the Glorot rule") {
  ModelDims dims;
  dims.vocabulary = 30;
  RngStream rng(3);
  const Model m = init_model(dims, rng);
  for (const auto* p : m.parameters()) {
    const bool bias = p->value.cols() == 1 && p->name.size() >= 4 && p->name.substr(p->name.size() - 4) == "bias";
    if (bias) {
      const double expect = p->name == "lstm.forget.bias" ? 1.0 : 0.0;
      for (double x : p->value.values()) CHECK(x == expect);
    } else {
      const double s = std::sqrt(6.0 / static_cast<double>(p->value.rows() + p->value.cols()));
      for (double x : p->value.values()) REQUIRE(std::fabs(x) <= s);
    }
  }
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("full model gradients pass the finite-difference check") {
  RngStream rng(4);
  for (int trial = 0; trial < 4; ++trial) {
    ModelDims dims;
    dims.hidden = 2 + rng.below(5);
    dims.attention = 1 + rng.below(4);
    dims.feature = 1 + rng.below(4);
    dims.grid = GridGeometry{1 + rng.below(3), 1 + rng.below(3)};
    dims.vocabulary = 5;
    Model model = oracle::random_model(dims, rng);
    const Reminder r = oracle::random_reminder(1 + rng.below(4), dims.vocabulary, rng);
    const Tensor features = oracle::random_tensor(dims.feature, dims.grid.regions(), rng);
    const std::size_t label = rng.below(4);
    const auto analytic = oracle::model_gradients(model, r, features, label);
    const auto result = oracle::finite_difference(
        model.parameters(), [&] { return oracle::model_loss(model, r, features, label); }, analytic);
    CHECK_MESSAGE(result.max_relative_error < 1e-4, result.worst);
  }
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  ModelDims dims;
  dims.hidden = 6;
  dims.attention = 4;
  dims.vocabulary = small_corpus().vocabulary.size();
  RngStream rng(5);
  Model model = init_model(dims, rng);
  const Model before = model;
  TrainConfig config;
  config.learning_rate = 0.0;
  AdamOptimizer opt(model, config);
  const auto samples = prepare(small_corpus().train, small_corpus().vocabulary);
  std::vector<const PreparedSample*> batch{&samples[0], &samples[1], &samples[2]};
  std::vector<Tensor> grads;
  for (int i = 0; i < 3; ++i) {
    batch_gradients(model, batch, grads);
    opt.step(model, grads);
  }
  const auto a = before.parameters();
  const auto b = std::as_const(model).parameters();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->value == b[i]->value);

  auto cfg = small_config();
  cfg.learning_rate = 0.0;
  cfg.epochs = 1;
  const Checkpoint one = train(small_corpus(), cfg);
  cfg.epochs = 3;
  const Checkpoint three = train(small_corpus(), cfg);
  const auto p1 = one.model.parameters(), p3 = three.model.parameters();
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i]->value == p3[i]->value);
}

TEST_CASE("one small step lowers the loss of its sample") {
  const auto& corpus = small_corpus();
  const auto samples = prepare(corpus.train, corpus.vocabulary);
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    ModelDims dims = dims_for(corpus, TrainConfig{});
    RngStream rng(seed);
    Model model = init_model(dims, rng);
    const auto& s = samples[seed % samples.size()];
    const double before = loss_cross_entropy(infer(model, s.reminder, s.features).p_ans, s.label);
    TrainConfig config;
    config.learning_rate = 1e-3;
    AdamOptimizer opt(model, config);
    std::vector<Tensor> grads;
    batch_gradients(model, {&s}, grads);
    opt.step(model, grads);
    const double after = loss_cross_entropy(infer(model, s.reminder, s.features).p_ans, s.label);
    CHECK(after < before);
  }
}

TEST_CASE("batch gradients are the mean of per-sample gradients") {
  const auto& corpus = small_corpus();
  const auto samples = prepare(corpus.train, corpus.vocabulary);
  RngStream rng(6);
  ModelDims dims = dims_for(corpus, small_config());
  const Model model = init_model(dims, rng);
  std::vector<Tensor> g01, g0, g1;
  const double total = batch_gradients(model, {&samples[0], &samples[1]}, g01);
  const double l0 = batch_gradients(model, {&samples[0]}, g0);
  const double l1 = batch_gradients(model, {&samples[1]}, g1);
  CHECK(total == doctest::Approx(l0 + l1).epsilon(1e-14));
  for (std::size_t i = 0; i < g01.size(); ++i) {
    CHECK(max_abs_diff(g01[i], scale(add(g0[i], g1[i]), 0.5)) < 1e-14);
  }
}

TEST_CASE("training is deterministic and logs every evaluation") {
  std::vector<EpochRecord> log_a, log_b;
  const Checkpoint a = train(small_corpus(), small_config(), [&](const EpochRecord& r) { log_a.push_back(r); });
  const Checkpoint b = train(small_corpus(), small_config(), [&](const EpochRecord& r) { log_b.push_back(r); });
  CHECK(bit_equal(a, b));
  CHECK(log_a == log_b);
  CHECK(log_a.size() == 3);
  CHECK(a.summary.history == log_a);
  CHECK(a.config == small_config());
  CHECK(a.summary.corpus_seed == small_corpus().seed);

  const auto pa = temp_path("a.h2rw"), pb = temp_path("b.h2rw");
  save_checkpoint(a, pa);
  save_checkpoint(b, pb);
  CHECK(slurp(pa) == slurp(pb));
}

TEST_CASE("divergence is reported with its location") {
  auto cfg = small_config();
  cfg.learning_rate = 1e300;
  try {
    train(small_corpus(), cfg);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    const std::string what = e.what();
    CHECK(what.find("epoch") != std::string::npos);
    CHECK(what.find("batch") != std::string::npos);
  }
}

TEST_CASE("checkpoints round trip bit-exactly") {
  const Checkpoint ckpt = train(small_corpus(), small_config());
  const auto path = temp_path("round.h2rw");
  save_checkpoint(ckpt, path);
  const Checkpoint back = load_checkpoint(path);
  CHECK(bit_equal(ckpt, back));
  for (const auto& s : prepare(small_corpus().test, small_corpus().vocabulary)) {
    const auto x = infer(ckpt.model, s.reminder, s.features), y = infer(back.model, s.reminder, s.features);
    REQUIRE(x.p_ans == y.p_ans);
    REQUIRE(x.p2 == y.p2);
  }
}

TEST_CASE("checkpoint corruption yields distinct errors") {
  const Checkpoint ckpt = train(small_corpus(), small_config());
  const auto path = temp_path("good.h2rw");
  save_checkpoint(ckpt, path);
  const std::string good = slurp(path);
  const auto bad = temp_path("bad.h2rw");

  // Sanity: the test's CRC oracle agrees with the stored trailer.
  CHECK(crc32_oracle(good.substr(8, good.size() - 12)) == read_u32(good, good.size() - 4));

  dump(bad, good.substr(0, good.size() - 100));
  CHECK_THROWS_AS(load_checkpoint(bad), TruncatedError);
  dump(bad, good.substr(0, 6));
  CHECK_THROWS_AS(load_checkpoint(bad), TruncatedError);

  std::string flipped = good;
  flipped[good.size() - 20] ^= 0x01;
  dump(bad, flipped);
  CHECK_THROWS_AS(load_checkpoint(bad), ChecksumError);

  std::string version = good;
  version[4] = 2;
  dump(bad, version);
  CHECK_THROWS_AS(load_checkpoint(bad), VersionError);

  std::string magic = good;
  magic[1] = 'Z';
  dump(bad, magic);
  CHECK_THROWS_AS(load_checkpoint(bad), FormatError);

  // A hand-edited manifest whose dimensions disagree with the stored tensors.
  dump(bad, rewrite_manifest(good, [](std::string& m) {
         const auto at = m.find("\"m\":8");
         REQUIRE(at != std::string::npos);
         m.replace(at, 5, "\"m\":9");
       }));
  CHECK_THROWS_AS(load_checkpoint(bad), ShapeError);

  // Same edit without resealing: the checksum failure wins.
  std::string unsealed = good;
  const auto at = unsealed.find("\"m\":8");
  unsealed[at + 4] = '9';
  dump(bad, unsealed);
  CHECK_THROWS_AS(load_checkpoint(bad), ChecksumError);

  CHECK_THROWS_AS(load_checkpoint(temp_path("missing.h2rw")), IoError);
}
