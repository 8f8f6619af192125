#include <doctest.h>

#include <cstring>
#include <vector>

#include "h2rat/errors.hpp"
#include "h2rat/kernels.hpp"
#include "h2rat/rng.hpp"

using namespace h2rat;

namespace {

std::vector<double> draw(std::size_t n, RngStream& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-3.0, 3.0);
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar table is always available and listed first") {
  const auto tables = kernels::available_tables();
  REQUIRE(!tables.empty());
  CHECK(tables.front()->name == "scalar");
  CHECK(&kernels::scalar_table() == tables.front());
}

TEST_CASE("selecting an unknown variant throws") {
  CHECK_THROWS_AS(kernels::select("sse9"), InvalidArgument);
}

TEST_CASE("every variant matches the scalar reference bit for bit") {
  const auto& ref = kernels::scalar_table();
  RngStream rng(11);
  for (const auto* table : kernels::available_tables()) {
    CAPTURE(table->name);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t p = 1 + rng.below(13), q = 1 + rng.below(13), r = 1 + rng.below(13);
      const auto a = draw(p * q, rng), b = draw(q * r, rng);
      std::vector<double> c_ref(p * r, 7.0), c(p * r, -7.0);
      ref.matmul(a.data(), b.data(), c_ref.data(), p, q, r);
      table->matmul(a.data(), b.data(), c.data(), p, q, r);
      REQUIRE(same_bits(c_ref, c));

      const std::size_t n = 1 + rng.below(37);
      const auto x = draw(n, rng), y = draw(n, rng);
      std::vector<double> o_ref(n), o(n);
      ref.add(x.data(), y.data(), o_ref.data(), n);
      table->add(x.data(), y.data(), o.data(), n);
      REQUIRE(same_bits(o_ref, o));
      ref.mul(x.data(), y.data(), o_ref.data(), n);
      table->mul(x.data(), y.data(), o.data(), n);
      REQUIRE(same_bits(o_ref, o));

      auto acc_ref = y, acc = y;
      ref.axpy(0.37, x.data(), acc_ref.data(), n);
      table->axpy(0.37, x.data(), acc.data(), n);
      REQUIRE(same_bits(acc_ref, acc));
      ref.accumulate(x.data(), acc_ref.data(), n);
      table->accumulate(x.data(), acc.data(), n);
      REQUIRE(same_bits(acc_ref, acc));

      const auto m = draw(p * r, rng), v = draw(p, rng);
      std::vector<double> rb_ref(p * r), rb(p * r);
      ref.add_row_bias(m.data(), v.data(), rb_ref.data(), p, r);
      table->add_row_bias(m.data(), v.data(), rb.data(), p, r);
      REQUIRE(same_bits(rb_ref, rb));

      auto w_ref = x, w = x;
      auto m1_ref = draw(n, rng), v1_ref = draw(n, rng);
      for (auto& e : v1_ref) e = e * e;
      auto m1 = m1_ref, v1 = v1_ref;
      ref.adam(w_ref.data(), y.data(), m1_ref.data(), v1_ref.data(), n, 1e-3, 0.9, 0.999, 1e-8, 0.1, 0.001);
      table->adam(w.data(), y.data(), m1.data(), v1.data(), n, 1e-3, 0.9, 0.999, 1e-8, 0.1, 0.001);
      REQUIRE(same_bits(w_ref, w));
      REQUIRE(same_bits(m1_ref, m1));
      REQUIRE(same_bits(v1_ref, v1));
    }
  }
}

TEST_CASE("active table can be switched and restored") {
  const auto original = kernels::active().name;
  kernels::select("scalar");
  CHECK(kernels::active().name == "scalar");
  kernels::select(original);
  CHECK(kernels::active().name == original);
}
