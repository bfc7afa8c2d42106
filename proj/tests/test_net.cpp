#include <doctest.h>

#include <random>
#include <sstream>

#include "hgrow/net.hpp"
#include "hgrow/serialize.hpp"
#include "support.hpp"

using namespace hgrow;
using namespace hgrow::testing;

namespace {

double at(const WeightSet& w, const Activation& act, std::initializer_list<double> x) {
  std::vector<double> v(x);
  return realize(w, act, v);
}

// Weights that are small multiples of 1/8 keep every intermediate exact.
WeightSet dyadic_weights(const Architecture& arch, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> k(-16, 16);
  std::vector<double> p(param_count(arch));
  for (double& v : p) v = k(rng) / 8.0;
  return WeightSet::from_vector(arch, p);
}

}  // namespace

TEST_CASE("param_count follows the width formula") {
  CHECK(param_count(Architecture({2, 3, 1})) == 13);
  CHECK(param_count(Architecture({2, 5, 5, 1})) == 51);
  CHECK(param_count(Architecture({10, 2, 2, 1})) == 31);
  CHECK(param_count(Architecture({4, 1})) == 5);
}

TEST_CASE("architecture validation") {
  CHECK_THROWS_AS(Architecture({3}), ShapeError);
  CHECK_THROWS_AS(Architecture({2, 0, 1}), ShapeError);
  CHECK_THROWS_AS(Architecture({2, 3, 2}), ShapeError);
  CHECK(Architecture({2, 3, 4, 1}).depth() == 2);
  CHECK(Architecture({2, 3, 4, 1}).last_hidden_width() == 4);
  CHECK_THROWS_AS(Activation(1.0), DomainError);
  CHECK_THROWS_AS(Activation(-0.1), DomainError);
}

TEST_CASE("canonical vectorization round trip") {
  std::mt19937_64 rng(1);
  const Architecture arch({3, 4, 2, 1});
  const WeightSet w = random_weights(arch, rng);
  const Vector v = w.to_vector();
  REQUIRE(static_cast<std::size_t>(v.size()) == param_count(arch));
  // Rows of W_0 come first, then B_0.
  CHECK(v[0] == w.layer(0).weight(0, 0));
  CHECK(v[1] == w.layer(0).weight(0, 1));
  CHECK(v[3] == w.layer(0).weight(1, 0));
  CHECK(v[12] == w.layer(0).bias[0]);
  CHECK(w.layer_offset(1) == 16);
  const WeightSet back = WeightSet::from_vector(arch, std::span<const double>(v.data(), v.size()));
  CHECK(back.to_vector() == v);
  std::vector<double> short_vec(5);
  CHECK_THROWS_AS(WeightSet::from_vector(arch, short_vec), ShapeError);
}

TEST_CASE("realize: constant network and shape errors") {
  const Architecture arch({2, 3, 1});
  std::vector<double> p(param_count(arch), 0.0);
  p.back() = 1.75;
  const WeightSet w = WeightSet::from_vector(arch, p);
  const Activation act;
  CHECK(at(w, act, {0.3, -4.0}) == 1.75);
  CHECK(at(w, act, {100.0, 2.0}) == 1.75);
  std::vector<double> bad{1.0};
  CHECK_THROWS_AS(realize(w, act, bad), ShapeError);
}

TEST_CASE("realize matches a hand computed leaky network") {
  // (1,2,1): h = phi(W0 x + B0), out = W1 h + B1.
  const Architecture arch({1, 2, 1});
  const std::vector<double> p{1.0, -1.0, 0.5, 0.5, 2.0, 3.0, -1.0};
  const WeightSet w = WeightSet::from_vector(arch, p);
  const Activation act(0.1);
  // x = 1: pre = (1.5, -0.5) -> (1.5, -0.05); out = 3 - 0.15 - 1.
  CHECK(at(w, act, {1.0}) == doctest::Approx(1.85).epsilon(1e-15));
}

TEST_CASE("batch and single realization agree") {
  std::mt19937_64 rng(2);
  const Architecture arch({3, 4, 4, 1});
  const WeightSet w = random_weights(arch, rng);
  const Activation act;
  const Matrix pts = random_points(3, 20, rng);
  const Vector batch = realize_batch(w, act, pts);
  for (int j = 0; j < 20; ++j) {
    std::vector<double> x(pts.col(j).data(), pts.col(j).data() + 3);
    CHECK(batch[j] == doctest::Approx(realize(w, act, x)).epsilon(1e-14));
  }
}

TEST_CASE("scale_weights: homogeneity") {
  std::mt19937_64 rng(3);
  const Activation act;
  SUBCASE("alpha zero gives exact zeros") {
    const WeightSet w = random_weights(Architecture({2, 4, 3, 1}), rng);
    CHECK(scale_weights(0.0, w).to_vector().isZero(0.0));
  }
  SUBCASE("alpha one is the identity") {
    const WeightSet w = random_weights(Architecture({2, 4, 3, 1}), rng);
    CHECK(scale_weights(1.0, w).to_vector() == w.to_vector());
  }
  SUBCASE("alpha 2.5 on (2,4,1)") {
    const WeightSet w = random_weights(Architecture({2, 4, 1}), rng);
    const WeightSet s = scale_weights(2.5, w);
    const Matrix pts = random_points(2, 100, rng);
    const Vector a = realize_batch(w, act, pts);
    const Vector b = realize_batch(s, act, pts);
    for (int j = 0; j < 100; ++j) CHECK(std::abs(b[j] - 2.5 * a[j]) <= 1e-12 * (1.0 + std::abs(2.5 * a[j])));
  }
  SUBCASE("exponents per layer") {
    const WeightSet w = random_weights(Architecture({1, 2, 2, 1}), rng);
    const WeightSet s = scale_weights(8.0, w);
    // d + 1 = 3: W_i scale by 2, B_i by 2^{i+1}.
    CHECK(s.layer(1).weight(0, 1) == doctest::Approx(2.0 * w.layer(1).weight(0, 1)));
    CHECK(s.layer(0).bias[0] == doctest::Approx(2.0 * w.layer(0).bias[0]));
    CHECK(s.layer(1).bias[0] == doctest::Approx(4.0 * w.layer(1).bias[0]));
    CHECK(s.layer(2).bias[0] == doctest::Approx(8.0 * w.layer(2).bias[0]));
  }
  SUBCASE("negative alpha is rejected") {
    CHECK_THROWS_AS(scale_weights(-0.5, random_weights(Architecture({1, 1, 1}), rng)), DomainError);
  }
}

TEST_CASE("direct_sum: widths, additivity and identity") {
  std::mt19937_64 rng(4);
  const Activation act;
  const WeightSet a = random_weights(Architecture({2, 3, 1}), rng);
  const WeightSet b = random_weights(Architecture({2, 2, 1}), rng);
  const WeightSet s = direct_sum(a, b);
  CHECK(s.arch() == Architecture({2, 5, 1}));
  CHECK(param_count(s.arch()) == 21);

  SUBCASE("dyadic weights are additive bit for bit") {
    const Architecture ax({2, 3, 2, 1}), bx({2, 1, 4, 1});
    for (int trial = 0; trial < 50; ++trial) {
      const WeightSet da = dyadic_weights(ax, rng), db = dyadic_weights(bx, rng);
      const WeightSet ds = direct_sum(da, db);
      std::uniform_int_distribution<int> k(-8, 8);
      for (int j = 0; j < 10; ++j) {
        std::vector<double> x{k(rng) / 4.0, k(rng) / 4.0};
        CHECK(realize(ds, Activation(0.0), x) == realize(da, Activation(0.0), x) + realize(db, Activation(0.0), x));
        CHECK(realize(ds, Activation(0.25), x) ==
              realize(da, Activation(0.25), x) + realize(db, Activation(0.25), x));
      }
    }
  }
  SUBCASE("zero summand leaves the realization unchanged") {
    const WeightSet z = direct_sum(a, WeightSet::zeros(a.arch()));
    const Matrix pts = random_points(2, 50, rng);
    const Vector lhs = realize_batch(z, act, pts), rhs = realize_batch(a, act, pts);
    for (int j = 0; j < 50; ++j) CHECK(rel_diff(lhs[j], rhs[j]) <= 1e-14);
  }
  SUBCASE("mismatched shapes") {
    CHECK_THROWS_AS(direct_sum(a, random_weights(Architecture({2, 3, 3, 1}), rng)), CompositionError);
    CHECK_THROWS_AS(direct_sum(a, random_weights(Architecture({3, 3, 1}), rng)), CompositionError);
  }
}

TEST_CASE("split_final_layer") {
  std::mt19937_64 rng(5);
  const Activation act;
  SUBCASE("group equal to the width returns a copy") {
    const WeightSet w = random_weights(Architecture({2, 3, 4, 1}), rng);
    const auto parts = split_final_layer(w, 4);
    REQUIRE(parts.size() == 1);
    CHECK(parts[0].to_vector() == w.to_vector());
  }
  SUBCASE("per-neuron split reconstructs the realization") {
    const WeightSet w = random_weights(Architecture({2, 3, 4, 1}), rng);
    const auto parts = split_final_layer(w, 1);
    REQUIRE(parts.size() == 4);
    for (const auto& p : parts) CHECK(p.arch() == Architecture({2, 3, 1, 1}));
    const Matrix pts = random_points(2, 100, rng);
    const Vector full = realize_batch(w, act, pts);
    Vector sum = Vector::Zero(100);
    for (const auto& p : parts) sum += realize_batch(p, act, pts);
    for (int j = 0; j < 100; ++j) CHECK(rel_diff(sum[j], full[j]) <= 1e-12);
  }
  SUBCASE("zero final matrix gives the shared bias constant") {
    WeightSet w = random_weights(Architecture({2, 6, 1}), rng);
    Vector v = w.to_vector();
    const std::size_t off = w.layer_offset(1);
    for (int k = 0; k < 6; ++k) v[off + k] = 0.0;
    w.assign(std::span<const double>(v.data(), v.size()));
    const auto parts = split_final_layer(w, 2);
    REQUIRE(parts.size() == 3);
    const double bias = w.layer(1).bias[0];
    for (const auto& p : parts) CHECK(at(p, act, {0.3, 0.9}) == doctest::Approx(bias / 3.0));
  }
  SUBCASE("group size must divide the width") {
    const WeightSet w = random_weights(Architecture({2, 5, 1}), rng);
    CHECK_THROWS_AS(split_final_layer(w, 2), PartitionError);
  }
}

TEST_CASE("hat_network") {
  const std::vector<double> e1{1.0};
  const WeightSet h = hat_network(0.0, 0.5, 1.0, e1);
  const Activation relu(0.0);
  CHECK(h.arch() == Architecture({1, 3, 1}));
  CHECK(at(h, relu, {0.5}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(at(h, relu, {0.25}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(at(h, relu, {-0.2}) == 0.0);
  CHECK(at(h, relu, {1.3}) == 0.0);

  const std::vector<double> diag{1.0, 1.0};
  const WeightSet h2 = hat_network(0.0, 0.5, 1.0, diag);
  CHECK(at(h2, relu, {0.25, 0.25}) == doctest::Approx(1.0).epsilon(1e-15));

  SUBCASE("zero below the support for any input") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const std::vector<double> dir{0.7, -1.3};
    const WeightSet hd = hat_network(-0.4, 0.1, 0.9, dir);
    int checked = 0;
    while (checked < 1000) {
      std::vector<double> x{u(rng), u(rng)};
      if (dir[0] * x[0] + dir[1] * x[1] > -0.4) continue;
      CHECK(realize(hd, relu, x) == 0.0);
      ++checked;
    }
  }
  SUBCASE("zero above the support") {
    // Above c the three active neurons cancel; the cancellation is exact
    // whenever every intermediate is representable, and within rounding
    // otherwise.
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> k(-24, 24);
    const std::vector<double> dir{0.75, -1.25};
    const WeightSet hd = hat_network(-0.5, 0.0, 0.5, dir);
    int checked = 0;
    while (checked < 1000) {
      std::vector<double> x{k(rng) / 8.0, k(rng) / 8.0};
      if (dir[0] * x[0] + dir[1] * x[1] < 0.5) continue;
      CHECK(realize(hd, relu, x) == 0.0);
      ++checked;
    }
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const std::vector<double> gdir{0.7, -1.3};
    const WeightSet hg = hat_network(-0.4, 0.1, 0.9, gdir);
    checked = 0;
    while (checked < 1000) {
      std::vector<double> x{u(rng), u(rng)};
      const double t = gdir[0] * x[0] + gdir[1] * x[1];
      if (t < 0.9) continue;
      CHECK(std::abs(realize(hg, relu, x)) <= 1e-14 * (1.0 + std::abs(t)));
      ++checked;
    }
  }
  CHECK_THROWS_AS(hat_network(0.5, 0.5, 1.0, e1), DomainError);
  CHECK_THROWS_AS(hat_network(0.0, 1.0, 0.5, e1), DomainError);
}

TEST_CASE("weight files round trip exactly") {
  std::mt19937_64 rng(7);
  const WeightSet w = random_weights(Architecture({3, 5, 2, 1}), rng);
  std::stringstream ss;
  write_network(ss, Activation(0.03), w);
  const StoredNetwork back = read_network(ss);
  CHECK(back.activation.delta_relu == 0.03);
  CHECK(back.weights.arch() == w.arch());
  CHECK(back.weights.to_vector() == w.to_vector());

  std::stringstream bad("not-a-weight-file\n");
  CHECK_THROWS(read_network(bad));
}
