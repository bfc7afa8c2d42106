#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "hgrow/diagnostics.hpp"
#include "hgrow/growth.hpp"
#include "hgrow/loss.hpp"
#include "hgrow/net.hpp"

namespace hgrow::testing {

inline Architecture random_arch(std::mt19937_64& rng, int max_in, int max_width, int max_depth) {
  std::uniform_int_distribution<int> in(1, max_in);
  std::uniform_int_distribution<int> width(1, max_width);
  std::uniform_int_distribution<int> depth(1, max_depth);
  std::vector<int> w{in(rng)};
  const int d = depth(rng);
  for (int i = 0; i < d; ++i) w.push_back(width(rng));
  w.push_back(1);
  return Architecture(w);
}

inline WeightSet random_weights(const Architecture& arch, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> p(param_count(arch));
  for (double& v : p) v = nd(rng);
  return WeightSet::from_vector(arch, p);
}

inline Matrix random_points(int dim, int n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(dim, n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < dim; ++k) m(k, j) = u(rng);
  }
  return m;
}

inline Vector random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

// Strictly positive weights summing to one.
inline Vector random_point_weights(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  Vector g(n);
  for (int i = 0; i < n; ++i) g[i] = u(rng);
  return g / g.sum();
}

inline LossContext random_context(int dim, int n, std::mt19937_64& rng, double delta = 0.01) {
  TrainingSet ts = make_training_set(random_points(dim, n, rng), random_vector(n, rng), random_point_weights(n, rng));
  return LossContext(std::move(ts), LossSpec::identity(), Activation(delta));
}

inline double rel_diff(double a, double b) {
  const double s = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / s;
}

// Central finite differences of f at x.
template <class F>
Vector fd_gradient(F&& f, const Vector& x, double h) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = xp[i];
    xp[i] = orig + h;
    const double fp = f(xp);
    xp[i] = orig - h;
    const double fm = f(xp);
    xp[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Smallest |pre-activation| over every hidden neuron and point.
inline double kink_distance(const WeightSet& w, const Activation& act, const Matrix& points) {
  double best = std::numeric_limits<double>::infinity();
  Matrix h = points;
  const auto& layers = w.layers();
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    Matrix pre = layers[i].weight * h;
    pre.colwise() += layers[i].bias;
    best = std::min(best, pre.cwiseAbs().minCoeff());
    act.apply(pre);
    h = std::move(pre);
  }
  return best;
}

struct StationarityRun {
  double residual = 0.0;
  double final_grad_norm = 0.0;
  bool reached = false;
  int epochs = 0;
};

// One extension of a (1,2,1) host on data planted as host + (1,2,1) block,
// with every train phase run by gradient descent down to `grad_tol`.
inline StationarityRun stationarity_run(double grad_tol, std::uint64_t seed = 4) {
  std::mt19937_64 rng(seed);
  const Architecture arch({1, 2, 1});
  const WeightSet host = random_weights(arch, rng);
  const WeightSet block = random_weights(arch, rng);
  const int n = 32;
  Matrix x(1, n);
  for (int i = 0; i < n; ++i) x(0, i) = (i + 0.5) / n;
  const Activation act;
  const Vector y = realize_batch(host, act, x) + realize_batch(block, act, x);
  const LossContext ctx(make_training_set(x, y), LossSpec::identity(), act);

  GrowthConfig cfg;
  cfg.star_arch = arch;
  cfg.l_max = 1;
  cfg.c_opt_exit = 0.0;
  cfg.search_restarts = 16;
  cfg.search_ascent_steps = 100;
  OptimConfig opt;
  opt.method = OptimMethod::gradient_descent;
  opt.learning_rate = 0.1;
  opt.max_epochs = 2000000;
  opt.stall_window = 2000000;
  opt.grad_tol = grad_tol;
  const InnerResult r = inner_extend(host, ctx, cfg, opt, seed);

  StationarityRun out;
  out.residual = stationarity_identity_residual(host, r.weights, ctx);
  out.final_grad_norm = r.segments.back().final_grad_norm;
  out.reached = r.segments.back().reached_grad_tol;
  out.epochs = r.epochs;
  return out;
}

}  // namespace hgrow::testing
