#include "hgrow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace hgrow {

double c_opt_value(double objective_value, double loss) {
  if (!(loss > 0.0)) throw DegenerateError("zero loss: the network is already optimal on the data");
  return 2.0 * objective_value / std::sqrt(loss);
}

OptimalityReport c_opt(const WeightSet& w, const LossContext& ctx, const GrowthConfig& cfg,
                       std::uint64_t seed) {
  const Vector r = ctx.residual(w);
  OptimalityReport rep;
  rep.loss = ctx.norm_sq(r);
  if (!(rep.loss > 0.0)) throw DegenerateError("zero loss: the network is already optimal on the data");
  const ExtensionResult ext = wstar_search(r, ctx, cfg, seed);
  rep.objective_value = ext.objective_value;
  rep.restart_index = ext.restart_index;
  rep.ascent_iterations = ext.ascent_iterations;
  rep.c_opt = std::clamp(c_opt_value(ext.objective_value, rep.loss), 0.0, 2.0);
  for (double l : {1.0, 2.0, 5.0, 10.0}) {
    const double c2 = rep.c_opt * rep.c_opt;
    const double bound = c2 > 0.0 ? 1.0 / (16.0 * l * l * c2) : std::numeric_limits<double>::infinity();
    rep.size_ratio_bounds.push_back({l, bound});
  }
  rep.implied_size_ratio_bound = rep.size_ratio_bounds.front().max_size_ratio;
  return rep;
}

StabilityReport stability_constant(std::span<const Vector> responses, const LossContext& ctx) {
  if (responses.empty()) throw DomainError("stability of an empty decomposition");
  StabilityReport rep;
  rep.part_count = responses.size();
  Vector sum = Vector::Zero(ctx.samples());
  Vector sq(static_cast<Eigen::Index>(responses.size()));
  for (std::size_t j = 0; j < responses.size(); ++j) {
    const double n2 = ctx.norm_sq(responses[j]);
    rep.part_norms.push_back(std::sqrt(n2));
    sq[static_cast<Eigen::Index>(j)] = n2;
    sum += responses[j];
  }
  rep.aggregate_norm = ctx.norm(sum);
  if (!(rep.aggregate_norm > 0.0)) {
    throw DegenerateError("the parts cancel exactly; no finite stability constant exists");
  }
  rep.l_constant = std::sqrt(compensated_sum(sq)) / rep.aggregate_norm;
  return rep;
}

StabilityReport stability_constant(std::span<const WeightSet> parts, const LossContext& ctx) {
  std::vector<Vector> z;
  z.reserve(parts.size());
  for (const WeightSet& p : parts) z.push_back(ctx.response(p));
  return stability_constant(std::span<const Vector>(z), ctx);
}

StabilityReport network_stability(const WeightSet& w, int group_size, const LossContext& ctx) {
  const std::vector<WeightSet> parts = split_final_layer(w, group_size);
  StabilityReport rep = stability_constant(std::span<const WeightSet>(parts), ctx);
  const double lhs = static_cast<double>(parts.size() * param_count(parts.front().arch()));
  rep.size_condition = lhs <= rep.l_constant * static_cast<double>(w.size());
  return rep;
}

IndependenceCheck independence_bound_check(std::span<const Vector> responses, const Vector& probe,
                                           const LossContext& ctx) {
  IndependenceCheck out;
  double best = 0.0;
  for (const Vector& z : responses) {
    const double nz = ctx.norm(z);
    if (!(nz > 0.0)) throw DegenerateError("a part has zero response");
    best = std::max(best, std::abs(ctx.dot(probe, z)) / nz);
  }
  const StabilityReport st = stability_constant(responses, ctx);
  Vector sum = Vector::Zero(ctx.samples());
  for (const Vector& z : responses) sum += z;
  out.l_constant = st.l_constant;
  out.lhs = std::abs(ctx.dot(probe, sum)) / st.aggregate_norm;
  out.rhs = st.l_constant * std::sqrt(static_cast<double>(responses.size())) * best;
  // Allow for rounding in the two sides' evaluation.
  out.holds = out.lhs <= out.rhs * (1.0 + 1e-12) + 1e-300;
  return out;
}

double stationarity_identity_residual(const WeightSet& w0, const WeightSet& w_ell, const LossContext& ctx,
                                      double eps) {
  const Vector z0 = ctx.response(w0);
  const Vector zl = ctx.response(w_ell);
  const Vector r0 = ctx.responses() - z0;
  const Vector rl = ctx.responses() - zl;
  const double l0 = ctx.norm_sq(r0);
  const double ll = ctx.norm_sq(rl);
  const double change = ctx.norm_sq(zl - z0);
  return std::abs(change - (l0 - ll)) / std::max(l0, eps);
}

DomainSampler uniform_cube_sampler(double lo, double hi) {
  return [lo, hi](std::mt19937_64& rng, std::span<double> x) {
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& v : x) v = u(rng);
  };
}

double generalization_estimate(const WeightSet& w, const Activation& act, const TargetFn& target,
                               const DomainSampler& sampler, std::size_t m, std::uint64_t seed) {
  if (m == 0) throw DomainError("generalization estimate needs at least one sample");
  constexpr std::size_t shard = 4096;
  const auto dim = static_cast<Eigen::Index>(w.arch().input_width());
  Vector shard_sums(static_cast<Eigen::Index>((m + shard - 1) / shard));
  for (std::size_t s = 0; s * shard < m; ++s) {
    const std::size_t count = std::min(shard, m - s * shard);
    std::mt19937_64 rng(derive_seed(seed, 0x6e4, s));
    Matrix pts(dim, static_cast<Eigen::Index>(count));
    Vector y(static_cast<Eigen::Index>(count));
    for (std::size_t j = 0; j < count; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      sampler(rng, {pts.col(jj).data(), static_cast<std::size_t>(dim)});
      y[jj] = target({pts.col(jj).data(), static_cast<std::size_t>(dim)});
    }
    const Vector err = realize_batch(w, act, pts) - y;
    shard_sums[static_cast<Eigen::Index>(s)] = compensated_sum(err.cwiseProduct(err));
  }
  return compensated_sum(shard_sums) / static_cast<double>(m);
}

double generalization_quadrature(const WeightSet& w, const Activation& act, const TargetFn& target,
                                 double lo, double hi, int per_axis) {
  const int dim = w.arch().input_width();
  if (dim > 3) throw DomainError("quadrature grids are provided for up to three inputs");
  if (per_axis < 1 || !(hi > lo)) throw DomainError("invalid quadrature grid");
  std::size_t total = 1;
  for (int k = 0; k < dim; ++k) total *= static_cast<std::size_t>(per_axis);
  const double h = (hi - lo) / per_axis;
  Matrix pts(dim, static_cast<Eigen::Index>(total));
  Vector y(static_cast<Eigen::Index>(total));
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    const auto c = static_cast<Eigen::Index>(idx);
    for (int k = 0; k < dim; ++k) {
      pts(k, c) = lo + (static_cast<double>(rest % static_cast<std::size_t>(per_axis)) + 0.5) * h;
      rest /= static_cast<std::size_t>(per_axis);
    }
    y[c] = target({pts.col(c).data(), static_cast<std::size_t>(dim)});
  }
  const Vector err = realize_batch(w, act, pts) - y;
  return compensated_sum(err.cwiseProduct(err)) / static_cast<double>(total);
}

LayerConstants layer_constants(const WeightSet& w, const LossContext& ctx) {
  LayerConstants out;
  for (const Layer& l : w.layers()) {
    out.c_w = std::max({out.c_w, l.weight.cwiseAbs().maxCoeff(), l.bias.cwiseAbs().maxCoeff()});
  }
  const auto& layers = w.layers();
  Matrix h = ctx.plan().points;
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    Matrix pre = layers[i].weight * h;
    pre.colwise() += layers[i].bias;
    ctx.activation().apply(pre);
    out.neuron_max.push_back(pre.size() > 0 ? pre.cwiseAbs().maxCoeff() : 0.0);
    h = std::move(pre);
  }
  for (double v : out.neuron_max) out.c_stab = std::max(out.c_stab, v);
  return out;
}

double perturbation_amplification(std::span<const Vector> responses, const Matrix& perturbation,
                                  const LossContext& ctx) {
  if (perturbation.cols() != static_cast<Eigen::Index>(responses.size()) ||
      perturbation.rows() != ctx.samples()) {
    throw ShapeError("perturbation must have one column per part and one row per sample");
  }
  Vector sum = Vector::Zero(ctx.samples());
  for (const Vector& z : responses) sum += z;
  const double base = ctx.norm(sum);
  if (!(base > 0.0)) throw DegenerateError("the parts cancel exactly");
  return ctx.norm(perturbation.rowwise().sum()) / base;
}

Matrix positive_perturbation(std::span<const Vector> responses, double eps, const LossContext& ctx,
                             std::uint64_t seed) {
  const auto n = ctx.samples();
  const auto w = static_cast<Eigen::Index>(responses.size());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  Matrix e(n, w);
  double zf = 0.0;
  for (Eigen::Index j = 0; j < w; ++j) {
    zf += ctx.norm_sq(responses[static_cast<std::size_t>(j)]);
    for (Eigen::Index i = 0; i < n; ++i) e(i, j) = u(rng);
  }
  double ef = 0.0;
  for (Eigen::Index j = 0; j < w; ++j) ef += ctx.norm_sq(e.col(j));
  e *= eps * std::sqrt(zf / ef);
  return e;
}

}  // namespace hgrow
