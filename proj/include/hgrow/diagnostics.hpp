#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "hgrow/growth.hpp"

namespace hgrow {

struct SizeRatioBound {
  double assumed_l;
  // Extensions with #chi / #chi* at most this value cannot reduce the loss
  // to below half of its current value: 1 / (16 L^2 C_opt^2).
  double max_size_ratio;
};

struct OptimalityReport {
  double c_opt = 0.0;
  double objective_value = 0.0;
  double loss = 0.0;
  std::size_t restart_index = 0;
  int ascent_iterations = 0;
  std::vector<SizeRatioBound> size_ratio_bounds;  // for L in {1, 2, 5, 10}
  // The bound for assumed_l = 1.
  double implied_size_ratio_bound = 0.0;
};

// 2 * objective / sqrt(loss).
double c_opt_value(double objective_value, double loss);

// Runs the extension search on w's residual and reports the indicator.
// Throws DegenerateError when the loss is already zero.
OptimalityReport c_opt(const WeightSet& w, const LossContext& ctx, const GrowthConfig& cfg,
                       std::uint64_t seed);

struct StabilityReport {
  double l_constant = 0.0;
  std::size_t part_count = 0;
  std::vector<double> part_norms;
  double aggregate_norm = 0.0;
  // w* #chi* <= L #chi; only meaningful when filled by network_stability.
  bool size_condition = true;
};

// L = sqrt(sum |z_j|^2) / |sum z_j| for the parts' responses z_j.
// Throws DegenerateError when the parts cancel exactly.
StabilityReport stability_constant(std::span<const Vector> responses, const LossContext& ctx);
StabilityReport stability_constant(std::span<const WeightSet> parts, const LossContext& ctx);

// Splits w's last hidden layer into groups of `group_size` neurons and
// measures the decomposition. The size condition is flagged, never enforced.
StabilityReport network_stability(const WeightSet& w, int group_size, const LossContext& ctx);

struct IndependenceCheck {
  double lhs = 0.0;  // |y . sum z_j| / |sum z_j|
  double rhs = 0.0;  // L sqrt(w) max_j |y . z_j| / |z_j|
  double l_constant = 0.0;
  bool holds = false;
};

IndependenceCheck independence_bound_check(std::span<const Vector> responses, const Vector& probe,
                                           const LossContext& ctx);

// | |HR(W_l) - HR(W_0)|^2 - (L(W_0) - L(W_l)) | / max(L(W_0), eps).
double stationarity_identity_residual(const WeightSet& w0, const WeightSet& w_ell, const LossContext& ctx,
                                      double eps = 1e-300);

using TargetFn = std::function<double(std::span<const double>)>;
using DomainSampler = std::function<void(std::mt19937_64&, std::span<double>)>;

// Uniform sampler on [lo, hi]^dim.
DomainSampler uniform_cube_sampler(double lo = 0.0, double hi = 1.0);

// Monte-Carlo estimate of the integral of |R(x, W) - target(x)|^2 over the
// sampler's measure from m fresh points. Shards of fixed size draw from
// independent seeds so the value does not depend on scheduling.
double generalization_estimate(const WeightSet& w, const Activation& act, const TargetFn& target,
                               const DomainSampler& sampler, std::size_t m, std::uint64_t seed);

// Midpoint rule on [lo, hi]^w_0 with `per_axis` cells per axis (w_0 <= 3).
double generalization_quadrature(const WeightSet& w, const Activation& act, const TargetFn& target,
                                 double lo, double hi, int per_axis);

struct LayerConstants {
  // max |(W_k)_ij|, |(B_k)_i| over every layer.
  double c_w = 0.0;
  // max over layers k and points of the largest neuron magnitude after the
  // activation; per layer in `neuron_max`.
  double c_stab = 0.0;
  std::vector<double> neuron_max;
};

LayerConstants layer_constants(const WeightSet& w, const LossContext& ctx);

// Relative output change |E 1| / |Z 1| when the parts' responses Z (columns)
// are perturbed by E.
double perturbation_amplification(std::span<const Vector> responses, const Matrix& perturbation,
                                  const LossContext& ctx);

// An entrywise positive perturbation with |E|_F = eps |Z|_F in the weighted norm.
Matrix positive_perturbation(std::span<const Vector> responses, double eps, const LossContext& ctx,
                             std::uint64_t seed);

}  // namespace hgrow
