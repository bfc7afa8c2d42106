#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "hgrow/net.hpp"

namespace hgrow {

// Inputs x_i (columns of a w_0 x n matrix), responses y_i and point weights
// gamma_i >= 0 summing to one.
struct TrainingSet {
  Matrix inputs;
  Vector responses;
  Vector point_weights;

  int size() const { return static_cast<int>(responses.size()); }
  int input_width() const { return static_cast<int>(inputs.rows()); }
};

// Validates and builds a TrainingSet; missing weights default to 1/n.
TrainingSet make_training_set(Matrix inputs, Vector responses,
                              std::optional<Vector> point_weights = std::nullopt);

// CSV with header x_1..x_k,y[,gamma].
TrainingSet read_training_csv(const std::filesystem::path& path);
void write_training_csv(const std::filesystem::path& path, const TrainingSet& ts);

// The linear output operator H applied to a realization before sampling.
class LossSpec {
 public:
  enum class Kind { identity, diagonal, directional_derivative };

  static LossSpec identity();
  // (HF)(x_i) = h_i F(x_i).
  static LossSpec diagonal(Vector factors);
  // Central difference (F(x + s v) - F(x - s v)) / (2 s). Approximate: it is
  // excluded from identities that hold bit-for-bit.
  static LossSpec directional_derivative(Vector direction, double step = 1e-5);

  Kind kind() const { return kind_; }
  const Vector& factors() const { return factors_; }
  const Vector& direction() const { return direction_; }
  double step() const { return step_; }

 private:
  LossSpec() = default;
  Kind kind_ = Kind::identity;
  Vector factors_;
  Vector direction_;
  double step_ = 0.0;
};

// H expressed as point evaluations: (HF)_i = sum_{j : owner[j] == i} coeff[j] F(points[:, j]).
// Every linear operator this library supports has this form, which lets
// responses and gradients share one batched forward pass.
struct EvalPlan {
  Matrix points;
  std::vector<int> owner;
  Vector coeff;
  int samples = 0;

  // Collapses per-point values into per-sample responses.
  Vector gather(const Vector& point_values) const;
  // Spreads per-sample coefficients back onto the points (the adjoint of gather).
  Vector scatter(const Vector& sample_coeffs) const;
};

EvalPlan build_plan(const TrainingSet& ts, const LossSpec& spec);

// Sum with Kahan compensation.
double compensated_sum(const Vector& terms);

// Everything needed to evaluate L(F) = |y - HF|^2 for networks with a fixed
// input width: data, operator and activation.
class LossContext {
 public:
  LossContext(TrainingSet ts, LossSpec spec, Activation act);
  // A context whose evaluation points are precomputed (e.g. inputs mapped
  // through a frozen prefix).
  LossContext(Vector responses, Vector point_weights, EvalPlan plan, Activation act);

  const Vector& responses() const { return responses_; }
  const Vector& point_weights() const { return weights_; }
  const EvalPlan& plan() const { return plan_; }
  const Activation& activation() const { return act_; }
  int samples() const { return static_cast<int>(responses_.size()); }
  int input_width() const { return static_cast<int>(plan_.points.rows()); }

  // gamma-weighted inner product and squared norm, compensated.
  double dot(const Vector& a, const Vector& b) const;
  double norm_sq(const Vector& a) const;
  double norm(const Vector& a) const;

  // H R(W) sampled at the training inputs.
  Vector response(const WeightSet& w) const;
  Vector residual(const WeightSet& w) const { return responses_ - response(w); }
  double loss(const WeightSet& w) const { return norm_sq(residual(w)); }

  // sum_i c_i d(H R(W))_i / dW in canonical order.
  Vector response_gradient(const WeightSet& w, const Vector& sample_coeffs) const;
  // Gradient of the loss with respect to all parameters.
  Vector loss_gradient(const WeightSet& w) const;
  // Loss and gradient from a single forward pass.
  double loss_and_gradient(const WeightSet& w, Vector& grad) const;

  // Same operator and weights restricted to a subset of samples; weights are
  // renormalized to sum to one.
  LossContext restricted(const std::vector<int>& sample_indices) const;
  // Same responses and weights with every evaluation point mapped through `map`.
  LossContext mapped(const std::function<Matrix(const Matrix&)>& map) const;
  // Same points and operator with different responses.
  LossContext with_responses(Vector responses) const;

 private:
  Vector responses_;
  Vector weights_;
  EvalPlan plan_;
  Activation act_;
};

// Free-function forms of the core loss operations.
Vector response_vector(const WeightSet& w, const LossContext& ctx);
double loss(const WeightSet& w, const LossContext& ctx);

// Both sides of L(F + aG) - L(F) = -2a (y - HF).HG + a^2 |HG|^2.
struct QuadraticExpansion {
  double loss_delta;  // L(F + aG) - L(F), computed directly from F (+) aG
  double inner_term;  // (y - HF) . HG
  double norm_term;   // |HG|^2
};
QuadraticExpansion quadratic_expansion(const WeightSet& f, const WeightSet& g, double alpha,
                                       const LossContext& ctx);

// Weighted cosine between a residual and a candidate response.
double alignment(const Vector& residual, const Vector& candidate, const LossContext& ctx);

}  // namespace hgrow
