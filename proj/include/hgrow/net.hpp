#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hgrow/errors.hpp"

namespace hgrow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Layer widths (w_0, ..., w_{d+1}) of a dense scalar-output network.
// Depth d is the number of hidden transitions and is derived from the widths.
class Architecture {
 public:
  explicit Architecture(std::vector<int> widths);

  const std::vector<int>& widths() const { return widths_; }
  int width(std::size_t i) const { return widths_.at(i); }
  int depth() const { return static_cast<int>(widths_.size()) - 2; }
  int input_width() const { return widths_.front(); }
  // Width w_d of the last hidden layer (the input width when d == 0).
  int last_hidden_width() const { return widths_[widths_.size() - 2]; }
  std::size_t layer_count() const { return widths_.size() - 1; }

  bool operator==(const Architecture&) const = default;

 private:
  std::vector<int> widths_;
};

// Number of trainable parameters, sum_i (w_i + 1) w_{i+1}.
std::size_t param_count(const Architecture& arch);

// Leaky-ReLU phi(x) = max(x, delta * x), positively homogeneous of degree one.
struct Activation {
  double delta_relu = 0.01;

  explicit Activation(double delta = 0.01);

  double operator()(double x) const { return x >= 0.0 ? x : delta_relu * x; }
  // Right derivative: slope 1 at the kink.
  double slope(double x) const { return x >= 0.0 ? 1.0 : delta_relu; }

  void apply(Matrix& m) const;
};

struct Layer {
  Matrix weight;  // w_{i+1} x w_i
  Vector bias;    // w_{i+1}
};

// Evaluates an arbitrary stack of layers on the columns of `points`. The
// activation is applied between layers but not after the last one.
Matrix forward_layers(std::span<const Layer> layers, const Activation& act, const Matrix& points);

// Weights (W_0, B_0, ..., W_d, B_d) conforming to an Architecture.
//
// The canonical vectorization is layer by layer: the rows of W_i in order,
// followed by B_i. Gradients, masks and serialization all use this order.
class WeightSet {
 public:
  WeightSet(Architecture arch, std::vector<Layer> layers);

  static WeightSet zeros(const Architecture& arch);
  static WeightSet from_vector(const Architecture& arch, std::span<const double> params);

  const Architecture& arch() const { return arch_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  std::size_t size() const { return param_count(arch_); }

  Vector to_vector() const;
  // Overwrites every parameter from a canonical vector of matching length.
  void assign(std::span<const double> params);

  // Offset of layer i's first weight inside the canonical vector.
  std::size_t layer_offset(std::size_t i) const;

 private:
  Architecture arch_;
  std::vector<Layer> layers_;
};

// R(x, W) for a single input.
double realize(const WeightSet& w, const Activation& act, std::span<const double> x);
// R(p_j, W) for every column p_j of `points` (w_0 x m).
Vector realize_batch(const WeightSet& w, const Activation& act, const Matrix& points);

// Forward evaluation that keeps the intermediate values needed for
// backpropagation. The WeightSet must outlive the pass.
class ForwardPass {
 public:
  ForwardPass(const WeightSet& w, const Activation& act, const Matrix& points);

  // R(p_j, W) for every point.
  Vector outputs() const { return pre_.back().row(0).transpose(); }
  // sum_j upstream_j * dR(p_j, W)/dW in canonical order.
  Vector backward(const Vector& upstream) const;

 private:
  const WeightSet& w_;
  Activation act_;
  std::vector<Matrix> pre_;     // pre-activation of each layer
  std::vector<Matrix> inputs_;  // input fed to each layer
};

// sum_j upstream_j * dR(p_j, W)/dW in canonical order.
Vector realization_gradient(const WeightSet& w, const Activation& act, const Matrix& points,
                            const Vector& upstream);

// Gradient for an arbitrary layer stack with vector output:
// sum_j upstream(:, j) . d out(p_j) / d theta, in canonical order.
Vector layers_gradient(std::span<const Layer> layers, const Activation& act, const Matrix& points,
                       const Matrix& upstream);

// alpha W with R(alpha W) = alpha R(W); W_i scales by alpha^{1/(d+1)} and
// B_i by alpha^{(i+1)/(d+1)}, so alpha = 0 yields the zero vector.
WeightSet scale_weights(double alpha, const WeightSet& w);

// Block merge realizing R(a (+) b) = R(a) + R(b). Stacks first-layer rows,
// places middle layers block-diagonally, concatenates the final layer's
// columns and adds the output biases.
WeightSet direct_sum(const WeightSet& a, const WeightSet& b);

// Splits the last hidden layer into contiguous groups of `group_size`
// neurons. The output bias is shared equally among the parts so that the
// parts' realizations sum to the original.
std::vector<WeightSet> split_final_layer(const WeightSet& w, int group_size);

// Hat function of direction . x with support (a, c) and peak 1 at b,
// architecture (w_0, 3, 1). Exact for delta_relu = 0; with a leaky slope the
// tails are linear instead of zero.
WeightSet hat_network(double a, double b, double c, std::span<const double> direction);

}  // namespace hgrow
