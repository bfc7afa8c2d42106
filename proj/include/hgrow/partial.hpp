#pragma once

#include <cstdint>
#include <vector>

#include "hgrow/growth.hpp"

namespace hgrow {

// Splits w into its first `count` layers and the rest.
std::vector<Layer> leading_layers(const WeightSet& w, std::size_t count);
WeightSet trailing_network(const WeightSet& w, std::size_t first_layer);

// Grows only the last d' + 1 layers. The data are mapped through the frozen
// front layers (activation included), inner_extend runs on the back network
// and the result is reassembled. The returned weights are the full network.
InnerResult partial_final_layers(const WeightSet& w, int d_prime, const LossContext& ctx,
                                 const GrowthConfig& cfg, const OptimConfig& opt, std::uint64_t seed);

// First-order model of the loss in the front layers W'' = (W_0, B_0, ..., W_d', B_d').
//
// With P(x) the front output (before the activation feeding the back part)
// and g_j the back part's gradient at P0(p_j), the surrogate is
// |y~ - H~ P|^2 where (H~ P)_i = sum_j coeff_j g_j . P(p_j) and
// y~ = r + H~ P0. Its value and gradient agree with the true loss at P0.
struct LinearizedPrefix {
  Vector responses;       // modified responses y~
  Vector point_weights;   // unchanged gamma
  Matrix sensitivity;     // g_j as columns, one per evaluation point
  EvalPlan plan;          // the original evaluation plan
  std::vector<Layer> prefix;
  Activation act;
};

// Requires 0 <= d' < d.
LinearizedPrefix first_layers_modified_data(const WeightSet& w, int d_prime, const LossContext& ctx);

// Surrogate data as a TrainingSet over the evaluation points, usable when H
// is the identity (one point per sample).
TrainingSet surrogate_training_set(const LinearizedPrefix& lp);

// Surrogate loss and gradient (canonical order over the prefix layers) for
// any front layers with the base prefix's output width.
double surrogate_loss(const LinearizedPrefix& lp, std::span<const Layer> prefix);
Vector surrogate_gradient(const LinearizedPrefix& lp, std::span<const Layer> prefix);

// Context for growing front output unit k: a scalar network whose
// contribution enters the surrogate through the weights g_{jk}, with the
// current surrogate residual as responses.
LossContext output_unit_context(const LinearizedPrefix& lp, std::span<const Layer> prefix, int k);

}  // namespace hgrow
