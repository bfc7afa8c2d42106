#include "hgrow/partial.hpp"

#include <cmath>

#include <fmt/format.h>

namespace hgrow {

std::vector<Layer> leading_layers(const WeightSet& w, std::size_t count) {
  if (count > w.layers().size()) throw ShapeError("asked for more layers than the network has");
  return {w.layers().begin(), w.layers().begin() + static_cast<std::ptrdiff_t>(count)};
}

WeightSet trailing_network(const WeightSet& w, std::size_t first_layer) {
  const auto& widths = w.arch().widths();
  if (first_layer >= w.layers().size()) throw ShapeError("trailing network would be empty");
  std::vector<int> tail(widths.begin() + static_cast<std::ptrdiff_t>(first_layer), widths.end());
  std::vector<Layer> layers(w.layers().begin() + static_cast<std::ptrdiff_t>(first_layer), w.layers().end());
  return WeightSet(Architecture(std::move(tail)), std::move(layers));
}

namespace {

WeightSet concat(std::vector<Layer> front, const WeightSet& back) {
  std::vector<int> widths;
  widths.push_back(static_cast<int>(front.front().weight.cols()));
  for (const Layer& l : front) widths.push_back(static_cast<int>(l.weight.rows()));
  for (std::size_t i = 1; i < back.arch().widths().size(); ++i) widths.push_back(back.arch().widths()[i]);
  for (const Layer& l : back.layers()) front.push_back(l);
  return WeightSet(Architecture(std::move(widths)), std::move(front));
}

}  // namespace

InnerResult partial_final_layers(const WeightSet& w, int d_prime, const LossContext& ctx,
                                 const GrowthConfig& cfg, const OptimConfig& opt, std::uint64_t seed) {
  const int d = w.arch().depth();
  if (d_prime < 1 || d_prime >= d) {
    throw DomainError(fmt::format("final-layer growth needs 1 <= d' < d, got d' = {}, d = {}", d_prime, d));
  }
  const auto split = static_cast<std::size_t>(d - d_prime);
  std::vector<Layer> front = leading_layers(w, split);
  const WeightSet back = trailing_network(w, split);
  const Activation act = ctx.activation();

  const LossContext inner_ctx = ctx.mapped([&](const Matrix& pts) {
    Matrix h = forward_layers(front, act, pts);
    act.apply(h);
    return h;
  });
  InnerResult res = inner_extend(back, inner_ctx, cfg, opt, seed);
  res.weights = concat(std::move(front), res.weights);
  return res;
}

LinearizedPrefix first_layers_modified_data(const WeightSet& w, int d_prime, const LossContext& ctx) {
  const int d = w.arch().depth();
  if (d_prime < 0 || d_prime >= d) {
    throw DomainError(fmt::format("front-layer linearization needs 0 <= d' < d, got d' = {}, d = {}", d_prime, d));
  }
  const Activation act = ctx.activation();
  const EvalPlan& plan = ctx.plan();
  const auto split = static_cast<std::size_t>(d_prime + 1);

  LinearizedPrefix lp{Vector(), ctx.point_weights(), Matrix(), plan, leading_layers(w, split), act};
  const WeightSet back = trailing_network(w, split);

  // Forward through the back part on phi(P0), keeping pre-activations.
  const Matrix u = forward_layers(lp.prefix, act, plan.points);
  const auto& layers = back.layers();
  std::vector<Matrix> pre(layers.size());
  Matrix h = u;
  act.apply(h);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    pre[i] = layers[i].weight * h;
    pre[i].colwise() += layers[i].bias;
    if (i + 1 < layers.size()) {
      h = pre[i];
      act.apply(h);
    }
  }
  // Backward to the input of the back part, then through the activation on u.
  Matrix delta = Matrix::Ones(1, u.cols());
  for (std::size_t ii = layers.size(); ii-- > 0;) {
    Matrix back_delta = layers[ii].weight.transpose() * delta;
    const Matrix& z = ii == 0 ? u : pre[ii - 1];
    for (Eigen::Index c = 0; c < back_delta.cols(); ++c) {
      for (Eigen::Index r = 0; r < back_delta.rows(); ++r) back_delta(r, c) *= act.slope(z(r, c));
    }
    delta = std::move(back_delta);
  }
  if (!delta.allFinite()) throw NumericError("back-part derivative is not finite");
  lp.sensitivity = std::move(delta);

  const Vector base_values = pre.back().row(0).transpose();
  const Vector r = ctx.responses() - plan.gather(base_values);
  const Vector linear = (lp.sensitivity.cwiseProduct(u)).colwise().sum().transpose();
  lp.responses = r + plan.gather(linear);
  return lp;
}

TrainingSet surrogate_training_set(const LinearizedPrefix& lp) {
  const auto m = lp.plan.points.cols();
  bool identity = m == lp.plan.samples;
  for (Eigen::Index j = 0; identity && j < m; ++j) {
    identity = lp.plan.owner[static_cast<std::size_t>(j)] == j && lp.plan.coeff[j] == 1.0;
  }
  if (!identity) throw DomainError("surrogate training set needs one unit-weight point per sample");
  return make_training_set(lp.plan.points, lp.responses, lp.point_weights);
}

namespace {

Vector surrogate_response(const LinearizedPrefix& lp, std::span<const Layer> prefix) {
  const Matrix p = forward_layers(prefix, lp.act, lp.plan.points);
  if (p.rows() != lp.sensitivity.rows()) {
    throw ShapeError(fmt::format("front output width {} differs from the linearization's {}", p.rows(),
                                 lp.sensitivity.rows()));
  }
  return lp.plan.gather((lp.sensitivity.cwiseProduct(p)).colwise().sum().transpose());
}

}  // namespace

double surrogate_loss(const LinearizedPrefix& lp, std::span<const Layer> prefix) {
  const Vector r = lp.responses - surrogate_response(lp, prefix);
  return compensated_sum(lp.point_weights.cwiseProduct(r.cwiseProduct(r)));
}

Vector surrogate_gradient(const LinearizedPrefix& lp, std::span<const Layer> prefix) {
  const Vector r = lp.responses - surrogate_response(lp, prefix);
  const Vector q = lp.plan.scatter(-2.0 * lp.point_weights.cwiseProduct(r));
  Matrix upstream = lp.sensitivity;
  for (Eigen::Index j = 0; j < upstream.cols(); ++j) upstream.col(j) *= q[j];
  return layers_gradient(prefix, lp.act, lp.plan.points, upstream);
}

LossContext output_unit_context(const LinearizedPrefix& lp, std::span<const Layer> prefix, int k) {
  if (k < 0 || k >= lp.sensitivity.rows()) throw ShapeError("front output unit out of range");
  EvalPlan plan = lp.plan;
  plan.coeff = plan.coeff.cwiseProduct(lp.sensitivity.row(k).transpose());
  return LossContext(lp.responses - surrogate_response(lp, prefix), lp.point_weights, std::move(plan), lp.act);
}

}  // namespace hgrow
