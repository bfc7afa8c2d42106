#include "hgrow/net.hpp"

#include <cmath>
#include <string>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace hgrow {

Architecture::Architecture(std::vector<int> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) {
    throw ShapeError("architecture needs at least an input and an output width");
  }
  for (int w : widths_) {
    if (w < 1) throw ShapeError(fmt::format("non-positive width in ({})", fmt::join(widths_, ",")));
  }
  if (widths_.back() != 1) {
    throw ShapeError(fmt::format("output width must be 1, got ({})", fmt::join(widths_, ",")));
  }
}

std::size_t param_count(const Architecture& arch) {
  std::size_t total = 0;
  const auto& w = arch.widths();
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    total += static_cast<std::size_t>(w[i] + 1) * static_cast<std::size_t>(w[i + 1]);
  }
  return total;
}

Activation::Activation(double delta) : delta_relu(delta) {
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw DomainError(fmt::format("delta_relu must lie in [0,1), got {}", delta));
  }
}

void Activation::apply(Matrix& m) const {
  const double d = delta_relu;
  m = m.unaryExpr([d](double x) { return x >= 0.0 ? x : d * x; });
}

Matrix forward_layers(std::span<const Layer> layers, const Activation& act, const Matrix& points) {
  Matrix h = points;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (h.rows() != layers[i].weight.cols()) {
      throw ShapeError(fmt::format("layer {} expects {} inputs, got {}", i, layers[i].weight.cols(),
                                   h.rows()));
    }
    Matrix pre = layers[i].weight * h;
    pre.colwise() += layers[i].bias;
    if (i + 1 < layers.size()) act.apply(pre);
    h = std::move(pre);
  }
  return h;
}

WeightSet::WeightSet(Architecture arch, std::vector<Layer> layers)
    : arch_(std::move(arch)), layers_(std::move(layers)) {
  if (layers_.size() != arch_.layer_count()) {
    throw ShapeError(fmt::format("expected {} layers, got {}", arch_.layer_count(), layers_.size()));
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto rows = arch_.width(i + 1);
    const auto cols = arch_.width(i);
    const Layer& l = layers_[i];
    if (l.weight.rows() != rows || l.weight.cols() != cols || l.bias.size() != rows) {
      throw ShapeError(fmt::format("layer {} has shape {}x{} / {}, expected {}x{} / {}", i,
                                   l.weight.rows(), l.weight.cols(), l.bias.size(), rows, cols,
                                   rows));
    }
  }
}

WeightSet WeightSet::zeros(const Architecture& arch) {
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < arch.layer_count(); ++i) {
    layers.push_back(
        {Matrix::Zero(arch.width(i + 1), arch.width(i)), Vector::Zero(arch.width(i + 1))});
  }
  return WeightSet(arch, std::move(layers));
}

WeightSet WeightSet::from_vector(const Architecture& arch, std::span<const double> params) {
  WeightSet w = zeros(arch);
  w.assign(params);
  return w;
}

Vector WeightSet::to_vector() const {
  Vector out(static_cast<Eigen::Index>(size()));
  Eigen::Index k = 0;
  for (const Layer& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out[k++] = l.weight(r, c);
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out[k++] = l.bias[r];
  }
  return out;
}

void WeightSet::assign(std::span<const double> params) {
  if (params.size() != size()) {
    throw ShapeError(fmt::format("expected {} parameters, got {}", size(), params.size()));
  }
  std::size_t k = 0;
  for (Layer& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = params[k++];
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = params[k++];
  }
}

std::size_t WeightSet::layer_offset(std::size_t i) const {
  std::size_t off = 0;
  for (std::size_t j = 0; j < i; ++j) {
    off += static_cast<std::size_t>(arch_.width(j) + 1) * static_cast<std::size_t>(arch_.width(j + 1));
  }
  return off;
}

double realize(const WeightSet& w, const Activation& act, std::span<const double> x) {
  if (static_cast<int>(x.size()) != w.arch().input_width()) {
    throw ShapeError(fmt::format("input has dimension {}, network expects {}", x.size(),
                                 w.arch().input_width()));
  }
  Matrix p = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
  return forward_layers(w.layers(), act, p)(0, 0);
}

Vector realize_batch(const WeightSet& w, const Activation& act, const Matrix& points) {
  if (points.rows() != w.arch().input_width()) {
    throw ShapeError(fmt::format("points have dimension {}, network expects {}", points.rows(),
                                 w.arch().input_width()));
  }
  return forward_layers(w.layers(), act, points).row(0).transpose();
}

ForwardPass::ForwardPass(const WeightSet& w, const Activation& act, const Matrix& points)
    : w_(w), act_(act) {
  if (points.rows() != w.arch().input_width()) {
    throw ShapeError(fmt::format("points have dimension {}, network expects {}", points.rows(),
                                 w.arch().input_width()));
  }
  const auto& layers = w.layers();
  const std::size_t nl = layers.size();
  pre_.resize(nl);
  inputs_.resize(nl);
  inputs_[0] = points;
  for (std::size_t i = 0; i < nl; ++i) {
    pre_[i] = layers[i].weight * inputs_[i];
    pre_[i].colwise() += layers[i].bias;
    if (i + 1 < nl) {
      inputs_[i + 1] = pre_[i];
      act.apply(inputs_[i + 1]);
    }
  }
}

Vector ForwardPass::backward(const Vector& upstream) const {
  if (upstream.size() != inputs_[0].cols()) throw ShapeError("upstream length differs from point count");
  const auto& layers = w_.layers();
  Vector grad(static_cast<Eigen::Index>(w_.size()));
  Matrix delta = upstream.transpose();  // 1 x m
  for (std::size_t ii = layers.size(); ii-- > 0;) {
    const Matrix gw = delta * inputs_[ii].transpose();
    auto k = static_cast<Eigen::Index>(w_.layer_offset(ii));
    for (Eigen::Index r = 0; r < gw.rows(); ++r) {
      for (Eigen::Index c = 0; c < gw.cols(); ++c) grad[k++] = gw(r, c);
    }
    for (Eigen::Index r = 0; r < delta.rows(); ++r) grad[k++] = delta.row(r).sum();
    if (ii == 0) break;
    Matrix back = layers[ii].weight.transpose() * delta;
    const Matrix& z = pre_[ii - 1];
    for (Eigen::Index c = 0; c < back.cols(); ++c) {
      for (Eigen::Index r = 0; r < back.rows(); ++r) back(r, c) *= act_.slope(z(r, c));
    }
    delta = std::move(back);
  }
  return grad;
}

Vector realization_gradient(const WeightSet& w, const Activation& act, const Matrix& points,
                            const Vector& upstream) {
  return ForwardPass(w, act, points).backward(upstream);
}

Vector layers_gradient(std::span<const Layer> layers, const Activation& act, const Matrix& points,
                       const Matrix& upstream) {
  const std::size_t nl = layers.size();
  if (nl == 0) throw ShapeError("empty layer stack");
  if (upstream.rows() != layers.back().weight.rows() || upstream.cols() != points.cols()) {
    throw ShapeError("upstream shape does not match the stack's output");
  }
  std::vector<Matrix> pre(nl);
  std::vector<Matrix> in(nl);
  in[0] = points;
  for (std::size_t i = 0; i < nl; ++i) {
    if (in[i].rows() != layers[i].weight.cols()) throw ShapeError("layer stack is not composable");
    pre[i] = layers[i].weight * in[i];
    pre[i].colwise() += layers[i].bias;
    if (i + 1 < nl) {
      in[i + 1] = pre[i];
      act.apply(in[i + 1]);
    }
  }
  std::vector<std::size_t> offset(nl, 0);
  std::size_t total = 0;
  for (std::size_t i = 0; i < nl; ++i) {
    offset[i] = total;
    total += static_cast<std::size_t>(layers[i].weight.size() + layers[i].bias.size());
  }
  Vector grad(static_cast<Eigen::Index>(total));
  Matrix delta = upstream;
  for (std::size_t ii = nl; ii-- > 0;) {
    const Matrix gw = delta * in[ii].transpose();
    auto k = static_cast<Eigen::Index>(offset[ii]);
    for (Eigen::Index r = 0; r < gw.rows(); ++r) {
      for (Eigen::Index c = 0; c < gw.cols(); ++c) grad[k++] = gw(r, c);
    }
    for (Eigen::Index r = 0; r < delta.rows(); ++r) grad[k++] = delta.row(r).sum();
    if (ii == 0) break;
    Matrix back = layers[ii].weight.transpose() * delta;
    const Matrix& z = pre[ii - 1];
    for (Eigen::Index c = 0; c < back.cols(); ++c) {
      for (Eigen::Index r = 0; r < back.rows(); ++r) back(r, c) *= act.slope(z(r, c));
    }
    delta = std::move(back);
  }
  return grad;
}

WeightSet scale_weights(double alpha, const WeightSet& w) {
  if (!(alpha >= 0.0)) {
    throw DomainError(fmt::format("weight scaling needs alpha >= 0, got {}", alpha));
  }
  const int d = w.arch().depth();
  const double per_layer = std::pow(alpha, 1.0 / (d + 1));
  std::vector<Layer> layers = w.layers();
  for (int i = 0; i <= d; ++i) {
    layers[i].weight *= per_layer;
    layers[i].bias *= std::pow(alpha, static_cast<double>(i + 1) / (d + 1));
  }
  return WeightSet(w.arch(), std::move(layers));
}

WeightSet direct_sum(const WeightSet& a, const WeightSet& b) {
  const Architecture& xa = a.arch();
  const Architecture& xb = b.arch();
  if (xa.depth() != xb.depth() || xa.input_width() != xb.input_width()) {
    throw CompositionError(fmt::format("cannot merge depth {} / input {} with depth {} / input {}",
                                       xa.depth(), xa.input_width(), xb.depth(),
                                       xb.input_width()));
  }
  const int d = xa.depth();
  if (d == 0) {
    // Affine maps: the sum is parameter-wise.
    return WeightSet(xa, {Layer{a.layer(0).weight + b.layer(0).weight,
                                a.layer(0).bias + b.layer(0).bias}});
  }

  std::vector<int> widths{xa.input_width()};
  for (int i = 1; i <= d; ++i) widths.push_back(xa.width(i) + xb.width(i));
  widths.push_back(1);
  Architecture arch(widths);

  std::vector<Layer> layers;
  for (int i = 0; i <= d; ++i) {
    const Layer& la = a.layer(i);
    const Layer& lb = b.layer(i);
    Layer out;
    if (i == 0) {
      out.weight.resize(la.weight.rows() + lb.weight.rows(), la.weight.cols());
      out.weight << la.weight, lb.weight;
      out.bias.resize(la.bias.size() + lb.bias.size());
      out.bias << la.bias, lb.bias;
    } else if (i < d) {
      out.weight = Matrix::Zero(la.weight.rows() + lb.weight.rows(),
                                la.weight.cols() + lb.weight.cols());
      out.weight.topLeftCorner(la.weight.rows(), la.weight.cols()) = la.weight;
      out.weight.bottomRightCorner(lb.weight.rows(), lb.weight.cols()) = lb.weight;
      out.bias.resize(la.bias.size() + lb.bias.size());
      out.bias << la.bias, lb.bias;
    } else {
      out.weight.resize(1, la.weight.cols() + lb.weight.cols());
      out.weight << la.weight, lb.weight;
      out.bias = la.bias + lb.bias;
    }
    layers.push_back(std::move(out));
  }
  return WeightSet(std::move(arch), std::move(layers));
}

std::vector<WeightSet> split_final_layer(const WeightSet& w, int group_size) {
  const int d = w.arch().depth();
  if (d < 1) throw PartitionError("split_final_layer needs at least one hidden layer");
  const int wd = w.arch().last_hidden_width();
  if (group_size < 1 || wd % group_size != 0) {
    throw PartitionError(
        fmt::format("group size {} does not divide last hidden width {}", group_size, wd));
  }
  const int parts = wd / group_size;

  std::vector<int> widths(w.arch().widths().begin(), w.arch().widths().end());
  widths[widths.size() - 2] = group_size;
  Architecture arch(widths);

  std::vector<WeightSet> out;
  out.reserve(parts);
  const Layer& penult = w.layer(d - 1);
  const Layer& last = w.layer(d);
  for (int j = 0; j < parts; ++j) {
    std::vector<Layer> layers(w.layers().begin(), w.layers().begin() + (d - 1));
    const int first = j * group_size;
    layers.push_back({penult.weight.middleRows(first, group_size),
                      penult.bias.segment(first, group_size)});
    layers.push_back({last.weight.middleCols(first, group_size), last.bias / parts});
    out.emplace_back(arch, std::move(layers));
  }
  return out;
}

WeightSet hat_network(double a, double b, double c, std::span<const double> direction) {
  if (!(a < b && b < c)) {
    throw DomainError(fmt::format("hat network needs a < b < c, got ({}, {}, {})", a, b, c));
  }
  if (direction.empty()) throw ShapeError("hat network needs a non-empty direction");
  const auto w0 = static_cast<int>(direction.size());
  const Eigen::Map<const Eigen::RowVectorXd> dir(direction.data(), w0);

  Layer first{Matrix(3, w0), Vector(3)};
  first.weight.row(0) = dir;
  first.weight.row(1) = dir;
  first.weight.row(2) = dir;
  first.bias << -a, -b, -c;

  const double left = 1.0 / (b - a);
  const double right = 1.0 / (c - b);
  Layer second{Matrix(1, 3), Vector::Zero(1)};
  second.weight << left, -left - right, right;

  return WeightSet(Architecture({w0, 3, 1}), {std::move(first), std::move(second)});
}

}  // namespace hgrow
