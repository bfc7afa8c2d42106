#include "hgrow/loss.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>

namespace hgrow {

TrainingSet make_training_set(Matrix inputs, Vector responses, std::optional<Vector> point_weights) {
  const auto n = responses.size();
  if (n < 1) throw ShapeError("training set needs at least one sample");
  if (inputs.cols() != n) {
    throw ShapeError(fmt::format("{} inputs but {} responses", inputs.cols(), n));
  }
  if (inputs.rows() < 1) throw ShapeError("inputs need at least one dimension");
  Vector gamma = point_weights ? std::move(*point_weights)
                               : Vector::Constant(n, 1.0 / static_cast<double>(n));
  if (gamma.size() != n) throw ShapeError("point weight count differs from sample count");
  if ((gamma.array() < 0.0).any()) throw DomainError("point weights must be non-negative");
  if (std::abs(compensated_sum(gamma) - 1.0) > 1e-12) {
    throw DomainError(fmt::format("point weights sum to {}, expected 1", compensated_sum(gamma)));
  }
  return {std::move(inputs), std::move(responses), std::move(gamma)};
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

}  // namespace

TrainingSet read_training_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(fmt::format("cannot open {}", path.string()));
  std::string line;
  if (!std::getline(is, line)) throw ShapeError("dataset CSV is empty");
  const auto header = split_csv(line);

  int dims = 0;
  int y_col = -1;
  int gamma_col = -1;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string& h = header[c];
    if (h == "y") {
      y_col = c;
    } else if (h == "gamma") {
      gamma_col = c;
    } else if (h == fmt::format("x_{}", dims + 1)) {
      if (c != dims) throw ShapeError("input columns must come first");
      ++dims;
    } else {
      throw ShapeError(fmt::format("unexpected CSV column '{}'", h));
    }
  }
  if (dims == 0 || y_col < 0) throw ShapeError("dataset CSV needs x_1..x_k and y columns");

  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ShapeError(fmt::format("row {} has {} cells, header has {}", rows.size() + 1,
                                   cells.size(), header.size()));
    }
    std::vector<double> row;
    for (const auto& cell : cells) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix x(dims, n);
  Vector y(n);
  Vector g(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < dims; ++k) x(k, i) = rows[i][k];
    y[i] = rows[i][y_col];
    if (gamma_col >= 0) g[i] = rows[i][gamma_col];
  }
  if (gamma_col >= 0) return make_training_set(std::move(x), std::move(y), std::move(g));
  return make_training_set(std::move(x), std::move(y));
}

void write_training_csv(const std::filesystem::path& path, const TrainingSet& ts) {
  std::ofstream os(path);
  if (!os) throw Error(fmt::format("cannot open {} for writing", path.string()));
  for (int k = 0; k < ts.input_width(); ++k) os << "x_" << k + 1 << ',';
  os << "y,gamma\n";
  for (int i = 0; i < ts.size(); ++i) {
    for (int k = 0; k < ts.input_width(); ++k) os << fmt::format("{},", ts.inputs(k, i));
    os << fmt::format("{},{}\n", ts.responses[i], ts.point_weights[i]);
  }
}

LossSpec LossSpec::identity() { return LossSpec(); }

LossSpec LossSpec::diagonal(Vector factors) {
  LossSpec s;
  s.kind_ = Kind::diagonal;
  s.factors_ = std::move(factors);
  return s;
}

LossSpec LossSpec::directional_derivative(Vector direction, double step) {
  if (!(step > 0.0)) throw DomainError("finite-difference step must be positive");
  LossSpec s;
  s.kind_ = Kind::directional_derivative;
  s.direction_ = std::move(direction);
  s.step_ = step;
  return s;
}

Vector EvalPlan::gather(const Vector& point_values) const {
  Vector out = Vector::Zero(samples);
  for (std::size_t j = 0; j < owner.size(); ++j) {
    out[owner[j]] += coeff[static_cast<Eigen::Index>(j)] * point_values[static_cast<Eigen::Index>(j)];
  }
  return out;
}

Vector EvalPlan::scatter(const Vector& sample_coeffs) const {
  Vector out(static_cast<Eigen::Index>(owner.size()));
  for (std::size_t j = 0; j < owner.size(); ++j) {
    out[static_cast<Eigen::Index>(j)] = coeff[static_cast<Eigen::Index>(j)] * sample_coeffs[owner[j]];
  }
  return out;
}

EvalPlan build_plan(const TrainingSet& ts, const LossSpec& spec) {
  const int n = ts.size();
  EvalPlan plan;
  plan.samples = n;
  switch (spec.kind()) {
    case LossSpec::Kind::identity:
    case LossSpec::Kind::diagonal: {
      plan.points = ts.inputs;
      plan.owner.resize(n);
      for (int i = 0; i < n; ++i) plan.owner[i] = i;
      if (spec.kind() == LossSpec::Kind::identity) {
        plan.coeff = Vector::Ones(n);
      } else {
        if (spec.factors().size() != n) {
          throw ShapeError(fmt::format("diagonal operator has {} factors for {} samples",
                                       spec.factors().size(), n));
        }
        plan.coeff = spec.factors();
      }
      break;
    }
    case LossSpec::Kind::directional_derivative: {
      if (spec.direction().size() != ts.input_width()) {
        throw ShapeError("stencil direction does not match input width");
      }
      const double s = spec.step();
      const Vector shift = s * spec.direction();
      plan.points.resize(ts.input_width(), 2 * n);
      plan.owner.resize(2 * n);
      plan.coeff.resize(2 * n);
      for (int i = 0; i < n; ++i) {
        plan.points.col(2 * i) = ts.inputs.col(i) + shift;
        plan.points.col(2 * i + 1) = ts.inputs.col(i) - shift;
        plan.owner[2 * i] = i;
        plan.owner[2 * i + 1] = i;
        plan.coeff[2 * i] = 0.5 / s;
        plan.coeff[2 * i + 1] = -0.5 / s;
      }
      break;
    }
  }
  return plan;
}

double compensated_sum(const Vector& terms) {
  double sum = 0.0;
  double carry = 0.0;
  for (Eigen::Index i = 0; i < terms.size(); ++i) {
    const double y = terms[i] - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum;
}

LossContext::LossContext(TrainingSet ts, LossSpec spec, Activation act)
    : responses_(ts.responses), weights_(ts.point_weights), plan_(build_plan(ts, spec)), act_(act) {}

LossContext::LossContext(Vector responses, Vector point_weights, EvalPlan plan, Activation act)
    : responses_(std::move(responses)),
      weights_(std::move(point_weights)),
      plan_(std::move(plan)),
      act_(act) {
  if (responses_.size() != weights_.size() || plan_.samples != responses_.size()) {
    throw ShapeError("loss context: responses, weights and plan disagree on sample count");
  }
}

double LossContext::dot(const Vector& a, const Vector& b) const {
  if (a.size() != weights_.size() || b.size() != weights_.size()) {
    throw ShapeError("inner product of vectors with wrong length");
  }
  return compensated_sum((weights_.array() * a.array() * b.array()).matrix());
}

double LossContext::norm_sq(const Vector& a) const { return dot(a, a); }

double LossContext::norm(const Vector& a) const { return std::sqrt(norm_sq(a)); }

Vector LossContext::response(const WeightSet& w) const {
  return plan_.gather(realize_batch(w, act_, plan_.points));
}

Vector LossContext::response_gradient(const WeightSet& w, const Vector& sample_coeffs) const {
  return realization_gradient(w, act_, plan_.points, plan_.scatter(sample_coeffs));
}

Vector LossContext::loss_gradient(const WeightSet& w) const {
  Vector grad;
  loss_and_gradient(w, grad);
  return grad;
}

double LossContext::loss_and_gradient(const WeightSet& w, Vector& grad) const {
  const ForwardPass pass(w, act_, plan_.points);
  const Vector r = responses_ - plan_.gather(pass.outputs());
  const Vector coeffs = (-2.0 * weights_.array() * r.array()).matrix();
  grad = pass.backward(plan_.scatter(coeffs));
  return norm_sq(r);
}

LossContext LossContext::restricted(const std::vector<int>& sample_indices) const {
  std::vector<int> remap(static_cast<std::size_t>(samples()), -1);
  const auto m = static_cast<Eigen::Index>(sample_indices.size());
  Vector y(m);
  Vector g(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const int i = sample_indices[static_cast<std::size_t>(k)];
    remap[static_cast<std::size_t>(i)] = static_cast<int>(k);
    y[k] = responses_[i];
    g[k] = weights_[i];
  }
  const double total = compensated_sum(g);
  if (!(total > 0.0)) throw DegenerateError("restricted sample set carries zero weight");
  g /= total;

  EvalPlan plan;
  plan.samples = static_cast<int>(m);
  std::vector<Eigen::Index> cols;
  for (std::size_t j = 0; j < plan_.owner.size(); ++j) {
    if (remap[static_cast<std::size_t>(plan_.owner[j])] >= 0) cols.push_back(static_cast<Eigen::Index>(j));
  }
  plan.points.resize(plan_.points.rows(), static_cast<Eigen::Index>(cols.size()));
  plan.coeff.resize(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    plan.points.col(kk) = plan_.points.col(cols[k]);
    plan.coeff[kk] = plan_.coeff[cols[k]];
    plan.owner.push_back(remap[static_cast<std::size_t>(plan_.owner[static_cast<std::size_t>(cols[k])])]);
  }
  return LossContext(std::move(y), std::move(g), std::move(plan), act_);
}

LossContext LossContext::mapped(const std::function<Matrix(const Matrix&)>& map) const {
  EvalPlan plan = plan_;
  plan.points = map(plan_.points);
  if (plan.points.cols() != plan_.points.cols()) {
    throw ShapeError("point map must preserve the number of points");
  }
  return LossContext(responses_, weights_, std::move(plan), act_);
}

LossContext LossContext::with_responses(Vector responses) const {
  return LossContext(std::move(responses), weights_, plan_, act_);
}

Vector response_vector(const WeightSet& w, const LossContext& ctx) { return ctx.response(w); }

double loss(const WeightSet& w, const LossContext& ctx) { return ctx.loss(w); }

QuadraticExpansion quadratic_expansion(const WeightSet& f, const WeightSet& g, double alpha,
                                       const LossContext& ctx) {
  const Vector r = ctx.residual(f);
  const Vector hg = ctx.response(g);
  const double base = ctx.norm_sq(r);
  double moved = 0.0;
  if (alpha >= 0.0 && f.arch().depth() == g.arch().depth() &&
      f.arch().input_width() == g.arch().input_width()) {
    moved = ctx.loss(direct_sum(f, scale_weights(alpha, g)));
  } else {
    moved = ctx.norm_sq(r - alpha * hg);
  }
  return {moved - base, ctx.dot(r, hg), ctx.norm_sq(hg)};
}

double alignment(const Vector& residual, const Vector& candidate, const LossContext& ctx) {
  const double nr = ctx.norm(residual);
  const double nc = ctx.norm(candidate);
  if (nr == 0.0 || nc == 0.0) throw DegenerateError("alignment of a zero-norm vector");
  return std::clamp(ctx.dot(residual, candidate) / (nr * nc), -1.0, 1.0);
}

}  // namespace hgrow
