#include "hgrow/growth.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "hgrow/partial.hpp"

namespace hgrow {

void GrowthConfig::validate() const {
  if (!(kappa > 0.0 && kappa < 1.0)) throw ConfigError("kappa must lie in (0,1)");
  if (l_max < 0) throw ConfigError("l_max must be non-negative");
  if (search_restarts < 1) throw ConfigError("search_restarts must be positive");
  if (search_ascent_steps < 0) throw ConfigError("search_ascent_steps must be non-negative");
  if (!(search_learning_rate > 0.0)) throw ConfigError("search_learning_rate must be positive");
  if (!(c_opt_exit >= 0.0)) throw ConfigError("c_opt_exit must be non-negative");
  if (!(assumed_l > 0.0)) throw ConfigError("assumed_l must be positive");
  if (!(assumed_size_ratio > 0.0)) throw ConfigError("assumed_size_ratio must be positive");
  if (star_arch.widths().back() != 1) throw ConfigError("star_arch must have output width 1");
}

bool GrowthConfig::kappa_has_guarantee() const {
  return kappa > (std::sqrt(5.0) - 1.0) / 2.0 && kappa < 1.0;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

namespace {

// Objective r . z / |z| and its gradient from one forward/backward pass.
struct Probe {
  double objective = 0.0;
  double norm = 0.0;
  Vector grad;
};

Probe probe(const WeightSet& w, const Vector& residual, const LossContext& ctx, bool with_grad) {
  const EvalPlan& plan = ctx.plan();
  ForwardPass pass(w, ctx.activation(), plan.points);
  const Vector z = plan.gather(pass.outputs());
  Probe p;
  p.norm = ctx.norm(z);
  if (!(p.norm > 0.0) || !std::isfinite(p.norm)) return p;
  const double rz = ctx.dot(residual, z);
  p.objective = rz / p.norm;
  if (with_grad) {
    const Vector c = ctx.point_weights().cwiseProduct(residual - (rz / (p.norm * p.norm)) * z) / p.norm;
    p.grad = pass.backward(plan.scatter(c));
  }
  return p;
}

}  // namespace

ExtensionResult wstar_search(const Vector& residual, const LossContext& ctx, const GrowthConfig& cfg,
                             std::uint64_t seed) {
  const Architecture& arch = cfg.star_arch;
  if (arch.input_width() != ctx.input_width()) {
    throw ShapeError(fmt::format("star architecture takes {} inputs, data has {}", arch.input_width(),
                                 ctx.input_width()));
  }
  if (residual.size() != ctx.samples()) throw ShapeError("residual length differs from sample count");

  const auto n = static_cast<Eigen::Index>(param_count(arch));
  const double b1 = 0.9;
  const double b2 = 0.999;
  const double eps = 1e-8;

  ExtensionResult best{WeightSet::zeros(arch)};
  double best_obj = -std::numeric_limits<double>::infinity();
  double best_initial = -std::numeric_limits<double>::infinity();
  bool any_nonzero = false;

  for (int k = 0; k < cfg.search_restarts; ++k) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    std::uniform_real_distribution<double> cube(-1.0, 1.0);
    Vector theta(n);
    for (Eigen::Index i = 0; i < n; ++i) theta[i] = cube(rng);
    WeightSet w = WeightSet::from_vector(arch, {theta.data(), static_cast<std::size_t>(n)});

    const Probe p = probe(w, residual, ctx, false);
    if (!(p.norm > 0.0)) continue;
    any_nonzero = true;
    w = scale_weights(1.0 / p.norm, w);
    best_initial = std::max(best_initial, p.objective);

    WeightSet restart_best = w;
    double restart_obj = p.objective;
    int restart_iter = 0;

    theta = w.to_vector();
    Vector m = Vector::Zero(n);
    Vector v = Vector::Zero(n);
    double b1t = 1.0;
    double b2t = 1.0;
    Probe cur = probe(w, residual, ctx, true);
    for (int it = 1; it <= cfg.search_ascent_steps; ++it) {
      b1t *= b1;
      b2t *= b2;
      m = b1 * m + (1.0 - b1) * cur.grad;
      v = b2 * v + (1.0 - b2) * cur.grad.cwiseProduct(cur.grad);
      const Vector mh = m / (1.0 - b1t);
      const Vector vh = v / (1.0 - b2t);
      theta += cfg.search_learning_rate * mh.cwiseQuotient((vh.cwiseSqrt().array() + eps).matrix());
      w.assign({theta.data(), static_cast<std::size_t>(n)});
      cur = probe(w, residual, ctx, false);
      if (!(cur.norm > 0.0) || !std::isfinite(cur.norm)) break;
      w = scale_weights(1.0 / cur.norm, w);
      theta = w.to_vector();
      cur = probe(w, residual, ctx, true);
      if (!(cur.norm > 0.0)) break;
      if (cur.objective > restart_obj) {
        restart_obj = cur.objective;
        restart_best = w;
        restart_iter = it;
      }
    }

    if (restart_obj > best_obj) {
      best_obj = restart_obj;
      best.wstar = restart_best;
      best.restart_index = static_cast<std::size_t>(k);
      best.ascent_iterations = restart_iter;
    }
  }

  if (!any_nonzero) {
    throw DegenerateError("every search candidate realizes zero on the samples");
  }
  best.best_initial_objective = best_initial;
  if (best_obj < 0.0) {
    // No candidate correlates positively; the zero network attains 0.
    best.wstar = WeightSet::zeros(arch);
    best_obj = 0.0;
  }
  best.objective_value = best_obj;
  return best;
}

double exact_line_search_alpha(const Vector& residual, const Vector& wstar_response,
                               const LossContext& ctx) {
  const double nz = ctx.norm_sq(wstar_response);
  if (!(nz > 0.0)) throw DegenerateError("line search along a zero response");
  return ctx.dot(residual, wstar_response) / nz;
}

double theoretical_alpha(double kappa, double l_assumed, double size_ratio, double loss_f) {
  return (1.0 - kappa) / (4.0 * l_assumed * std::sqrt(size_ratio)) * std::sqrt(loss_f);
}

double predicted_reduction_factor(double kappa, double l_assumed, double size_ratio) {
  return 1.0 - (1.0 - kappa) * (1.0 - kappa) / (8.0 * l_assumed * l_assumed * size_ratio);
}

double theoretical_step_budget(double kappa, double l_assumed, double w_star) {
  return std::ceil(8.0 * l_assumed * l_assumed * std::log(1.5) / ((1.0 - kappa) * (1.0 - kappa)) *
                   w_star);
}

JointStep joint_alpha_beta(const Vector& target, const Vector& old_response,
                           const Vector& new_response, const LossContext& ctx) {
  const double g00 = ctx.norm_sq(old_response);
  const double g11 = ctx.norm_sq(new_response);
  const double g01 = ctx.dot(old_response, new_response);
  const double det = g00 * g11 - g01 * g01;
  if (!(det > 1e-12 * g00 * g11) || !(g00 > 0.0) || !(g11 > 0.0)) {
    throw SingularSystemError("old and new responses are (nearly) parallel");
  }
  const double r0 = ctx.dot(old_response, target);
  const double r1 = ctx.dot(new_response, target);
  return {(g00 * r1 - g01 * r0) / det, (g11 * r0 - g01 * r1) / det};
}

FrozenMask host_mask(const Architecture& host, const Architecture& grown) {
  if (host.depth() != grown.depth() || host.input_width() != grown.input_width()) {
    throw CompositionError("grown network does not extend the host");
  }
  const int d = host.depth();
  std::vector<bool> frozen;
  frozen.reserve(param_count(grown));
  for (int i = 0; i <= d; ++i) {
    const int rows = grown.width(static_cast<std::size_t>(i + 1));
    const int cols = grown.width(static_cast<std::size_t>(i));
    const int hr = host.width(static_cast<std::size_t>(i + 1));
    const int hc = host.width(static_cast<std::size_t>(i));
    if (hr > rows || hc > cols) throw CompositionError("grown network is narrower than the host");
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) frozen.push_back(r < hr && c < hc);
    }
    for (int r = 0; r < rows; ++r) frozen.push_back(i < d && r < hr);
  }
  return FrozenMask(std::move(frozen));
}

InnerResult inner_extend(const WeightSet& w0, const LossContext& ctx, const GrowthConfig& cfg,
                         const OptimConfig& opt, std::uint64_t seed) {
  cfg.validate();
  InnerResult out{w0, {}, {}, 0, false, {}, 0};
  if (cfg.l_max == 0) return out;
  const Architecture& star = cfg.star_arch;
  if (star.depth() != w0.arch().depth() || star.input_width() != w0.arch().input_width()) {
    throw CompositionError(fmt::format("star architecture (depth {}, input {}) cannot extend depth {}, input {}",
                                       star.depth(), star.input_width(), w0.arch().depth(),
                                       w0.arch().input_width()));
  }

  WeightSet current = w0;
  auto train_phase = [&](std::uint64_t tag) {
    const FrozenMask mask = host_mask(w0.arch(), current.arch());
    if (mask.trainable_count() == 0 || opt.max_epochs == 0) return;
    OptimConfig local = opt;
    local.seed = derive_seed(seed, 0x7a11, tag);
    TrainResult tr = train(current, ctx, mask, local);
    out.epochs += tr.trace.epochs;
    out.segments.push_back(std::move(tr.trace));
    current = std::move(tr.weights);
  };

  for (int l = 0; l < cfg.l_max; ++l) {
    train_phase(static_cast<std::uint64_t>(l));
    const Vector base = ctx.response(current);
    const Vector r = ctx.responses() - base;
    const double loss_before = ctx.norm_sq(r);
    if (!(loss_before > 0.0)) {
      out.early_exit = true;
      break;
    }

    ExtensionResult ext = wstar_search(r, ctx, cfg, derive_seed(seed, 0x5ea7c4, static_cast<std::uint64_t>(l)));
    const double c = 2.0 * ext.objective_value / std::sqrt(loss_before);
    out.c_opt_trace.push_back(c);
    if (c < cfg.c_opt_exit) {
      out.early_exit = true;
      break;
    }

    const Vector z = ctx.response(ext.wstar);
    double alpha = exact_line_search_alpha(r, z, ctx);
    double beta = 1.0;
    if (cfg.step_rule == StepRule::theoretical_alpha) {
      alpha = theoretical_alpha(cfg.kappa, cfg.assumed_l, cfg.assumed_size_ratio, loss_before);
    } else if (cfg.step_rule == StepRule::joint_alpha_beta) {
      try {
        const JointStep js = joint_alpha_beta(ctx.responses(), base, z, ctx);
        if (js.alpha >= 0.0 && js.beta >= 0.0) {
          alpha = js.alpha;
          beta = js.beta;
        }
      } catch (const SingularSystemError&) {
        // keep the exact line search step
      }
    }

    auto candidate = [&](double b, double a) {
      return direct_sum(b == 1.0 ? current : scale_weights(b, current), scale_weights(a, ext.wstar));
    };
    WeightSet next = candidate(beta, alpha);
    double loss_after = ctx.loss(next);
    if (!(loss_after <= loss_before) && (beta != 1.0 || cfg.step_rule != StepRule::exact_line_search)) {
      beta = 1.0;
      alpha = exact_line_search_alpha(r, z, ctx);
      next = candidate(beta, alpha);
      loss_after = ctx.loss(next);
    }
    if (!(loss_after <= loss_before)) {
      // Rounding can push the exact step marginally uphill; add the block silently instead.
      alpha = 0.0;
      next = candidate(1.0, 0.0);
      loss_after = ctx.loss(next);
    }

    ext.alpha = alpha;
    ext.beta = beta;
    ext.loss_before = loss_before;
    ext.loss_after = loss_after;
    out.extensions.push_back(std::move(ext));
    out.block_params_added += param_count(star);
    current = std::move(next);
  }

  if (cfg.train_after_last && !out.extensions.empty()) {
    train_phase(static_cast<std::uint64_t>(cfg.l_max));
  }
  out.weights = std::move(current);
  return out;
}

AdaptiveResult adaptive_train(const WeightSet& w_init, const LossContext& ctx, const GrowthConfig& cfg,
                              const OptimConfig& opt, const AdaptiveOptions& options,
                              std::uint64_t seed, const RoundObserver& observer) {
  cfg.validate();
  opt.validate();
  if (options.rounds < 0) throw ConfigError("rounds must be non-negative");

  AdaptiveResult res;
  WeightSet current = w_init;
  RoundRecord first;
  first.params = current.size();
  first.loss = ctx.loss(current);
  first.c_opt = std::numeric_limits<double>::quiet_NaN();
  res.trace.push_back(first);
  res.sequence.push_back(current);
  if (observer) observer(first, current);

  for (int round = 1; round <= options.rounds; ++round) {
    if (options.target_loss > 0.0 && res.trace.back().loss <= options.target_loss) break;
    if (options.max_params > 0 && current.size() >= options.max_params) break;
    const auto start = std::chrono::steady_clock::now();
    RoundRecord rec;
    rec.round = round;

    OptimConfig full = opt;
    full.seed = derive_seed(seed, 0xf011, static_cast<std::uint64_t>(round));
    TrainResult tr = train(current, ctx, FrozenMask::none(current.size()), full);
    rec.epochs += tr.trace.epochs;
    current = std::move(tr.weights);

    const std::uint64_t round_seed = derive_seed(seed, 0x1e7e1, static_cast<std::uint64_t>(round));
    InnerResult inner = options.final_layers > 0
                            ? partial_final_layers(current, options.final_layers, ctx, cfg, opt, round_seed)
                            : inner_extend(current, ctx, cfg, opt, round_seed);
    rec.epochs += inner.epochs;
    rec.extensions = static_cast<int>(inner.extensions.size());
    rec.c_opt = inner.c_opt_trace.empty() ? std::numeric_limits<double>::quiet_NaN() : inner.c_opt_trace.front();
    current = std::move(inner.weights);

    rec.params = current.size();
    rec.loss = ctx.loss(current);
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    res.total_epochs += rec.epochs;
    res.trace.push_back(rec);
    res.sequence.push_back(current);
    if (observer) observer(rec, current);
  }
  return res;
}

}  // namespace hgrow
