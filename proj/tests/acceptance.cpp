// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "hgrow/diagnostics.hpp"
#include "hgrow/errors.hpp"
#include "hgrow/experiment.hpp"
#include "support.hpp"

using namespace hgrow;
using namespace hgrow::testing;

namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;  // stated runtime limit, 0 when none applies
  std::function<Outcome()> run;
};

// Counts failures and remembers the worst observed value for the summary line.
struct Tally {
  int checked = 0;
  int failed = 0;
  double worst = 0.0;
  void check(bool ok, double value = 0.0) {
    ++checked;
    if (!ok) ++failed;
    worst = std::max(worst, value);
  }
};

WeightSet dyadic_weights(const Architecture& arch, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> k(-16, 16);
  std::vector<double> p(param_count(arch));
  for (double& v : p) v = k(rng) / 8.0;
  return WeightSet::from_vector(arch, p);
}

Architecture with_input(std::mt19937_64& rng, int input, int max_width, int depth) {
  std::uniform_int_distribution<int> width(1, max_width);
  std::vector<int> w{input};
  for (int i = 0; i < depth; ++i) w.push_back(width(rng));
  w.push_back(1);
  return Architecture(w);
}

// ---------------------------------------------------------------------------

Outcome calculus_identities() {
  std::mt19937_64 rng(1001);
  Tally hom, add, add_generic, split;
  std::uniform_real_distribution<double> ua(0.0, 4.0);
  std::uniform_real_distribution<double> delta(0.0, 0.5);

  for (int i = 0; i < 1000; ++i) {
    const Architecture arch = random_arch(rng, 3, 6, 3);
    const WeightSet w = random_weights(arch, rng);
    const Activation act(i % 5 == 0 ? 0.0 : delta(rng));
    const double alpha = i % 10 == 0 ? 0.0 : ua(rng);
    const WeightSet s = scale_weights(alpha, w);
    const Matrix x = random_points(arch.input_width(), 8, rng, -2.0, 2.0);
    const Vector a = realize_batch(w, act, x), b = realize_batch(s, act, x);
    for (int j = 0; j < x.cols(); ++j) {
      const double err = std::abs(b[j] - alpha * a[j]) / (1.0 + std::abs(alpha * a[j]));
      hom.check(err <= 1e-12, err);
    }
  }

  for (int i = 0; i < 1000; ++i) {
    const int input = 1 + i % 3;
    const int depth = 1 + (i / 3) % 3;
    const Architecture aa = with_input(rng, input, 4, depth);
    const Architecture ab = with_input(rng, input, 4, depth);
    const Activation act(i % 2 == 0 ? 0.0 : 0.25);
    // Dyadic weights and inputs make every partial sum exact, so the identity must hold bit for bit.
    const WeightSet da = dyadic_weights(aa, rng), db = dyadic_weights(ab, rng);
    const WeightSet ds = direct_sum(da, db);
    std::uniform_int_distribution<int> k(-8, 8);
    for (int j = 0; j < 4; ++j) {
      std::vector<double> x(input);
      for (double& v : x) v = k(rng) / 4.0;
      add.check(realize(ds, act, x) == realize(da, act, x) + realize(db, act, x));
    }
    const WeightSet ga = random_weights(aa, rng), gb = random_weights(ab, rng);
    const WeightSet gs = direct_sum(ga, gb);
    const Matrix x = random_points(input, 4, rng);
    const Vector lhs = realize_batch(gs, Activation(0.01), x);
    const Vector rhs = realize_batch(ga, Activation(0.01), x) + realize_batch(gb, Activation(0.01), x);
    for (int j = 0; j < 4; ++j) {
      const double scale = std::max(1.0, std::abs(rhs[j]));
      const double err = std::abs(lhs[j] - rhs[j]) / scale;
      add_generic.check(err <= 1e-12, err);
    }
  }

  for (int i = 0; i < 1000; ++i) {
    const Architecture base = random_arch(rng, 3, 5, 2);
    std::vector<int> widths = base.widths();
    std::uniform_int_distribution<int> g(1, 3), parts(1, 4);
    const int group = g(rng);
    widths[widths.size() - 2] = group * parts(rng);
    const WeightSet w = random_weights(Architecture(widths), rng);
    const auto pieces = split_final_layer(w, group);
    const Matrix x = random_points(widths.front(), 6, rng);
    const Activation act;
    const Vector full = realize_batch(w, act, x);
    Vector sum = Vector::Zero(x.cols());
    double magnitude = 0.0;
    for (const WeightSet& p : pieces) {
      const Vector r = realize_batch(p, act, x);
      sum += r;
      magnitude = std::max(magnitude, r.cwiseAbs().maxCoeff());
    }
    for (int j = 0; j < x.cols(); ++j) {
      // Relative to the largest summand: cancellation among parts is not a split error.
      const double err = std::abs(sum[j] - full[j]) / std::max({std::abs(full[j]), magnitude, 1e-300});
      split.check(err <= 1e-12, err);
    }
  }

  Outcome o;
  o.pass = hom.failed == 0 && add.failed == 0 && add_generic.failed == 0 && split.failed == 0;
  o.detail = fmt::format(
      "homogeneity {}/{} (max {:.1e}), additivity exact {}/{}, generic {}/{} (max {:.1e}), split {}/{} (max {:.1e})",
      hom.checked - hom.failed, hom.checked, hom.worst, add.checked - add.failed, add.checked,
      add_generic.checked - add_generic.failed, add_generic.checked, add_generic.worst,
      split.checked - split.failed, split.checked, split.worst);
  return o;
}

Outcome chainrule_and_descent() {
  std::mt19937_64 rng(1002);
  std::uniform_real_distribution<double> ua(0.0, 2.0), unit(0.0, 1.0), noise(0.0, 1.0);
  Tally chain, descent, bound;
  int descent_instances = 0;
  for (int i = 0; i < 1000; ++i) {
    const int input = 1 + i % 3;
    const int depth = 1 + (i / 3) % 2;
    const Architecture af = with_input(rng, input, 4, depth), ag = with_input(rng, input, 4, depth);
    const WeightSet f = random_weights(af, rng);
    const WeightSet g_true = random_weights(ag, rng);
    const int n = 10 + i % 20;
    const Matrix x = random_points(input, n, rng);
    const Activation act;
    // Responses near F + G_true, then G a perturbation of G_true: a mix of descent and ascent directions.
    const Vector y = realize_batch(f, act, x) + realize_batch(g_true, act, x) + 0.1 * noise(rng) * random_vector(n, rng);
    const LossContext ctx(make_training_set(x, y, random_point_weights(n, rng)), LossSpec::identity(), act);
    Vector gv = g_true.to_vector() + noise(rng) * random_vector(static_cast<int>(g_true.size()), rng);
    const WeightSet g = WeightSet::from_vector(ag, std::span<const double>(gv.data(), gv.size()));

    const double alpha = ua(rng);
    const QuadraticExpansion q = quadratic_expansion(f, g, alpha, ctx);
    const double lf = ctx.loss(f);
    const double lfa = ctx.loss(direct_sum(f, scale_weights(alpha, g)));
    const double rhs = -2.0 * alpha * q.inner_term + alpha * alpha * q.norm_term;
    const double scale = std::max({lf, lfa, 1e-300});
    const double err = std::abs(q.loss_delta - rhs) / scale;
    chain.check(err <= 1e-10, err);

    const double lfg = ctx.loss(direct_sum(f, g));
    if (!(lfg < lf)) continue;
    ++descent_instances;
    const double drop = std::abs(lfg - lf);
    for (int k = 0; k <= 10; ++k) {
      const double a = k == 10 ? 1.0 : (k == 0 ? 0.0 : unit(rng));
      const double lhs = ctx.loss(direct_sum(f, scale_weights(a, g)));
      const double excess = (lhs - (lf - a * drop)) / lf;
      descent.check(excess <= 1e-10, std::max(0.0, excess));
    }
    const Vector hg = ctx.response(g);
    const double left = 2.0 * ctx.dot(ctx.residual(f), hg) / ctx.norm(hg);
    const double right = drop / (2.0 * std::sqrt(lf));
    const double short_by = (right - left) / std::max(right, 1e-300);
    bound.check(short_by <= 1e-10, std::max(0.0, short_by));
  }
  Outcome o;
  o.pass = chain.failed == 0 && descent.failed == 0 && bound.failed == 0 && descent_instances >= 100;
  o.detail = fmt::format("chain rule {}/{} (max rel {:.1e}); descent instances {}: convexity {}/{}, alignment {}/{}",
                         chain.checked - chain.failed, chain.checked, chain.worst, descent_instances,
                         descent.checked - descent.failed, descent.checked, bound.checked - bound.failed,
                         bound.checked);
  return o;
}

Outcome gradient_vs_fd() {
  std::mt19937_64 rng(1003);
  Tally t;
  int skipped = 0;
  std::uniform_int_distribution<int> in(1, 3), width(1, 5), depth(1, 2);
  while (t.checked < 100) {
    std::vector<int> widths{in(rng)};
    const int d = depth(rng);
    for (int i = 0; i < d; ++i) widths.push_back(width(rng));
    widths.push_back(1);
    const Architecture arch(widths);
    const LossContext ctx = random_context(arch.input_width(), 8, rng);
    const WeightSet w = random_weights(arch, rng);
    if (kink_distance(w, ctx.activation(), ctx.plan().points) < 1e-3) {
      ++skipped;
      continue;
    }
    const Vector g = ctx.loss_gradient(w);
    const Vector fd = fd_gradient(
        [&](const Vector& v) { return ctx.loss(WeightSet::from_vector(arch, std::span<const double>(v.data(), v.size()))); },
        w.to_vector(), 1e-6);
    const double err = (g - fd).cwiseAbs().maxCoeff() / std::max(1.0, g.cwiseAbs().maxCoeff());
    t.check(err <= 1e-5, err);
  }
  return {t.failed == 0, fmt::format("{}/{} architectures within 1e-5 (max rel {:.1e}, {} near-kink draws skipped)",
                                     t.checked - t.failed, t.checked, t.worst, skipped)};
}

Outcome independence() {
  std::mt19937_64 rng(1004);
  std::uniform_int_distribution<int> parts_n(1, 8), samples(2, 30);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int violations = 0, degenerate = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 1000; ++i) {
    const int n = samples(rng);
    const LossContext ctx = random_context(1, n, rng);
    const int w = parts_n(rng);
    std::vector<Vector> parts;
    for (int j = 0; j < w; ++j) parts.push_back(random_vector(n, rng));
    // A third of the instances nearly cancel, which drives L up.
    if (i % 3 == 0 && w >= 2) parts.back() = -(parts[0] * (1.0 - 1e-3 * u(rng))) + 1e-4 * random_vector(n, rng);
    try {
      const IndependenceCheck c = independence_bound_check(std::span<const Vector>(parts), random_vector(n, rng), ctx);
      if (!c.holds) ++violations;
      if (c.rhs > 0.0) min_slack = std::min(min_slack, (c.rhs - c.lhs) / c.rhs);
    } catch (const DegenerateError&) {
      ++degenerate;
    }
  }
  return {violations == 0 && degenerate == 0,
          fmt::format("1000 decompositions: {} violations, {} degenerate, min relative slack {:.2e}", violations,
                      degenerate, min_slack)};
}

Outcome wstar_vs_grid() {
  std::mt19937_64 rng(1005);
  const int n = 5;
  Matrix x(1, n);
  for (int i = 0; i < n; ++i) x(0, i) = i / double(n - 1);
  const Architecture star({1, 1, 1});
  const Activation act;
  const LossContext base(make_training_set(x, Vector::Zero(n)), LossSpec::identity(), act);

  // Every grid point's response vector is computed once; residuals reuse them.
  const int per_axis = 41;
  std::vector<double> axis(per_axis);
  for (int i = 0; i < per_axis; ++i) axis[i] = -2.0 + 4.0 * i / (per_axis - 1);
  std::vector<Vector> unit_responses;
  for (double a : axis) {
    for (double b : axis) {
      for (double c : axis) {
        for (double d : axis) {
          const std::vector<double> p{a, b, c, d};
          const Vector z = base.response(WeightSet::from_vector(star, p));
          const double nz = base.norm(z);
          if (nz > 0.0) unit_responses.push_back(z / nz);
        }
      }
    }
  }

  GrowthConfig cfg;
  cfg.star_arch = star;
  int passed = 0;
  double worst_ratio = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 20; ++trial) {
    const Vector r = random_vector(n, rng);
    double grid_best = 0.0;
    for (const Vector& z : unit_responses) grid_best = std::max(grid_best, base.dot(r, z));
    const ExtensionResult ext = wstar_search(r, base, cfg, static_cast<std::uint64_t>(trial));
    const double ratio = grid_best > 0.0 ? ext.objective_value / grid_best : 1.0;
    worst_ratio = std::min(worst_ratio, ratio);
    if (ext.objective_value >= 0.95 * grid_best) ++passed;
  }
  return {passed == 20, fmt::format("{}/20 residuals at >= 0.95 x grid best ({} grid candidates, worst ratio {:.4f})",
                                    passed, unit_responses.size(), worst_ratio)};
}

Outcome joint_step() {
  Matrix x(1, 2);
  x << 0.0, 1.0;
  Vector g(2);
  g << 0.3, 0.7;
  const LossContext ctx(make_training_set(x, Vector::Zero(2), g), LossSpec::identity(), Activation());
  // Unit vectors scaled to be orthonormal in the weighted inner product.
  const Vector old = Vector::Unit(2, 0) / std::sqrt(0.3), fresh = Vector::Unit(2, 1) / std::sqrt(0.7);
  const Vector target = 2.0 * old + 3.0 * fresh;
  const JointStep s = joint_alpha_beta(target, old, fresh, ctx);
  const double err = std::max(std::abs(s.alpha - 3.0), std::abs(s.beta - 2.0));
  bool singular = false;
  Vector a(2);
  a << 1.0, 2.0;
  try {
    joint_alpha_beta(target, a, -2.5 * a, ctx);
  } catch (const SingularSystemError&) {
    singular = true;
  }
  return {err <= 1e-12 && singular,
          fmt::format("orthonormal case (alpha, beta) = ({:.15g}, {:.15g}), error {:.1e}; parallel case {}", s.alpha,
                      s.beta, err, singular ? "raised SingularSystemError" : "did not raise")};
}

Outcome stationarity() {
  const StationarityRun r = stationarity_run(1e-8);
  return {r.reached && r.residual <= 1e-3,
          fmt::format("final gradient norm {:.2e} after {} epochs, relative identity mismatch {:.2e}",
                      r.final_grad_norm, r.epochs, r.residual)};
}

Outcome c_opt_bounds() {
  std::mt19937_64 rng(1008);
  GrowthConfig cfg;
  cfg.star_arch = Architecture({2, 3, 1});
  cfg.search_restarts = 16;
  cfg.search_ascent_steps = 50;
  int out_of_range = 0;
  double lo = 2.0, hi = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const LossContext ctx = random_context(2, 10 + trial % 30, rng);
    const WeightSet w = random_weights(with_input(rng, 2, 4, 1), rng);
    const double c = c_opt(w, ctx, cfg, static_cast<std::uint64_t>(trial)).c_opt;
    if (!(c >= 0.0 && c <= 2.0)) ++out_of_range;
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  const WeightSet planted = random_weights(Architecture({2, 3, 1}), rng);
  const Matrix x = random_points(2, 64, rng, 0.0, 1.0);
  const LossContext ctx(make_training_set(x, realize_batch(planted, Activation(), x)), LossSpec::identity(),
                        Activation());
  GrowthConfig full;
  full.star_arch = Architecture({2, 3, 1});
  const double planted_c = c_opt(WeightSet::zeros(Architecture({2, 2, 1})), ctx, full, 1).c_opt;
  return {out_of_range == 0 && planted_c >= 1.9,
          fmt::format("200 states in [{:.3f}, {:.3f}], {} outside [0,2]; planted residual c_opt {:.4f}", lo, hi,
                      out_of_range, planted_c)};
}

// ---------------------------------------------------------------------------

fs::path config_dir() { return fs::path(HGROW_CONFIG_DIR); }

ExperimentSpec load_reference(const std::string& name, const fs::path& out) {
  ExperimentSpec spec = load_config(config_dir() / name);
  spec.output_dir = out;
  return spec;
}

ExperimentResult run_fresh(const std::string& name, const fs::path& out) {
  fs::remove_all(out);
  return run_experiment(load_reference(name, out));
}

struct Curve {
  std::vector<double> params;
  std::vector<double> errors;
};

// Median error against median parameter count over the trained rounds.
Curve hierarchical_curve(const ExperimentResult& res) {
  std::vector<RunTrace> runs;
  for (const RunTrace& t : res.runs) {
    if (t.mode == RunMode::hierarchical) runs.push_back(t);
  }
  Curve c;
  for (const AggregateRow& a : aggregate(runs)) {
    if (a.round < 1) continue;
    c.params.push_back(a.params);
    c.errors.push_back(a.error);
  }
  return c;
}

double direct_median(const ExperimentResult& res, int width) {
  std::vector<double> errs;
  for (const RunTrace& t : res.runs) {
    if (t.mode == RunMode::direct && t.width == width) errs.push_back(t.rows.back().error);
  }
  return median(errs);
}

std::vector<double> final_hierarchical_errors(const ExperimentResult& res) {
  std::vector<double> errs;
  for (const RunTrace& t : res.runs) {
    if (t.mode == RunMode::hierarchical) errs.push_back(t.rows.back().error);
  }
  return errs;
}

const ExperimentResult& sq2d_result() {
  static const ExperimentResult res = [] {
    return run_fresh("sq2d.txt", fs::path(HGROW_ACCEPT_OUT) / "sq2d");
  }();
  return res;
}

const ExperimentResult& sq10d_result() {
  static const ExperimentResult res = [] {
    return run_fresh("sq10d.txt", fs::path(HGROW_ACCEPT_OUT) / "sq10d");
  }();
  return res;
}

Outcome rate_sq2d() {
  const ExperimentResult& res = sq2d_result();
  const Curve c = hierarchical_curve(res);
  const RateFit fit = fit_rate(c.params, c.errors);
  const double final_err = median(final_hierarchical_errors(res));
  const double final_params = c.params.back();
  return {fit.slope <= -1.5 && final_err <= 1e-2 && final_params >= 200.0,
          fmt::format("slope {:.3f} (r^2 {:.3f}, {} rounds), final median error {:.3e} at {:.0f} params", fit.slope,
                      fit.r_squared, fit.points, final_err, final_params)};
}

Outcome superiority_sq2d() {
  const ExperimentResult& res = sq2d_result();
  const ExperimentSpec spec = load_reference("sq2d.txt", fs::path(HGROW_ACCEPT_OUT) / "sq2d");
  const Curve c = hierarchical_curve(res);
  bool pass = true;
  std::string detail;
  for (int w : spec.direct_widths) {
    const double p = static_cast<double>(param_count(spec.direct_arch(w)));
    const bool covered = p >= c.params.front() && p <= c.params.back();
    const double h = loglog_interpolate(c.params, c.errors, p);
    const double d = direct_median(res, w);
    const bool ok = covered && h <= 0.8 * d;
    pass = pass && ok;
    detail += fmt::format("{}w={} ({:.0f} params): hier {:.3e} vs direct {:.3e} (ratio {:.2f}){}", detail.empty() ? "" : "; ",
                          w, p, h, d, h / d, covered ? "" : " [not covered]");
  }
  return {pass, detail};
}

Outcome high_dimensional() {
  const ExperimentResult& res = sq10d_result();
  const ExperimentSpec spec = load_reference("sq10d.txt", fs::path(HGROW_ACCEPT_OUT) / "sq10d");
  const Curve c = hierarchical_curve(res);
  const double final_err = median(final_hierarchical_errors(res));
  bool pass = final_err <= 5e-2 && spec.rounds <= 100;
  std::string detail = fmt::format("final median error {:.3e} at {:.0f} params", final_err, c.params.back());
  for (int w : spec.direct_widths) {
    const double p = static_cast<double>(param_count(spec.direct_arch(w)));
    const bool covered = p >= c.params.front() && p <= c.params.back();
    const double h = loglog_interpolate(c.params, c.errors, p);
    const double d = direct_median(res, w);
    pass = pass && covered && h <= d;
    detail += fmt::format("; w={} ({:.0f} params): hier {:.3e} vs direct {:.3e}{}", w, p, h, d,
                          covered ? "" : " [not covered]");
  }
  return {pass, detail};
}

Outcome reduction_factor() {
  std::mt19937_64 rng(1012);
  const Activation act;
  const Architecture arch({2, 3, 1});
  GrowthConfig cfg;
  cfg.star_arch = arch;
  cfg.l_max = 1;
  cfg.c_opt_exit = 0.0;
  cfg.train_after_last = false;
  OptimConfig opt;
  opt.max_epochs = 0;

  int instances = 0, violations = 0, attempts = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  while (instances < 10 && attempts < 1000) {
    ++attempts;
    const WeightSet f = random_weights(arch, rng);
    const WeightSet g = random_weights(arch, rng);
    const Matrix x = random_points(2, 48, rng, 0.0, 1.0);
    const Vector y = realize_batch(f, act, x) + realize_batch(g, act, x) + 0.05 * random_vector(48, rng);
    const LossContext ctx(make_training_set(x, y), LossSpec::identity(), act);
    const double lf = ctx.loss(f);
    const double kappa = ctx.loss(direct_sum(f, g)) / lf;
    if (!(kappa <= 0.25)) continue;
    ++instances;

    const Vector r = ctx.residual(f);
    const double gamma = alignment(r, ctx.response(g), ctx);
    const InnerResult step = inner_extend(f, ctx, cfg, opt, static_cast<std::uint64_t>(instances));
    const ExtensionResult& ext = step.extensions.at(0);
    const double a_star = ext.objective_value / std::sqrt(ext.loss_before);
    // gamma / a_star stands in for L sqrt(#chi / #chi*).
    const double predicted = predicted_reduction_factor(kappa, gamma / a_star, 1.0);
    const double actual = ext.loss_after / ext.loss_before;
    if (!(actual <= predicted)) ++violations;
    min_margin = std::min(min_margin, predicted - actual);
  }
  return {instances == 10 && violations == 0,
          fmt::format("{} planted instances, {} violations, min margin {:.3e}", instances, violations, min_margin)};
}

}  // namespace

// Optional arguments select criteria by number; the default runs all of them.
int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::stoi(argv[i]));

  const std::vector<Criterion> criteria{
      {1, "calculus identities", 10.0, calculus_identities},
      {2, "chain rule and descent inequalities", 10.0, chainrule_and_descent},
      {3, "gradient vs central differences", 60.0, gradient_vs_fd},
      {4, "independence inequality", 10.0, independence},
      {5, "extension search vs grid oracle", 60.0, wstar_vs_grid},
      {6, "joint (alpha, beta) step", 0.0, joint_step},
      {7, "stationarity identity", 120.0, stationarity},
      {8, "c_opt bounds", 0.0, c_opt_bounds},
      {9, "rate on sq2d", 0.0, rate_sq2d},
      {10, "hierarchical vs direct on sq2d", 0.0, superiority_sq2d},
      {11, "sq10d with final-layer growth", 0.0, high_dimensional},
      {12, "one-step reduction factor", 0.0, reduction_factor},
  };

  int failures = 0, ran = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0.0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += fmt::format("; exceeded {:.0f} s budget", c.budget_s);
    }
    if (!o.pass) ++failures;
    fmt::print("{} criterion {:2d} ({}) [{:.1f} s]: {}\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
