#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hgrow/loss.hpp"
#include "hgrow/optim.hpp"

namespace hgrow {

enum class StepRule { exact_line_search, theoretical_alpha, joint_alpha_beta };

struct GrowthConfig {
  // Shape of every block added by one extension.
  Architecture star_arch{{2, 3, 1}};
  // Target contraction per outer round; only used by theoretical_alpha.
  double kappa = 0.9;
  // Extensions per call to inner_extend.
  int l_max = 8;
  int search_restarts = 64;
  int search_ascent_steps = 200;
  double search_learning_rate = 0.02;
  StepRule step_rule = StepRule::exact_line_search;
  // Stop extending once 2 (r . z*) / sqrt(L) drops below this value.
  double c_opt_exit = 1e-3;
  // Assumed stability constant and size ratio for theoretical_alpha.
  double assumed_l = 1.0;
  double assumed_size_ratio = 4.0;
  // Train the blocks added by the last extension before returning.
  bool train_after_last = true;

  void validate() const;
  // True when kappa lies in ((sqrt(5) - 1) / 2, 1), the range for which the
  // step-budget guarantee applies.
  bool kappa_has_guarantee() const;
};

struct ExtensionResult {
  WeightSet wstar;
  double objective_value = 0.0;  // residual . H R(wstar) with |H R(wstar)| = 1
  double alpha = 0.0;
  double beta = 1.0;  // scale applied to the host network (joint rule only)
  double loss_before = 0.0;
  double loss_after = 0.0;
  std::size_t restart_index = 0;
  int ascent_iterations = 0;
  // Best objective among the restarts' starting points, before any ascent.
  double best_initial_objective = 0.0;
};

// Multi-start search for argmax_{W in star_arch, |HR(W)| <= 1} residual . HR(W).
// Each restart samples the cube [-1,1]^#star, normalizes by weight scaling and
// runs gradient ascent on the scale-invariant objective r . z / |z|. Only
// wstar, objective_value and the search metadata are filled in.
ExtensionResult wstar_search(const Vector& residual, const LossContext& ctx,
                             const GrowthConfig& cfg, std::uint64_t seed);

// Minimizer of the loss along alpha -> F + alpha G: (r . z) / |z|^2.
double exact_line_search_alpha(const Vector& residual, const Vector& wstar_response,
                               const LossContext& ctx);

// (1 - kappa) / (4 L sqrt(size_ratio)) * sqrt(L(F)).
double theoretical_alpha(double kappa, double l_assumed, double size_ratio, double loss_f);
// 1 - (1 - kappa)^2 / (8 L^2 size_ratio).
double predicted_reduction_factor(double kappa, double l_assumed, double size_ratio);
// ceil(8 L^2 log(3/2) / (1 - kappa)^2 * w_star): the step budget of the inner loop.
double theoretical_step_budget(double kappa, double l_assumed, double w_star);

struct JointStep {
  double alpha;
  double beta;
};
// Minimizes |target - beta * old - alpha * new|^2 through the 2x2 normal
// equations. Throws SingularSystemError when the responses are nearly parallel.
JointStep joint_alpha_beta(const Vector& target, const Vector& old_response,
                           const Vector& new_response, const LossContext& ctx);

// Freeze flags for `grown`, whose leading neurons in every layer are the
// host network's. The host's parameters are frozen except the output bias,
// which the direct sum shares with every added block.
FrozenMask host_mask(const Architecture& host, const Architecture& grown);

struct InnerResult {
  WeightSet weights;
  std::vector<ExtensionResult> extensions;
  std::vector<TrainSegment> segments;
  int epochs = 0;
  bool early_exit = false;
  // 2 (r . z*) / sqrt(L) of every search, including one that ended the loop.
  std::vector<double> c_opt_trace;
  // Sum of param_count(star_arch) over the applied extensions. The
  // architecture's own count grows less because blocks share the output bias.
  std::size_t block_params_added = 0;
};

// The inner extension loop: freeze w0, then up to l_max times train the
// unfrozen weights, search an extension block and append it scaled by the
// step rule.
InnerResult inner_extend(const WeightSet& w0, const LossContext& ctx, const GrowthConfig& cfg,
                         const OptimConfig& opt, std::uint64_t seed);

struct AdaptiveOptions {
  int rounds = 10;
  // d' > 0 grows only the network's last d' + 1 layers on data mapped
  // through the frozen front.
  int final_layers = 0;
  // Stop after the round whose network reaches this many parameters (0: off).
  std::size_t max_params = 0;
  // Stop once the loss is at or below this value.
  double target_loss = 0.0;
};

struct RoundRecord {
  int round = 0;
  std::size_t params = 0;
  double loss = 0.0;
  int extensions = 0;  // blocks added in this round
  int epochs = 0;      // optimizer epochs spent in this round
  double wall_ms = 0.0;
  double c_opt = 0.0;  // indicator measured by the round's first search
};

struct AdaptiveResult {
  std::vector<WeightSet> sequence;
  std::vector<RoundRecord> trace;
  long long total_epochs = 0;
};

using RoundObserver = std::function<void(const RoundRecord&, const WeightSet&)>;

// The outer loop: alternately train every parameter and grow the network.
// trace[0] is the initial state; trace[r] is the state after round r.
AdaptiveResult adaptive_train(const WeightSet& w_init, const LossContext& ctx,
                              const GrowthConfig& cfg, const OptimConfig& opt,
                              const AdaptiveOptions& options, std::uint64_t seed,
                              const RoundObserver& observer = {});

// Deterministic per-call seed derivation.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace hgrow
