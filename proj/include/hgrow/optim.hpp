#pragma once

#include <cstdint>
#include <vector>

#include "hgrow/loss.hpp"

namespace hgrow {

enum class OptimMethod {
  adam,
  // Full-batch gradient descent with an adaptive step (grow on success,
  // halve on failure). Used to push small problems to tight stationarity.
  gradient_descent,
};

struct OptimConfig {
  OptimMethod method = OptimMethod::adam;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double epsilon = 1e-8;
  int max_epochs = 2000;
  int stall_window = 200;
  double stall_rel_tol = 1e-3;
  // Stop once the (masked) gradient norm falls to this value; 0 disables.
  double grad_tol = 0.0;
  // 0 means full batch.
  int batch_size = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Per-parameter freeze flags aligned with the canonical vectorization.
class FrozenMask {
 public:
  static FrozenMask none(std::size_t n) { return FrozenMask(std::vector<bool>(n, false)); }
  static FrozenMask all(std::size_t n) { return FrozenMask(std::vector<bool>(n, true)); }
  explicit FrozenMask(std::vector<bool> frozen) : frozen_(std::move(frozen)) {}

  std::size_t size() const { return frozen_.size(); }
  bool frozen(std::size_t i) const { return frozen_[i]; }
  void set(std::size_t i, bool value) { frozen_[i] = value; }
  std::size_t trainable_count() const;
  // Zeroes the frozen entries of `v`.
  void apply(Vector& v) const;

 private:
  std::vector<bool> frozen_;
};

// Loss gradient with frozen positions zeroed.
Vector gradient(const WeightSet& w, const LossContext& ctx, const FrozenMask& mask);

// Per-epoch record of a training call.
struct TrainSegment {
  std::vector<double> losses;  // best loss seen up to and including each epoch
  double start_loss = 0.0;
  double end_loss = 0.0;
  double final_grad_norm = 0.0;
  int epochs = 0;
  bool stalled = false;
  bool reached_grad_tol = false;
};

struct TrainResult {
  WeightSet weights;
  TrainSegment trace;
};

// Raised when the loss becomes non-finite; carries the best finite state.
class NumericDivergence : public NumericError {
 public:
  NumericDivergence(const std::string& what, WeightSet last_finite, double last_loss)
      : NumericError(what), last_finite_(std::move(last_finite)), last_loss_(last_loss) {}
  const WeightSet& last_finite() const { return last_finite_; }
  double last_loss() const { return last_loss_; }

 private:
  WeightSet last_finite_;
  double last_loss_;
};

// Minimizes the loss over the unfrozen parameters. Returns the best weights
// seen along the trajectory, so the result never has a larger loss than the
// input.
TrainResult train(const WeightSet& w, const LossContext& ctx, const FrozenMask& mask,
                  const OptimConfig& cfg);

// True iff the relative improvement over the last `stall_window` entries is
// below `stall_rel_tol`. Needs more than `stall_window` entries.
bool is_stalled(std::span<const double> losses, const OptimConfig& cfg);

}  // namespace hgrow
