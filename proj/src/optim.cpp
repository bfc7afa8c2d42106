#include "hgrow/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>

namespace hgrow {

void OptimConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) throw ConfigError("adam_beta1 must lie in (0,1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam_beta2 must lie in (0,1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (max_epochs < 0) throw ConfigError("max_epochs must be non-negative");
  if (stall_window < 1) throw ConfigError("stall_window must be positive");
  if (!(stall_rel_tol > 0.0)) throw ConfigError("stall_rel_tol must be positive");
  if (grad_tol < 0.0) throw ConfigError("grad_tol must be non-negative");
  if (batch_size < 0) throw ConfigError("batch_size must be non-negative");
}

std::size_t FrozenMask::trainable_count() const {
  return static_cast<std::size_t>(std::count(frozen_.begin(), frozen_.end(), false));
}

void FrozenMask::apply(Vector& v) const {
  if (static_cast<std::size_t>(v.size()) != frozen_.size()) {
    throw ShapeError(fmt::format("mask has {} entries, vector {}", frozen_.size(), v.size()));
  }
  for (std::size_t i = 0; i < frozen_.size(); ++i) {
    if (frozen_[i]) v[static_cast<Eigen::Index>(i)] = 0.0;
  }
}

Vector gradient(const WeightSet& w, const LossContext& ctx, const FrozenMask& mask) {
  Vector g = ctx.loss_gradient(w);
  mask.apply(g);
  return g;
}

bool is_stalled(std::span<const double> losses, const OptimConfig& cfg) {
  const auto window = static_cast<std::size_t>(cfg.stall_window);
  if (losses.size() <= window) return false;
  const double now = losses.back();
  const double then = losses[losses.size() - 1 - window];
  const double scale = std::max(then, std::numeric_limits<double>::min());
  return (then - now) / scale < cfg.stall_rel_tol;
}

namespace {

class Trainer {
 public:
  Trainer(const WeightSet& w, const LossContext& ctx, const FrozenMask& mask, const OptimConfig& cfg)
      : ctx_(ctx), mask_(mask), cfg_(cfg), work_(w), best_(w) {
    if (mask.size() != w.size()) {
      throw ShapeError(fmt::format("mask has {} entries, network {}", mask.size(), w.size()));
    }
    theta_ = w.to_vector();
  }

  TrainResult run() {
    TrainSegment seg;
    current_loss_ = evaluate(theta_, grad_);
    if (!std::isfinite(current_loss_)) {
      throw NumericDivergence("initial loss is not finite", best_, current_loss_);
    }
    best_loss_ = current_loss_;
    best_grad_norm_ = grad_.norm();
    seg.start_loss = best_loss_;

    if (mask_.trainable_count() > 0) {
      if (cfg_.method == OptimMethod::adam) {
        adam(seg);
      } else {
        descent(seg);
      }
    }
    seg.end_loss = best_loss_;
    seg.final_grad_norm = best_grad_norm_;
    seg.reached_grad_tol = cfg_.grad_tol > 0.0 && best_grad_norm_ <= cfg_.grad_tol;
    return {best_, std::move(seg)};
  }

 private:
  double evaluate(const Vector& theta, Vector& grad) {
    work_.assign({theta.data(), static_cast<std::size_t>(theta.size())});
    const double l = ctx_.loss_and_gradient(work_, grad);
    mask_.apply(grad);
    return l;
  }

  // Records the state just evaluated; returns false when training must stop.
  bool record(TrainSegment& seg, const Vector& theta, double l, const Vector& grad) {
    if (!std::isfinite(l)) {
      throw NumericDivergence(fmt::format("loss became non-finite after {} epochs", seg.epochs),
                              best_, best_loss_);
    }
    if (l < best_loss_) {
      best_loss_ = l;
      best_grad_norm_ = grad.norm();
      best_.assign({theta.data(), static_cast<std::size_t>(theta.size())});
    }
    seg.losses.push_back(best_loss_);
    if (is_stalled(seg.losses, cfg_)) {
      seg.stalled = true;
      return false;
    }
    return true;
  }

  bool converged(const Vector& grad) const {
    return cfg_.grad_tol > 0.0 && grad.norm() <= cfg_.grad_tol;
  }

  void adam(TrainSegment& seg) {
    const auto n = theta_.size();
    Vector m = Vector::Zero(n);
    Vector v = Vector::Zero(n);
    double b1t = 1.0;
    double b2t = 1.0;
    std::mt19937_64 rng(cfg_.seed);
    std::vector<int> order(static_cast<std::size_t>(ctx_.samples()));
    std::iota(order.begin(), order.end(), 0);

    auto step = [&](const Vector& g) {
      b1t *= cfg_.adam_beta1;
      b2t *= cfg_.adam_beta2;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (mask_.frozen(static_cast<std::size_t>(i))) continue;
        m[i] = cfg_.adam_beta1 * m[i] + (1.0 - cfg_.adam_beta1) * g[i];
        v[i] = cfg_.adam_beta2 * v[i] + (1.0 - cfg_.adam_beta2) * g[i] * g[i];
        const double mh = m[i] / (1.0 - b1t);
        const double vh = v[i] / (1.0 - b2t);
        theta_[i] -= cfg_.learning_rate * mh / (std::sqrt(vh) + cfg_.epsilon);
      }
    };

    const bool minibatch = cfg_.batch_size > 0 && cfg_.batch_size < ctx_.samples();
    for (int epoch = 0; epoch < cfg_.max_epochs; ++epoch) {
      if (converged(grad_)) break;
      if (minibatch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg_.batch_size)) {
          const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg_.batch_size));
          const LossContext batch = ctx_.restricted({order.begin() + static_cast<std::ptrdiff_t>(start),
                                                     order.begin() + static_cast<std::ptrdiff_t>(stop)});
          Vector g;
          work_.assign({theta_.data(), static_cast<std::size_t>(theta_.size())});
          batch.loss_and_gradient(work_, g);
          mask_.apply(g);
          step(g);
        }
      } else {
        step(grad_);
      }
      current_loss_ = evaluate(theta_, grad_);
      ++seg.epochs;
      if (!record(seg, theta_, current_loss_, grad_)) break;
    }
  }

  void descent(TrainSegment& seg) {
    double rate = cfg_.learning_rate;
    Vector trial_grad;
    for (int epoch = 0; epoch < cfg_.max_epochs; ++epoch) {
      if (converged(grad_)) break;
      const Vector trial = theta_ - rate * grad_;
      const double l = evaluate(trial, trial_grad);
      ++seg.epochs;
      if (std::isfinite(l) && l < current_loss_) {
        theta_ = trial;
        grad_ = trial_grad;
        current_loss_ = l;
        rate *= 1.2;
      } else {
        rate *= 0.5;
        if (rate < 1e-300) break;
      }
      if (!record(seg, theta_, current_loss_, grad_)) break;
    }
  }

  const LossContext& ctx_;
  const FrozenMask& mask_;
  const OptimConfig& cfg_;
  WeightSet work_;
  WeightSet best_;
  Vector theta_;
  Vector grad_;
  double current_loss_ = 0.0;
  double best_loss_ = 0.0;
  double best_grad_norm_ = 0.0;
};

}  // namespace

TrainResult train(const WeightSet& w, const LossContext& ctx, const FrozenMask& mask,
                  const OptimConfig& cfg) {
  cfg.validate();
  return Trainer(w, ctx, mask, cfg).run();
}

}  // namespace hgrow
