// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "liforge/checkpoint.hpp"

namespace liforge {

enum class SchedulerKind { LinearDecay, ScheduleFree };

std::string to_string(SchedulerKind kind);
SchedulerKind parse_scheduler(const std::string& text);

struct OptimConfig {
  double lr = 3e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  SchedulerKind scheduler = SchedulerKind::ScheduleFree;
  double warmup_frac = 0.05;
  /// Global-norm clipping threshold; unset disables clipping.
  std::optional<double> clip_max_norm;

  /// Clipping at 2.0 under linear decay, none under schedule-free.
  static OptimConfig with_default_clipping(SchedulerKind scheduler);
  void validate() const;
};

using ParamViews = std::vector<std::span<double>>;
using GradViews = std::vector<std::span<const double>>;

/// Per-tensor optimizer state. For AdamW, m and v are the moment estimates.
/// For schedule-free AdamW, v is the second moment, z the base iterate and
/// x the averaged iterate; m stays empty.
struct OptimState {
  std::int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::vector<std::vector<double>> z;
  std::vector<std::vector<double>> x;
  /// Schedule-free bookkeeping: number of post-warmup averaging steps taken.
  std::int64_t averaged_steps = 0;
};

/// warmup = max(1, round(warmup_frac * total)); linear ramp to lr_max, then
/// linear decay to zero at `total`.
double linear_decay_lr(std::int64_t step, std::int64_t total, double warmup_frac, double lr_max);

/// Number of warmup steps used by both schedules.
std::int64_t warmup_steps(std::int64_t total, double warmup_frac);

/// Bias-corrected AdamW with decoupled weight decay (theta -= lr_t * wd * theta).
void adamw_step(ParamViews params, GradViews grads, OptimState& state, const OptimConfig& cfg, double lr_t);

/// Schedule-free AdamW. `params` holds the interpolation point
/// y = (1 - beta1) z + beta1 x where `grads` were evaluated; on return it
/// holds the next y. z takes an AdamW-preconditioned step; after warmup
/// x <- (1 - c) x + c z with c = 1 / (k + 1) for the k-th averaging step
/// (k from 0), during warmup x follows z. State is seeded from `params` on
/// the first call.
void schedulefree_adamw_step(ParamViews params, GradViews grads, OptimState& state, const OptimConfig& cfg,
                             std::int64_t warmup);

/// Copies the averaged iterate x (what evaluation and checkpoints read).
void schedulefree_eval_params(const OptimState& state, ParamViews out);

/// If the global L2 norm exceeds max_norm, scales every gradient by
/// max_norm / norm. Returns the norm before clipping.
double clip_gradients(std::span<const std::span<double>> grads, double max_norm);

/// Optimizer state as tensors named opt.m.<name>, opt.v.<name>, opt.z.<name>,
/// opt.x.<name> plus a scalar opt.step.
std::map<std::string, Tensor> optim_state_to_tensors(const OptimState& state, const std::vector<std::string>& names);
OptimState optim_state_from_tensors(const std::map<std::string, Tensor>& tensors,
                                    const std::vector<std::string>& names);

}  // namespace liforge
