// SPDX-License-Identifier: Apache-2.0
#include "liforge/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace liforge {
namespace {

void check_shapes(const ParamViews& params, const GradViews& grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("optimizer: tensor count mismatch");
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].size() != grads[t].size()) {
      throw std::invalid_argument("optimizer: shape mismatch in tensor " + std::to_string(t));
    }
  }
}

void ensure_slots(std::vector<std::vector<double>>& slots, const ParamViews& params) {
  if (slots.size() == params.size()) {
    for (std::size_t t = 0; t < params.size(); ++t) {
      if (slots[t].size() != params[t].size()) throw std::invalid_argument("optimizer: state shape mismatch");
    }
    return;
  }
  if (!slots.empty()) throw std::invalid_argument("optimizer: state tensor count mismatch");
  for (const auto& p : params) slots.emplace_back(p.size(), 0.0);
}

}  // namespace

std::string to_string(SchedulerKind kind) {
  return kind == SchedulerKind::LinearDecay ? "linear" : "schedulefree";
}

SchedulerKind parse_scheduler(const std::string& text) {
  if (text == "linear") return SchedulerKind::LinearDecay;
  if (text == "schedulefree") return SchedulerKind::ScheduleFree;
  throw std::invalid_argument("unknown scheduler '" + text + "' (linear|schedulefree)");
}

OptimConfig OptimConfig::with_default_clipping(SchedulerKind scheduler) {
  OptimConfig cfg;
  cfg.scheduler = scheduler;
  if (scheduler == SchedulerKind::LinearDecay) cfg.clip_max_norm = 2.0;
  return cfg;
}

void OptimConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("optim: lr must be > 0");
  if (!(warmup_frac >= 0.0 && warmup_frac < 1.0)) throw std::invalid_argument("optim: warmup_frac must be in [0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("optim: betas must be in [0, 1)");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("optim: eps must be > 0");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("optim: weight_decay must be >= 0");
  if (clip_max_norm && !(*clip_max_norm > 0.0)) throw std::invalid_argument("optim: clip_max_norm must be > 0");
}

std::int64_t warmup_steps(std::int64_t total, double warmup_frac) {
  return std::max<std::int64_t>(1, std::llround(warmup_frac * static_cast<double>(total)));
}

double linear_decay_lr(std::int64_t step, std::int64_t total, double warmup_frac, double lr_max) {
  if (step < 0 || step > total) throw std::invalid_argument("linear_decay_lr: step outside [0, total]");
  const std::int64_t warmup = warmup_steps(total, warmup_frac);
  if (step < warmup) return lr_max * static_cast<double>(step) / static_cast<double>(warmup);
  if (total <= warmup) return step == total ? 0.0 : lr_max;
  return lr_max * static_cast<double>(total - step) / static_cast<double>(total - warmup);
}

void adamw_step(ParamViews params, GradViews grads, OptimState& state, const OptimConfig& cfg, double lr_t) {
  check_shapes(params, grads);
  ensure_slots(state.m, params);
  ensure_slots(state.v, params);
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    auto p = params[k];
    const auto g = grads[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] -= lr_t * cfg.weight_decay * p[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= lr_t * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

void schedulefree_adamw_step(ParamViews params, GradViews grads, OptimState& state, const OptimConfig& cfg,
                             std::int64_t warmup) {
  check_shapes(params, grads);
  if (state.z.empty()) {
    for (const auto& p : params) {
      state.z.emplace_back(p.begin(), p.end());
      state.x.emplace_back(p.begin(), p.end());
    }
  }
  ensure_slots(state.z, params);
  ensure_slots(state.x, params);
  ensure_slots(state.v, params);

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  const bool in_warmup = state.step <= warmup;
  const double lr_t = in_warmup ? cfg.lr * t / static_cast<double>(warmup) : cfg.lr;
  double c = 1.0;
  if (!in_warmup) {
    c = 1.0 / static_cast<double>(state.averaged_steps + 1);
    ++state.averaged_steps;
  }

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& z = state.z[k];
    auto& x = state.x[k];
    auto& v = state.v[k];
    auto y = params[k];
    const auto g = grads[k];
    for (std::size_t i = 0; i < y.size(); ++i) {
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double denom = std::sqrt(v[i] / bc2) + cfg.eps;
      z[i] -= lr_t * (g[i] / denom + cfg.weight_decay * y[i]);
      // difference forms stay exact when x == z
      x[i] = in_warmup ? z[i] : x[i] + c * (z[i] - x[i]);
      y[i] = z[i] + cfg.beta1 * (x[i] - z[i]);
    }
  }
}

void schedulefree_eval_params(const OptimState& state, ParamViews out) {
  if (state.x.size() != out.size()) throw std::invalid_argument("schedulefree_eval_params: tensor count mismatch");
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (state.x[k].size() != out[k].size()) throw std::invalid_argument("schedulefree_eval_params: shape mismatch");
    std::copy(state.x[k].begin(), state.x[k].end(), out[k].begin());
  }
}

double clip_gradients(std::span<const std::span<double>> grads, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("clip_gradients: max_norm must be > 0");
  double sq = 0.0;
  for (const auto& g : grads) {
    for (double v : g) sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (const auto& g : grads) {
      for (double& v : g) v *= scale;
    }
  }
  return norm;
}

std::map<std::string, Tensor> optim_state_to_tensors(const OptimState& state, const std::vector<std::string>& names) {
  std::map<std::string, Tensor> out;
  auto put = [&](const char* prefix, const std::vector<std::vector<double>>& slots) {
    if (slots.empty()) return;
    if (slots.size() != names.size()) throw std::invalid_argument("optim_state_to_tensors: name count mismatch");
    for (std::size_t k = 0; k < slots.size(); ++k) {
      Tensor t;
      t.shape = {static_cast<std::int64_t>(slots[k].size())};
      t.values.assign(slots[k].begin(), slots[k].end());
      out.emplace(std::string(prefix) + names[k], std::move(t));
    }
  };
  put("opt.m.", state.m);
  put("opt.v.", state.v);
  put("opt.z.", state.z);
  put("opt.x.", state.x);
  out.emplace("opt.step", Tensor{{2}, {static_cast<float>(state.step), static_cast<float>(state.averaged_steps)}});
  return out;
}

OptimState optim_state_from_tensors(const std::map<std::string, Tensor>& tensors,
                                    const std::vector<std::string>& names) {
  OptimState s;
  auto get = [&](const char* prefix, std::vector<std::vector<double>>& slots) {
    for (std::size_t k = 0; k < names.size(); ++k) {
      auto it = tensors.find(std::string(prefix) + names[k]);
      if (it == tensors.end()) {
        if (k == 0) return;
        throw std::invalid_argument("optimizer state: missing " + std::string(prefix) + names[k]);
      }
      slots.emplace_back(it->second.values.begin(), it->second.values.end());
    }
  };
  get("opt.m.", s.m);
  get("opt.v.", s.v);
  get("opt.z.", s.z);
  get("opt.x.", s.x);
  auto it = tensors.find("opt.step");
  if (it == tensors.end() || it->second.values.size() != 2) {
    throw std::invalid_argument("optimizer state: missing opt.step");
  }
  s.step = static_cast<std::int64_t>(it->second.values[0]);
  s.averaged_steps = static_cast<std::int64_t>(it->second.values[1]);
  return s;
}

}  // namespace liforge
