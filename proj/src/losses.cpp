// SPDX-License-Identifier: Apache-2.0
#include "liforge/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace liforge {
namespace {

void check_pair(std::span<const double> student, std::span<const double> teacher, const char* who) {
  if (student.size() != teacher.size()) {
    throw std::invalid_argument(std::string(who) + ": student/teacher length mismatch");
  }
  if (student.size() < 2) throw std::invalid_argument(std::string(who) + ": needs at least two scores");
}

std::size_t first_min(std::span<const double> s) {
  return static_cast<std::size_t>(std::min_element(s.begin(), s.end()) - s.begin());
}

std::size_t first_max(std::span<const double> s) {
  return static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
}

struct Prepared {
  std::vector<double> values;
  bool degenerate = false;
};

Prepared prepare(std::span<const double> scores, bool normalize) {
  if (!normalize) return {std::vector<double>(scores.begin(), scores.end()), false};
  auto n = minmax_normalize(scores);
  return {std::move(n.values), n.degenerate};
}

/// log-softmax of x / tau with order-independent normalizer.
std::vector<double> log_softmax(const std::vector<double>& x, double tau) {
  const double mx = *std::max_element(x.begin(), x.end()) / tau;
  std::vector<double> e(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) e[i] = std::exp(x[i] / tau - mx);
  const double log_z = std::log(sorted_sum(e));
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / tau - mx - log_z;
  return out;
}

}  // namespace

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::KLDiv: return "kldiv";
    case LossKind::MarginMSE: return "marginmse";
    case LossKind::Mixed: return "mixed";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& text) {
  if (text == "kldiv") return LossKind::KLDiv;
  if (text == "marginmse") return LossKind::MarginMSE;
  if (text == "mixed") return LossKind::Mixed;
  throw std::invalid_argument("unknown loss kind '" + text + "' (kldiv|marginmse|mixed)");
}

void LossConfig::validate() const {
  if (!(mmse_lambda >= 0.0)) throw std::invalid_argument("loss: mmse_lambda must be >= 0");
  if (!(temperature > 0.0)) throw std::invalid_argument("loss: temperature must be > 0");
}

double sorted_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

NormalizedScores minmax_normalize(std::span<const double> scores) {
  if (scores.size() < 2) throw std::invalid_argument("minmax_normalize: needs at least two scores");
  const double lo = scores[first_min(scores)];
  const double hi = scores[first_max(scores)];
  NormalizedScores out;
  out.values.assign(scores.size(), 0.0);
  // Non-finite inputs propagate so callers see a non-finite loss rather than a skip.
  if (!std::all_of(scores.begin(), scores.end(), [](double v) { return std::isfinite(v); })) {
    out.values.assign(scores.size(), std::numeric_limits<double>::quiet_NaN());
    return out;
  }
  if (!(hi > lo)) {
    out.degenerate = true;
    return out;
  }
  const double range = hi - lo;
  for (std::size_t i = 0; i < scores.size(); ++i) out.values[i] = (scores[i] - lo) / range;
  return out;
}

std::vector<double> minmax_normalize_backward(std::span<const double> scores, std::span<const double> upstream) {
  if (scores.size() != upstream.size()) throw std::invalid_argument("minmax_normalize_backward: size mismatch");
  const auto n = minmax_normalize(scores);
  std::vector<double> grad(scores.size(), 0.0);
  if (n.degenerate) return grad;
  const std::size_t a = first_min(scores);
  const std::size_t b = first_max(scores);
  const double range = scores[b] - scores[a];
  // s'_i = (s_i - s_a) / (s_b - s_a)
  // ds'_i = (ds_i - ds_a) / r - s'_i (ds_b - ds_a) / r
  std::vector<double> weighted(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) weighted[i] = upstream[i] * n.values[i];
  const double sum_u = sorted_sum(std::vector<double>(upstream.begin(), upstream.end()));
  const double sum_us = sorted_sum(std::move(weighted));
  for (std::size_t i = 0; i < scores.size(); ++i) grad[i] = upstream[i] / range;
  grad[a] += (sum_us - sum_u) / range;
  grad[b] -= sum_us / range;
  return grad;
}

LossResult kl_div_loss(std::span<const double> student, std::span<const double> teacher, const LossConfig& cfg) {
  check_pair(student, teacher, "kl_div_loss");
  cfg.validate();
  const auto s = prepare(student, cfg.normalize_student);
  const auto t = prepare(teacher, cfg.normalize_teacher);
  LossResult r;
  r.degenerate = s.degenerate || t.degenerate;

  const auto log_p = log_softmax(t.values, cfg.temperature);
  const auto log_q = log_softmax(s.values, cfg.temperature);
  const std::size_t n = student.size();
  std::vector<double> terms(n);
  std::vector<double> dnorm(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::exp(log_p[i]);
    terms[i] = p == 0.0 ? 0.0 : p * (log_p[i] - log_q[i]);
    dnorm[i] = (std::exp(log_q[i]) - p) / cfg.temperature;
  }
  r.loss = sorted_sum(std::move(terms));
  r.grad = cfg.normalize_student ? minmax_normalize_backward(student, dnorm) : std::move(dnorm);
  return r;
}

LossResult margin_mse_loss(std::span<const double> student, std::span<const double> teacher,
                           const LossConfig& cfg) {
  check_pair(student, teacher, "margin_mse_loss");
  const auto s = prepare(student, cfg.normalize_student);
  const auto t = prepare(teacher, cfg.normalize_teacher);
  LossResult r;
  r.degenerate = s.degenerate || t.degenerate;

  const std::size_t n = student.size();
  const double inv = 1.0 / static_cast<double>(n - 1);
  std::vector<double> sq(n - 1);
  std::vector<double> dnorm(n, 0.0);
  std::vector<double> to_positive(n - 1);
  for (std::size_t j = 1; j < n; ++j) {
    const double err = (t.values[0] - t.values[j]) - (s.values[0] - s.values[j]);
    sq[j - 1] = err * err;
    dnorm[j] = 2.0 * err * inv;
    to_positive[j - 1] = -2.0 * err * inv;
  }
  dnorm[0] = sorted_sum(std::move(to_positive));
  r.loss = sorted_sum(std::move(sq)) * inv;
  r.grad = cfg.normalize_student ? minmax_normalize_backward(student, dnorm) : std::move(dnorm);
  return r;
}

LossResult mixed_loss(std::span<const double> student, std::span<const double> teacher, const LossConfig& cfg) {
  cfg.validate();
  auto kl = kl_div_loss(student, teacher, cfg);
  if (cfg.mmse_lambda == 0.0) return kl;
  const auto mm = margin_mse_loss(student, teacher, cfg);
  kl.loss += cfg.mmse_lambda * mm.loss;
  for (std::size_t i = 0; i < kl.grad.size(); ++i) kl.grad[i] += cfg.mmse_lambda * mm.grad[i];
  kl.degenerate = kl.degenerate || mm.degenerate;
  return kl;
}

LossResult distillation_loss(std::span<const double> student, std::span<const double> teacher,
                             const LossConfig& cfg) {
  switch (cfg.kind) {
    case LossKind::KLDiv: return kl_div_loss(student, teacher, cfg);
    case LossKind::MarginMSE: return margin_mse_loss(student, teacher, cfg);
    case LossKind::Mixed: return mixed_loss(student, teacher, cfg);
  }
  throw std::invalid_argument("distillation_loss: unknown loss kind");
}

MatrixLossResult ibneg_loss(const Matrix& scores) {
  if (scores.rows() != scores.cols()) throw std::invalid_argument("ibneg_loss: score matrix must be square");
  const Eigen::Index b = scores.rows();
  if (b < 2) throw std::invalid_argument("ibneg_loss: needs a batch of at least 2");
  MatrixLossResult r;
  r.grad.resize(b, b);
  std::vector<double> row(static_cast<std::size_t>(b));
  std::vector<double> per_row(static_cast<std::size_t>(b));
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = 0; j < b; ++j) row[static_cast<std::size_t>(j)] = scores(i, j);
    const auto logp = log_softmax(row, 1.0);
    per_row[static_cast<std::size_t>(i)] = -logp[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < b; ++j) {
      r.grad(i, j) = (std::exp(logp[static_cast<std::size_t>(j)]) - (i == j ? 1.0 : 0.0)) / static_cast<double>(b);
    }
  }
  double total = 0.0;
  for (double v : per_row) total += v;
  r.loss = total / static_cast<double>(b);
  return r;
}

}  // namespace liforge
