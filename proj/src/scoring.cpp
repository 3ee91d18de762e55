// SPDX-License-Identifier: Apache-2.0
#include "liforge/scoring.hpp"

#include <charconv>
#include <stdexcept>

namespace liforge {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

int parse_int(const std::string& s, const std::string& context) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("augmentation mode '" + context + "': bad integer '" + s + "'");
  }
  return v;
}

void check_dims(const EmbeddingMatrix& q, const EmbeddingMatrix& d) {
  if (q.dim() != d.dim()) {
    throw std::invalid_argument("maxsim: dimension mismatch (" + std::to_string(q.dim()) + " vs " +
                                std::to_string(d.dim()) + ")");
  }
}

}  // namespace

void validate(const AugmentationMode& mode) {
  std::visit(overloaded{
                 [](const NoAugmentation&) {},
                 [](const FixedAugmentation& m) {
                   if (m.k < 0) throw std::invalid_argument("fixed augmentation: k must be >= 0");
                 },
                 [](const FixedMaxLength& m) {
                   if (m.max_len < 1) throw std::invalid_argument("fixedmax augmentation: max_len must be >= 1");
                 },
                 [](const DynamicLength& m) {
                   if (m.base < 1) throw std::invalid_argument("dynamic augmentation: base must be >= 1");
                   if (m.min_masks < 0) throw std::invalid_argument("dynamic augmentation: min_masks must be >= 0");
                 },
             },
             mode);
}

std::string to_string(const AugmentationMode& mode) {
  return std::visit(overloaded{
                        [](const NoAugmentation&) { return std::string("none"); },
                        [](const FixedAugmentation& m) { return "fixed:" + std::to_string(m.k); },
                        [](const FixedMaxLength& m) { return "fixedmax:" + std::to_string(m.max_len); },
                        [](const DynamicLength& m) {
                          return "dynamic:" + std::to_string(m.base) + ":" + std::to_string(m.min_masks);
                        },
                    },
                    mode);
}

AugmentationMode parse_augmentation(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = text.find(':', start);
    parts.push_back(text.substr(start, colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  AugmentationMode mode;
  const auto& kind = parts[0];
  if (kind == "none" && parts.size() == 1) {
    mode = NoAugmentation{};
  } else if (kind == "fixed" && parts.size() <= 2) {
    mode = FixedAugmentation{parts.size() == 2 ? parse_int(parts[1], text) : 8};
  } else if (kind == "fixedmax" && parts.size() <= 2) {
    mode = FixedMaxLength{parts.size() == 2 ? parse_int(parts[1], text) : 32};
  } else if (kind == "dynamic" && parts.size() <= 3) {
    DynamicLength d;
    if (parts.size() >= 2) d.base = parse_int(parts[1], text);
    if (parts.size() == 3) d.min_masks = parse_int(parts[2], text);
    mode = d;
  } else {
    throw std::invalid_argument("unknown augmentation mode '" + text + "'");
  }
  validate(mode);
  return mode;
}

int padded_query_length(int token_count, const AugmentationMode& mode) {
  return std::visit(overloaded{
                        [&](const NoAugmentation&) { return token_count; },
                        [&](const FixedAugmentation& m) { return token_count + m.k; },
                        [&](const FixedMaxLength& m) { return m.max_len; },
                        [&](const DynamicLength& m) {
                          int padded = (token_count + m.base - 1) / m.base * m.base;
                          if (padded - token_count < m.min_masks) padded = token_count + m.min_masks;
                          return padded;
                        },
                    },
                    mode);
}

TokenIds augment_query(const TokenIds& tokens, const AugmentationMode& mode) {
  TokenIds out;
  out.push_back(Vocab::kQueryMarker);
  std::size_t keep = tokens.size();
  if (const auto* fm = std::get_if<FixedMaxLength>(&mode)) {
    keep = std::min(keep, static_cast<std::size_t>(std::max(fm->max_len - 1, 0)));
  }
  out.insert(out.end(), tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(keep));
  const int target = padded_query_length(static_cast<int>(out.size()), mode);
  while (static_cast<int>(out.size()) < target) out.push_back(Vocab::kMask);
  return out;
}

double maxsim(const EmbeddingMatrix& q, const EmbeddingMatrix& d) {
  std::vector<Eigen::Index> argmax;
  return maxsim(q, d, argmax);
}

double maxsim(const EmbeddingMatrix& q, const EmbeddingMatrix& d, std::vector<Eigen::Index>& argmax) {
  check_dims(q, d);
  const Matrix sims = q.data() * d.data().transpose();
  argmax.resize(static_cast<std::size_t>(q.rows()));
  double total = 0.0;
  for (Eigen::Index i = 0; i < sims.rows(); ++i) {
    Eigen::Index best = 0;
    double best_value = sims(i, 0);
    for (Eigen::Index j = 1; j < sims.cols(); ++j) {
      if (sims(i, j) > best_value) {
        best_value = sims(i, j);
        best = j;
      }
    }
    total += best_value;
    argmax[static_cast<std::size_t>(i)] = best;
  }
  return total;
}

std::vector<double> maxsim_batch(const EmbeddingMatrix& q, std::span<const EmbeddingMatrix> docs) {
  std::vector<double> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(maxsim(q, d));
  return out;
}

void maxsim_backward(const EmbeddingMatrix& q, const EmbeddingMatrix& d,
                     const std::vector<Eigen::Index>& argmax, double upstream, Matrix& dq, Matrix& dd) {
  check_dims(q, d);
  if (static_cast<Eigen::Index>(argmax.size()) != q.rows() || dq.rows() != q.rows() ||
      dq.cols() != q.dim() || dd.rows() != d.rows() || dd.cols() != d.dim()) {
    throw std::invalid_argument("maxsim_backward: shape mismatch");
  }
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const Eigen::Index j = argmax[static_cast<std::size_t>(i)];
    dq.row(i) += upstream * d.data().row(j);
    dd.row(j) += upstream * q.data().row(i);
  }
}

}  // namespace liforge
