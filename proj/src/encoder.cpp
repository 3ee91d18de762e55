// SPDX-License-Identifier: Apache-2.0
#include "liforge/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "liforge/vocab.hpp"

namespace liforge {
namespace {

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return m;
}

Tensor to_tensor(const Matrix& m) {
  Tensor t;
  t.shape = {static_cast<std::int64_t>(m.rows()), static_cast<std::int64_t>(m.cols())};
  t.values.resize(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) t.values[static_cast<std::size_t>(i)] = static_cast<float>(m.data()[i]);
  return t;
}

Matrix from_tensor(const std::map<std::string, Tensor>& tensors, const std::string& name, Eigen::Index rows,
                   Eigen::Index cols) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw std::invalid_argument("checkpoint has no tensor '" + name + "'");
  const auto& t = it->second;
  if (t.shape != std::vector<std::int64_t>{rows, cols}) {
    throw std::invalid_argument("tensor '" + name + "' has shape incompatible with encoder config");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = t.values[static_cast<std::size_t>(i)];
  return m;
}

std::span<double> span_of(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<const double> span_of(const Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }

}  // namespace

void EncoderConfig::validate() const {
  if (vocab_size < 1 || hidden < 1 || out_dim < 1) {
    throw std::invalid_argument("encoder: vocab_size, hidden and out_dim must be >= 1");
  }
  if (max_doc_len < 2) throw std::invalid_argument("encoder: max_doc_len must be >= 2");
  liforge::validate(aug_mode);
}

EncoderParams EncoderParams::init(const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  const double h = cfg.hidden;
  EncoderParams p;
  p.emb = uniform_matrix(cfg.vocab_size, cfg.hidden, 1.0 / std::sqrt(h), rng);
  if (cfg.mixer) {
    p.att_q = uniform_matrix(cfg.hidden, cfg.hidden, 1.0 / h, rng);
    p.att_k = uniform_matrix(cfg.hidden, cfg.hidden, 1.0 / h, rng);
    p.att_v = uniform_matrix(cfg.hidden, cfg.hidden, 1.0 / h, rng);
  }
  p.proj = uniform_matrix(cfg.hidden, cfg.out_dim, 1.0 / std::sqrt(h), rng);
  return p;
}

EncoderParams EncoderParams::zeros(const EncoderConfig& cfg) {
  cfg.validate();
  EncoderParams p;
  p.emb = Matrix::Zero(cfg.vocab_size, cfg.hidden);
  if (cfg.mixer) {
    p.att_q = Matrix::Zero(cfg.hidden, cfg.hidden);
    p.att_k = Matrix::Zero(cfg.hidden, cfg.hidden);
    p.att_v = Matrix::Zero(cfg.hidden, cfg.hidden);
  }
  p.proj = Matrix::Zero(cfg.hidden, cfg.out_dim);
  return p;
}

EncoderParams EncoderParams::zeros_like() const {
  EncoderParams p;
  p.emb = Matrix::Zero(emb.rows(), emb.cols());
  p.att_q = Matrix::Zero(att_q.rows(), att_q.cols());
  p.att_k = Matrix::Zero(att_k.rows(), att_k.cols());
  p.att_v = Matrix::Zero(att_v.rows(), att_v.cols());
  p.proj = Matrix::Zero(proj.rows(), proj.cols());
  return p;
}

std::vector<std::string> EncoderParams::names() const {
  if (has_mixer()) return {kEmbName, kAttQName, kAttKName, kAttVName, kProjName};
  return {kEmbName, kProjName};
}

std::vector<std::span<double>> EncoderParams::views() {
  if (has_mixer()) return {span_of(emb), span_of(att_q), span_of(att_k), span_of(att_v), span_of(proj)};
  return {span_of(emb), span_of(proj)};
}

std::vector<std::span<const double>> EncoderParams::views() const {
  if (has_mixer()) return {span_of(emb), span_of(att_q), span_of(att_k), span_of(att_v), span_of(proj)};
  return {span_of(emb), span_of(proj)};
}

EncoderParams& EncoderParams::operator+=(const EncoderParams& other) {
  auto mine = views();
  auto theirs = other.views();
  if (mine.size() != theirs.size()) throw std::invalid_argument("EncoderParams: structure mismatch");
  for (std::size_t t = 0; t < mine.size(); ++t) {
    if (mine[t].size() != theirs[t].size()) throw std::invalid_argument("EncoderParams: shape mismatch");
    for (std::size_t i = 0; i < mine[t].size(); ++i) mine[t][i] += theirs[t][i];
  }
  return *this;
}

EncoderParams& EncoderParams::operator*=(double scale) {
  for (auto view : views()) {
    for (double& x : view) x *= scale;
  }
  return *this;
}

std::map<std::string, Tensor> EncoderParams::to_tensors() const {
  std::map<std::string, Tensor> out;
  out.emplace(kEmbName, to_tensor(emb));
  if (has_mixer()) {
    out.emplace(kAttQName, to_tensor(att_q));
    out.emplace(kAttKName, to_tensor(att_k));
    out.emplace(kAttVName, to_tensor(att_v));
  }
  out.emplace(kProjName, to_tensor(proj));
  return out;
}

EncoderParams EncoderParams::from_tensors(const std::map<std::string, Tensor>& tensors, const EncoderConfig& cfg) {
  cfg.validate();
  EncoderParams p;
  p.emb = from_tensor(tensors, kEmbName, cfg.vocab_size, cfg.hidden);
  if (!cfg.mixer && tensors.count(kAttQName)) {
    throw std::invalid_argument("from_tensors: checkpoint has attention tensors but the mixer is disabled");
  }
  if (cfg.mixer) {
    p.att_q = from_tensor(tensors, kAttQName, cfg.hidden, cfg.hidden);
    p.att_k = from_tensor(tensors, kAttKName, cfg.hidden, cfg.hidden);
    p.att_v = from_tensor(tensors, kAttVName, cfg.hidden, cfg.hidden);
  }
  p.proj = from_tensor(tensors, kProjName, cfg.hidden, cfg.out_dim);
  return p;
}

EncoderForward encode_forward(const TokenIds& tokens, const EncoderParams& params, const EncoderConfig& cfg,
                              bool is_query) {
  if (tokens.empty()) throw std::invalid_argument("encode: empty token list");
  if (!is_query && static_cast<int>(tokens.size()) > cfg.max_doc_len) {
    throw std::invalid_argument("encode: document longer than max_doc_len");
  }
  if (params.has_mixer() != cfg.mixer) throw std::invalid_argument("encode: params do not match mixer setting");
  const auto m = static_cast<Eigen::Index>(tokens.size());
  const Eigen::Index h = params.emb.cols();

  EncoderForward f;
  f.tokens = tokens;
  f.x.resize(m, h);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto id = tokens[static_cast<std::size_t>(i)];
    if (id < 0 || id >= params.emb.rows()) {
      throw std::invalid_argument("encode: token id " + std::to_string(id) + " outside vocabulary of size " +
                                  std::to_string(params.emb.rows()));
    }
    f.x.row(i) = params.emb.row(id);
  }

  if (params.has_mixer()) {
    f.q = f.x * params.att_q;
    f.k = f.x * params.att_k;
    f.v = f.x * params.att_v;
    const double scale = 1.0 / std::sqrt(static_cast<double>(h));
    f.attn = (f.q * f.k.transpose()) * scale;
    for (Eigen::Index i = 0; i < m; ++i) {
      auto row = f.attn.row(i);
      const double mx = row.maxCoeff();
      row = (row.array() - mx).exp();
      row /= row.sum();
    }
    f.h = f.attn * f.v;
  } else {
    f.h = f.x;
  }

  f.y = f.h * params.proj;
  f.norms = f.y.rowwise().norm();
  f.out = EmbeddingMatrix::normalize_rows(f.y);
  return f;
}

EmbeddingMatrix encode(const TokenIds& tokens, const EncoderParams& params, const EncoderConfig& cfg,
                       bool is_query) {
  return encode_forward(tokens, params, cfg, is_query).out;
}

void encode_backward_into(const EncoderForward& f, const EncoderParams& params, const Matrix& upstream,
                          EncoderParams& grads) {
  if (upstream.rows() != f.y.rows() || upstream.cols() != f.y.cols()) {
    throw std::invalid_argument("encode_backward: upstream gradient shape mismatch");
  }
  const Eigen::Index m = f.y.rows();

  // Row normalization: d(y/|y|) = (I - yhat yhat^T) / |y|.
  Matrix dy(m, f.y.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    const double n = f.norms(i);
    if (n < 1e-12) {
      dy.row(i) = upstream.row(i);
      continue;
    }
    const auto yhat = f.out.data().row(i);
    dy.row(i) = (upstream.row(i) - yhat.dot(upstream.row(i)) * yhat) / n;
  }

  grads.proj.noalias() += f.h.transpose() * dy;
  Matrix dh = dy * params.proj.transpose();

  Matrix dx;
  if (params.has_mixer()) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(params.emb.cols()));
    const Matrix dattn = dh * f.v.transpose();
    const Matrix dv = f.attn.transpose() * dh;
    // Row softmax: ds = a .* (da - rowsum(da .* a)).
    Matrix ds(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double dot = dattn.row(i).dot(f.attn.row(i));
      ds.row(i) = f.attn.row(i).array() * (dattn.row(i).array() - dot);
    }
    ds *= scale;
    const Matrix dq = ds * f.k;
    const Matrix dk = ds.transpose() * f.q;
    grads.att_q.noalias() += f.x.transpose() * dq;
    grads.att_k.noalias() += f.x.transpose() * dk;
    grads.att_v.noalias() += f.x.transpose() * dv;
    dx = dq * params.att_q.transpose() + dk * params.att_k.transpose() + dv * params.att_v.transpose();
  } else {
    dx = std::move(dh);
  }

  for (Eigen::Index i = 0; i < m; ++i) grads.emb.row(f.tokens[static_cast<std::size_t>(i)]) += dx.row(i);
}

EncoderParams encode_backward(const TokenIds& tokens, const EncoderParams& params, const EncoderConfig& cfg,
                              bool is_query, const Matrix& upstream) {
  const auto fwd = encode_forward(tokens, params, cfg, is_query);
  auto grads = params.zeros_like();
  encode_backward_into(fwd, params, upstream, grads);
  return grads;
}

TokenIds prepare_query(const TokenIds& tokens, const EncoderConfig& cfg) {
  return augment_query(tokens, cfg.aug_mode);
}

TokenIds prepare_document(const TokenIds& tokens, const EncoderConfig& cfg) {
  TokenIds out;
  out.reserve(std::min(tokens.size() + 1, static_cast<std::size_t>(cfg.max_doc_len)));
  out.push_back(Vocab::kDocMarker);
  for (auto id : tokens) {
    if (static_cast<int>(out.size()) >= cfg.max_doc_len) break;
    out.push_back(id);
  }
  return out;
}

}  // namespace liforge
