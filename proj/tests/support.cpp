// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

#include "liforge/encoder.hpp"
#include "liforge/metrics.hpp"
#include "liforge/scoring.hpp"
#include "liforge/search.hpp"
#include "oracles.hpp"

namespace support {

using namespace liforge;

std::vector<double> separated_scores(Rng& rng, std::size_t n, double lo, double hi, double min_gap) {
  for (;;) {
    std::vector<double> s(n);
    for (auto& x : s) x = rng.uniform(lo, hi);
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (std::abs(s[i] - s[j]) < min_gap) {
          ok = false;
          break;
        }
      }
    }
    if (ok) return s;
  }
}

double loss_grad_error(Rng& rng, const LossConfig& cfg) {
  const std::size_t n = 2 + rng.below(7);
  const auto student = separated_scores(rng, n, -3.0, 3.0, 0.05);
  const auto teacher = separated_scores(rng, n, -2.0, 2.0, 0.05);
  const auto analytic = distillation_loss(student, teacher, cfg).grad;
  const auto numeric =
      oracle::fd_gradient([&](const std::vector<double>& s) { return distillation_loss(s, teacher, cfg).loss; }, student);
  return oracle::relative_error(analytic, numeric);
}

double ibneg_grad_error(Rng& rng, int b) {
  Matrix m(b, b);
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < b; ++j) m(i, j) = rng.uniform(-3.0, 3.0);
  const Matrix analytic = ibneg_loss(m).grad;
  std::vector<double> flat(m.data(), m.data() + m.size());
  const auto numeric = oracle::fd_gradient(
      [&](const std::vector<double>& x) {
        Matrix p = Eigen::Map<const Matrix>(x.data(), b, b);
        return ibneg_loss(p).loss;
      },
      flat);
  return oracle::relative_error(std::vector<double>(analytic.data(), analytic.data() + analytic.size()), numeric);
}

Matrix random_rows(Rng& rng, int rows, int dim) {
  Matrix m(rows, dim);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = rng.normal();
  return m;
}

EmbeddingMatrix random_embedding(Rng& rng, int rows, int dim) {
  return EmbeddingMatrix::normalize_rows(random_rows(rng, rows, dim));
}

double encoder_grad_error(Rng& rng, bool mixer, bool is_query) {
  EncoderConfig cfg;
  cfg.vocab_size = 8 + static_cast<int>(rng.below(8));
  cfg.hidden = 3 + static_cast<int>(rng.below(3));
  cfg.out_dim = 2 + static_cast<int>(rng.below(3));
  cfg.mixer = mixer;
  cfg.aug_mode = NoAugmentation{};
  EncoderParams params = EncoderParams::init(cfg, rng);
  if (mixer) {
    // sharper attention than the init gives, so the softmax path matters
    params.att_q *= 3.0 * cfg.hidden;
    params.att_k *= 3.0 * cfg.hidden;
    params.att_v *= cfg.hidden;
  }
  TokenIds tokens;
  const int m = 2 + static_cast<int>(rng.below(5));
  if (is_query) {
    tokens.push_back(3);  // [Q]
    for (int i = 1; i < m; ++i) tokens.push_back(rng.uniform() < 0.3 ? 1 : static_cast<std::int32_t>(5 + rng.below(cfg.vocab_size - 5)));
  } else {
    tokens.push_back(4);  // [D]
    for (int i = 1; i < m; ++i) tokens.push_back(static_cast<std::int32_t>(5 + rng.below(cfg.vocab_size - 5)));
  }
  const Matrix upstream = random_rows(rng, m, cfg.out_dim);
  const EncoderParams grads = encode_backward(tokens, params, cfg, is_query, upstream);

  std::vector<double> analytic, numeric;
  auto objective = [&](const EncoderParams& p) {
    return encode(tokens, p, cfg, is_query).data().cwiseProduct(upstream).sum();
  };
  EncoderParams probe = params;
  auto pviews = probe.views();
  auto gviews = grads.views();
  constexpr double eps = 1e-4;
  for (std::size_t t = 0; t < pviews.size(); ++t) {
    for (std::size_t i = 0; i < pviews[t].size(); ++i) {
      const double orig = pviews[t][i];
      pviews[t][i] = orig + eps;
      const double up = objective(probe);
      pviews[t][i] = orig - eps;
      const double down = objective(probe);
      pviews[t][i] = orig;
      numeric.push_back((up - down) / (2 * eps));
      analytic.push_back(gviews[t][i]);
    }
  }
  return oracle::relative_error(analytic, numeric);
}

namespace {

oracle::Rows to_rows(const EmbeddingMatrix& e) {
  oracle::Rows r(static_cast<std::size_t>(e.rows()));
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    for (Eigen::Index j = 0; j < e.dim(); ++j) r[i].push_back(e.data()(i, j));
  }
  return r;
}

}  // namespace

double maxsim_oracle_error(Rng& rng) {
  const int dim = 1 + static_cast<int>(rng.below(16));
  const auto q = random_embedding(rng, 1 + static_cast<int>(rng.below(32)), dim);
  const auto d = random_embedding(rng, 1 + static_cast<int>(rng.below(64)), dim);
  return std::abs(maxsim(q, d) - oracle::maxsim(to_rows(q), to_rows(d)));
}

double exact_search_oracle_error(Rng& rng, int n_docs) {
  const int dim = 8;
  std::vector<std::string> ids;
  std::vector<EmbeddingMatrix> docs;
  // ids in shuffled order so id order and insertion order differ
  std::vector<int> perm(n_docs);
  for (int i = 0; i < n_docs; ++i) perm[i] = i;
  rng.shuffle(perm);
  for (int i = 0; i < n_docs; ++i) {
    ids.push_back("doc" + std::to_string(1000 + perm[i]));
    docs.push_back(random_embedding(rng, 1 + static_cast<int>(rng.below(8)), dim));
  }
  const auto query = random_embedding(rng, 1 + static_cast<int>(rng.below(6)), dim);
  const std::size_t k = 1 + rng.below(static_cast<std::uint64_t>(n_docs) + 50);
  const EncodedCorpus corpus(ids, docs);
  const auto got = exact_search(query, corpus, k);

  std::vector<std::pair<std::string, double>> scored;
  const auto q_rows = to_rows(query);
  for (int i = 0; i < n_docs; ++i) scored.emplace_back(ids[i], oracle::maxsim(q_rows, to_rows(docs[i])));
  const auto want = oracle::full_sort(scored, k);
  if (got.size() != want.size()) return std::numeric_limits<double>::infinity();
  double err = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (got[i].doc_id != want[i].first) return std::numeric_limits<double>::infinity();
    err = std::max(err, std::abs(got[i].score - want[i].second));
  }
  return err;
}

double metrics_oracle_error(Rng& rng) {
  const int n_queries = 1 + static_cast<int>(rng.below(10));
  RunList run;
  Qrels qrels;
  for (int q = 0; q < n_queries; ++q) {
    const std::string qid = "q" + std::to_string(q);
    const int n_docs = 1 + static_cast<int>(rng.below(20));
    auto& entries = run[qid];
    auto& judged = qrels[qid];
    for (int d = 0; d < n_docs; ++d) {
      const std::string did = "d" + std::to_string(rng.below(1000));
      if (std::any_of(entries.begin(), entries.end(), [&](const RunEntry& e) { return e.doc_id == did; })) continue;
      // coarse scores so ties (broken by doc id) show up
      entries.push_back({did, std::round(rng.uniform(0.0, 5.0) * 2.0) / 2.0});
      if (rng.uniform() < 0.4) judged[did] = static_cast<int>(rng.below(4));
    }
    // judged docs the run never retrieved
    for (int extra = static_cast<int>(rng.below(3)); extra > 0; --extra) {
      judged["u" + std::to_string(rng.below(1000))] = static_cast<int>(rng.below(3));
    }
  }
  std::vector<MetricSpec> specs;
  for (auto kind : {MetricKind::NDCG, MetricKind::NDCGExp, MetricKind::MRR, MetricKind::Recall, MetricKind::MAP,
                    MetricKind::HitRate}) {
    specs.push_back({kind, 1 + static_cast<int>(rng.below(25))});
  }
  const auto report = evaluate_run(run, qrels, specs);

  double err = 0.0;
  std::set<std::string> excluded(report.excluded_queries.begin(), report.excluded_queries.end());
  for (const auto& [qid, entries] : run) {
    const auto& judged = qrels.at(qid);
    const bool empty = oracle::n_relevant(judged) == 0;
    if (empty != (excluded.count(qid) == 1)) return std::numeric_limits<double>::infinity();
    if (empty) continue;
    std::vector<std::pair<std::string, double>> scored;
    for (const auto& e : entries) scored.emplace_back(e.doc_id, e.score);
    std::vector<std::string> ranked;
    for (const auto& [d, s] : oracle::full_sort(scored, scored.size())) ranked.push_back(d);
    for (const auto& spec : specs) {
      double want = 0.0;
      switch (spec.kind) {
        case MetricKind::NDCG: want = oracle::ndcg(ranked, judged, spec.k, false); break;
        case MetricKind::NDCGExp: want = oracle::ndcg(ranked, judged, spec.k, true); break;
        case MetricKind::MRR: want = oracle::mrr(ranked, judged, spec.k); break;
        case MetricKind::Recall: want = oracle::recall(ranked, judged, spec.k); break;
        case MetricKind::MAP: want = oracle::map_k(ranked, judged, spec.k); break;
        case MetricKind::HitRate: want = oracle::hit_rate(ranked, judged, spec.k); break;
      }
      const auto& per_query = report.metrics.at(spec.name()).per_query;
      if (!per_query.count(qid)) return std::numeric_limits<double>::infinity();
      err = std::max(err, std::abs(per_query.at(qid) - want));
    }
  }
  // means are plain averages of the per-query values
  for (const auto& [name, value] : report.metrics) {
    double sum = 0.0;
    for (const auto& [q, v] : value.per_query) sum += v;
    if (!value.per_query.empty()) err = std::max(err, std::abs(value.mean - sum / value.per_query.size()));
  }
  return err;
}

Checkpoint random_checkpoint(Rng& rng) {
  Checkpoint c;
  const int n = static_cast<int>(rng.below(6));
  for (int t = 0; t < n; ++t) {
    Tensor tensor;
    const int dims = static_cast<int>(rng.below(5));  // 0..4, 0 = scalar
    std::int64_t count = 1;
    for (int d = 0; d < dims; ++d) {
      tensor.shape.push_back(static_cast<std::int64_t>(rng.below(5)));
      count *= tensor.shape.back();
    }
    for (std::int64_t i = 0; i < count; ++i) {
      switch (rng.below(6)) {
        case 0: tensor.values.push_back(0.0f); break;
        case 1: tensor.values.push_back(-0.0f); break;
        case 2: tensor.values.push_back(std::numeric_limits<float>::denorm_min() * static_cast<float>(1 + rng.below(1000))); break;
        default: tensor.values.push_back(static_cast<float>(rng.normal() * 100.0)); break;
      }
    }
    c.tensors["t" + std::to_string(rng.below(100000))] = std::move(tensor);
  }
  c.meta.step = static_cast<std::int64_t>(rng.below(100000));
  c.meta.seed = static_cast<std::int64_t>(rng.below(1000));
  c.meta.config_digest = "digest" + std::to_string(rng.below(100));
  return c;
}

std::string fresh_dir(const std::string& name) {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / ("liforge_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

}  // namespace support
