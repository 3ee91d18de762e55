// SPDX-License-Identifier: Apache-2.0
#include "liforge/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "liforge/error.hpp"
#include "liforge/io.hpp"
#include "liforge/rng.hpp"
#include "liforge/search.hpp"

namespace liforge {
namespace {

// Substreams so that changing one SynthSpec field does not reshuffle the rest.
constexpr std::uint64_t kTopicStream = 1;
constexpr std::uint64_t kDocStream = 2;
constexpr std::uint64_t kQueryStream = 3;
constexpr std::uint64_t kNegativeStream = 4;
constexpr std::uint64_t kTeacherStream = 5;
constexpr std::uint64_t kInitStream = 0x696e6974;

std::vector<double> unit_gaussian(Rng& rng, int dim) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm = 0.0;
  // a zero draw is practically impossible, but keep retrying rather than divide by 0
  while (norm == 0.0) {
    norm = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::string padded_id(char prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%06zu", prefix, i);
  return buf;
}

// Token bag of length `len` drawn from softmax(kappa * cos(token, center)).
std::string sample_text(Rng& rng, const std::vector<std::vector<double>>& topics,
                        const std::vector<std::string>& names, const std::vector<double>& center, double kappa,
                        int len) {
  std::vector<double> cdf(topics.size());
  double total = 0.0;
  for (std::size_t t = 0; t < topics.size(); ++t) {
    total += std::exp(kappa * (dot(topics[t], center) - 1.0));
    cdf[t] = total;
  }
  std::string text;
  for (int i = 0; i < len; ++i) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto t = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), topics.size() - 1);
    if (!text.empty()) text += ' ';
    text += names[t];
  }
  return text;
}

int draw_length(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))); }

std::string file_stem(const std::string& name) {
  std::string out;
  for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
  return out.empty() ? "cell" : out;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void SynthSpec::validate() const {
  if (vocab_size < 1 || n_docs < 1 || n_queries < 1 || topic_dim < 1 || n_way < 2) {
    throw std::invalid_argument("synth: vocab_size, n_docs, n_queries, topic_dim must be >= 1 and n_way >= 2");
  }
  if (heldout_queries < 0) throw std::invalid_argument("synth: heldout_queries must be >= 0");
  if (doc_len_min < 1 || doc_len_max < doc_len_min) throw std::invalid_argument("synth: bad doc length range");
  if (query_len_min < 1 || query_len_max < query_len_min) throw std::invalid_argument("synth: bad query length range");
  if (!(teacher_noise_sigma >= 0.0)) throw std::invalid_argument("synth: teacher_noise_sigma must be >= 0");
  if (!(concentration >= 0.0) || !(query_spread >= 0.0)) {
    throw std::invalid_argument("synth: concentration and query_spread must be >= 0");
  }
}

SynthData generate(const SynthSpec& spec) {
  spec.validate();
  const Rng root(spec.seed);
  const auto n_docs = static_cast<std::size_t>(spec.n_docs);
  const auto n_total_queries = static_cast<std::size_t>(spec.n_queries + spec.heldout_queries);

  Rng topic_rng = root.fork(kTopicStream);
  std::vector<std::vector<double>> topics;
  std::vector<std::string> names;
  for (int t = 0; t < spec.vocab_size; ++t) {
    topics.push_back(unit_gaussian(topic_rng, spec.topic_dim));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "w%04d", t);
    names.emplace_back(buf);
  }

  SynthData data;
  Rng doc_rng = root.fork(kDocStream);
  std::vector<std::vector<double>> doc_centers;
  for (std::size_t i = 0; i < n_docs; ++i) {
    doc_centers.push_back(unit_gaussian(doc_rng, spec.topic_dim));
    const int len = draw_length(doc_rng, spec.doc_len_min, spec.doc_len_max);
    data.corpus.push_back({padded_id('d', i), sample_text(doc_rng, topics, names, doc_centers.back(), spec.concentration, len)});
  }

  Rng query_rng = root.fork(kQueryStream);
  std::vector<std::vector<double>> query_centers;
  std::vector<Query> all_queries;
  for (std::size_t i = 0; i < n_total_queries; ++i) {
    const auto anchor = static_cast<std::size_t>(query_rng.below(n_docs));
    auto center = doc_centers[anchor];
    const auto noise = unit_gaussian(query_rng, spec.topic_dim);
    double norm = 0.0;
    for (std::size_t k = 0; k < center.size(); ++k) {
      center[k] += spec.query_spread * noise[k];
      norm += center[k] * center[k];
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) throw GenerationError("query " + std::to_string(i) + " has a degenerate topic center");
    for (auto& x : center) x /= norm;
    query_centers.push_back(center);
    const int len = draw_length(query_rng, spec.query_len_min, spec.query_len_max);
    all_queries.push_back({padded_id('q', i), sample_text(query_rng, topics, names, center, spec.concentration, len)});
  }

  // Latent cosine of every (query, doc) pair, docs ranked per query.
  std::vector<std::vector<double>> cosines(n_total_queries, std::vector<double>(n_docs));
  std::vector<std::vector<std::size_t>> ranked(n_total_queries);
  std::vector<double> third_best;
  for (std::size_t q = 0; q < n_total_queries; ++q) {
    for (std::size_t d = 0; d < n_docs; ++d) cosines[q][d] = dot(query_centers[q], doc_centers[d]);
    auto& order = ranked[q];
    order.resize(n_docs);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return cosines[q][a] > cosines[q][b]; });
    third_best.push_back(cosines[q][order[std::min<std::size_t>(2, n_docs - 1)]]);
  }
  std::vector<double> sorted_third = third_best;
  std::sort(sorted_third.begin(), sorted_third.end());
  const std::size_t mid = sorted_third.size() / 2;
  data.threshold =
      sorted_third.size() % 2 == 1 ? sorted_third[mid] : 0.5 * (sorted_third[mid - 1] + sorted_third[mid]);

  // 1..5 positives per query: those above the threshold, at least the best match.
  constexpr std::size_t kMaxPositives = 5;
  std::vector<std::vector<std::size_t>> positives(n_total_queries);
  for (std::size_t q = 0; q < n_total_queries; ++q) {
    for (std::size_t r = 0; r < n_docs && r < kMaxPositives; ++r) {
      const auto d = ranked[q][r];
      if (r == 0 || cosines[q][d] >= data.threshold) positives[q].push_back(d);
    }
    if (n_docs - positives[q].size() + 1 < static_cast<std::size_t>(spec.n_way)) {
      throw GenerationError("query " + all_queries[q].id + ": not enough non-relevant docs for n_way=" +
                            std::to_string(spec.n_way));
    }
    for (auto d : positives[q]) data.qrels[all_queries[q].id][data.corpus[d].id] = 1;
  }

  data.queries.assign(all_queries.begin(), all_queries.begin() + spec.n_queries);
  data.heldout.assign(all_queries.begin() + spec.n_queries, all_queries.end());

  // One record per (training query, positive) with uniformly drawn negatives.
  Rng neg_rng = root.fork(kNegativeStream);
  Rng teacher_rng = root.fork(kTeacherStream);
  for (std::size_t q = 0; q < static_cast<std::size_t>(spec.n_queries); ++q) {
    std::set<std::size_t> pos_set(positives[q].begin(), positives[q].end());
    std::vector<std::size_t> negatives;
    for (std::size_t d = 0; d < n_docs; ++d) {
      if (!pos_set.count(d)) negatives.push_back(d);
    }
    for (auto p : positives[q]) {
      TripletRecord rec;
      rec.query_id = all_queries[q].id;
      rec.query_text = all_queries[q].text;
      std::vector<std::size_t> docs{p};
      for (auto i : sample_without_replacement(neg_rng, negatives.size(), static_cast<std::size_t>(spec.n_way - 1))) {
        docs.push_back(negatives[i]);
      }
      for (auto d : docs) {
        ScoredDoc sd;
        sd.doc_id = data.corpus[d].id;
        sd.text = data.corpus[d].text;
        sd.teacher_scores["oracle"] = cosines[q][d] + spec.teacher_noise_sigma * teacher_rng.normal();
        rec.docs.push_back(std::move(sd));
      }
      data.triplets.push_back(std::move(rec));
    }
  }
  return data;
}

Vocab synth_vocab(const SynthData& data) {
  std::vector<std::string> texts;
  for (const auto& d : data.corpus) texts.push_back(d.text);
  for (const auto& q : data.queries) texts.push_back(q.text);
  for (const auto& q : data.heldout) texts.push_back(q.text);
  return Vocab::build(texts);
}

Qrels restrict_qrels(const Qrels& qrels, const std::vector<Query>& queries) {
  Qrels out;
  for (const auto& q : queries) {
    auto it = qrels.find(q.id);
    if (it != qrels.end()) out[q.id] = it->second;
  }
  return out;
}

void write_synth(const std::string& dir, const SynthData& data) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  write_corpus((base / "corpus.jsonl").string(), data.corpus);
  write_queries((base / "queries.tsv").string(), data.queries);
  write_queries((base / "heldout.tsv").string(), data.heldout);
  write_qrels((base / "qrels.txt").string(), restrict_qrels(data.qrels, data.queries));
  write_qrels((base / "heldout_qrels.txt").string(), restrict_qrels(data.qrels, data.heldout));
  write_triplets((base / "triplets.jsonl").string(), data.triplets);
  synth_vocab(data).save((base / "vocab.txt").string());
}

EncoderParams initial_params(const TrainConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, kInitStream));
  return EncoderParams::init(cfg.encoder, rng);
}

MetricReport evaluate_encoder(const SynthData& data, const Vocab& vocab, const EncoderParams& params,
                              const EncoderConfig& cfg, const std::vector<MetricSpec>& metrics, int threads) {
  if (data.heldout.empty()) throw std::invalid_argument("evaluate_encoder: no held-out queries");
  int depth = 1;
  for (const auto& m : metrics) depth = std::max(depth, m.k);
  const auto corpus = encode_corpus(data.corpus, vocab, params, cfg, threads);
  const auto run = search_queries(data.heldout, vocab, params, cfg, corpus, static_cast<std::size_t>(depth), threads);
  return evaluate_run(run, restrict_qrels(data.qrels, data.heldout), metrics);
}

AblationResult run_ablation(const std::vector<AblationCell>& grid, const SynthData& data,
                            const std::vector<MetricSpec>& metrics, int threads) {
  if (grid.empty()) throw std::invalid_argument("run_ablation: empty grid");
  if (metrics.empty()) throw std::invalid_argument("run_ablation: no metrics");
  const Vocab vocab = synth_vocab(data);
  AblationResult result;
  for (const auto& m : metrics) result.metric_order.push_back(m.name());

  for (const auto& cell : grid) {
    TrainConfig cfg = cell.config;
    cfg.encoder.vocab_size = static_cast<int>(vocab.size());
    cfg.threads = threads;
    // Records come from the generator, so their width wins over train.n_way.
    if (!data.triplets.empty()) cfg.n_way = static_cast<int>(data.triplets.front().docs.size());
    cfg.validate();
    const EncoderParams init = initial_params(cfg);

    AblationRow row;
    row.name = cell.name;
    row.seed = cfg.seed;
    row.steps = cfg.total_steps;
    const auto before = evaluate_encoder(data, vocab, init, cfg.encoder, metrics, threads);
    auto trained = train(cfg, data.triplets, vocab, init);
    const auto after = evaluate_encoder(data, vocab, trained.final_params, cfg.encoder, metrics, threads);
    for (const auto& name : result.metric_order) {
      row.initial[name] = before.metrics.at(name).mean;
      row.trained[name] = after.metrics.at(name).mean;
    }
    row.final_checkpoint = make_checkpoint(trained.final_params, cfg, cfg.total_steps);
    row.trace = std::move(trained.trace);
    row.skipped_batches = trained.skipped_batches;
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::string AblationResult::to_table() const {
  std::ostringstream os;
  os << "config\tseed\tsteps";
  for (const auto& m : metric_order) os << '\t' << m;
  for (const auto& m : metric_order) os << "\tgain_" << m;
  os << '\n';
  for (const auto& row : rows) {
    os << row.name << '\t' << row.seed << '\t' << row.steps;
    for (const auto& m : metric_order) os << '\t' << fixed(row.trained.at(m));
    for (const auto& m : metric_order) os << '\t' << fixed(row.trained.at(m) - row.initial.at(m));
    os << '\n';
  }
  return os.str();
}

SynthSpec benchmark_synth_spec() {
  SynthSpec spec;
  spec.seed = 0;
  spec.n_docs = 2000;
  spec.n_queries = 500;
  spec.heldout_queries = 100;
  spec.n_way = 4;
  spec.teacher_noise_sigma = 0.05;
  return spec;
}

TrainConfig benchmark_train_config(std::uint64_t seed) {
  TrainConfig cfg = TrainConfig::desk_scale();
  cfg.seed = seed;
  cfg.total_steps = 2000;
  cfg.checkpoint_every = 500;
  // Without a residual path the attention mixer pools every row toward the
  // sequence mean, which trains poorly here; token-level rows work well.
  cfg.encoder.mixer = false;
  cfg.optim.lr = 1e-3;
  return cfg;
}

AblationRow run_benchmark_seed(std::uint64_t seed, int threads) {
  const auto data = generate(benchmark_synth_spec());
  auto result = run_ablation({{"benchmark", benchmark_train_config(seed)}}, data, {MetricSpec::parse("ndcg@10")}, threads);
  return std::move(result.rows.front());
}

void write_ablation_outputs(const std::string& dir, const AblationResult& result) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  {
    std::ofstream out(base / "table.tsv", std::ios::binary);
    if (!out) throw InputError("cannot write " + (base / "table.tsv").string());
    out << result.to_table();
  }
  std::set<std::string> used;
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& row = result.rows[i];
    std::string stem = file_stem(row.name);
    if (!used.insert(stem).second) stem += "_" + std::to_string(i);
    used.insert(stem);
    save_checkpoint(row.final_checkpoint, (base / (stem + ".ckpt")).string());
    write_loss_trace((base / (stem + ".trace.tsv")).string(), row.trace);
  }
}

}  // namespace liforge
