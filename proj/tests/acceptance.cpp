// SPDX-License-Identifier: Apache-2.0
// Acceptance gate: one PASS/FAIL line per criterion; nonzero exit on any FAIL.
#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <set>
#include <sstream>

#include "liforge/bm25.hpp"
#include "liforge/checkpoint.hpp"
#include "liforge/harness.hpp"
#include "liforge/losses.hpp"
#include "liforge/metrics.hpp"
#include "liforge/scoring.hpp"
#include "liforge/triplets.hpp"
#include "support.hpp"

using namespace liforge;

namespace {

// Tolerances.
constexpr double kGradTol = 1e-4;
constexpr int kGradInstances = 20;
constexpr double kMaxSimTol = 1e-6;
constexpr double kMetricTol = 1e-9;
constexpr double kAffineTol = 1e-9;
constexpr double kMeanTol = 1e-7;
constexpr double kGradSeconds = 120.0;
constexpr double kBenchmarkSeconds = 300.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Verdict gradients() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  auto cfg_for = [](LossKind kind) {
    LossConfig c;
    c.kind = kind;
    return c;
  };
  for (auto kind : {LossKind::KLDiv, LossKind::MarginMSE, LossKind::Mixed}) {
    for (int i = 0; i < kGradInstances; ++i) worst = std::max(worst, support::loss_grad_error(rng, cfg_for(kind)));
  }
  for (int i = 0; i < kGradInstances; ++i) worst = std::max(worst, support::ibneg_grad_error(rng, 2 + i % 5));
  for (int i = 0; i < kGradInstances; ++i) {
    worst = std::max(worst, support::encoder_grad_error(rng, i % 2 == 0, i % 4 < 2));
  }
  const double secs = seconds_since(t0);
  return {worst < kGradTol && secs < kGradSeconds,
          "max rel err " + fmt("%.2e", worst) + ", " + fmt("%.1f", secs) + "s"};
}

Verdict maxsim_oracle() {
  Rng rng(202);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) worst = std::max(worst, support::maxsim_oracle_error(rng));
  for (int i = 0; i < 50; ++i) worst = std::max(worst, support::exact_search_oracle_error(rng, 200));
  return {worst < kMaxSimTol, "max err " + fmt("%.2e", worst)};
}

std::vector<RunEntry> ranked(std::initializer_list<const char*> ids) {
  std::vector<RunEntry> out;
  double s = static_cast<double>(ids.size());
  for (const char* id : ids) out.push_back({id, s--});
  return out;
}

Verdict metric_oracle() {
  Rng rng(303);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) worst = std::max(worst, support::metrics_oracle_error(rng));
  const Judgments one{{"r", 1}}, two{{"a", 1}, {"b", 1}};
  const double rank2 = ndcg_at_k(ranked({"x", "r"}), one, 10);
  const double ranks13 = ndcg_at_k(ranked({"a", "x", "b"}), two, 10);
  const bool anchors = rank2 == 1.0 / std::log2(3.0) && ranks13 == 1.5 / (1.0 + 1.0 / std::log2(3.0));
  return {worst < kMetricTol && anchors, "max err " + fmt("%.2e", worst) + ", rank-2 " + fmt("%.6f", rank2) +
                                             ", ranks{1,3} " + fmt("%.6f", ranks13)};
}

Verdict recipe_invariances() {
  Rng rng(404);
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t n = 2 + rng.below(10);
    const double a = std::exp(rng.uniform(-3, 3)), b = rng.uniform(-10, 10);
    std::vector<double> s(n), s2(n);
    TripletRecord r, scaled;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.normal();
      s2[i] = a * s[i] + b;
      const double y = rng.normal();
      r.docs.push_back({std::to_string(i), "", {{"A", s[i]}, {"B", y}}});
      scaled.docs.push_back({std::to_string(i), "", {{"A", s2[i]}, {"B", y}}});
    }
    const auto x = minmax_normalize(s).values, x2 = minmax_normalize(s2).values;
    const auto e = ensemble_teacher_scores(r, {"A", "B"}), e2 = ensemble_teacher_scores(scaled, {"A", "B"});
    for (std::size_t i = 0; i < n; ++i) worst = std::max({worst, std::abs(x[i] - x2[i]), std::abs(e[i] - e2[i])});
  }
  const bool affine = worst < kAffineTol;

  // Final recipe on a small task: shuffled docs give the same loss sequence.
  SynthSpec spec;
  spec.n_docs = 150;
  spec.n_queries = 32;
  spec.heldout_queries = 4;
  spec.vocab_size = 200;
  spec.doc_len_min = 6;
  spec.doc_len_max = 12;
  const auto data = generate(spec);
  const auto vocab = synth_vocab(data);
  bool perm = true;
  for (bool mixer : {false, true}) {
    TrainConfig cfg = TrainConfig::desk_scale();
    cfg.encoder.vocab_size = static_cast<int>(vocab.size());
    cfg.encoder.hidden = 8;
    cfg.encoder.out_dim = 8;
    cfg.encoder.mixer = mixer;
    cfg.batch_size = 4;
    cfg.total_steps = 16;
    cfg.optim.lr = 1e-2;
    auto shuffled = data.triplets;
    Rng shuf(405);
    for (auto& rec : shuffled) shuf.shuffle(rec.docs);
    const auto init = initial_params(cfg);
    const auto a = train(cfg, data.triplets, vocab, init);
    const auto b = train(cfg, shuffled, vocab, init);
    perm = perm && a.trace.size() == b.trace.size();
    for (std::size_t i = 0; perm && i < a.trace.size(); ++i) perm = a.trace[i].loss == b.trace[i].loss;
  }

  const AugmentationMode dyn = DynamicLength{};
  const bool table = padded_query_length(10, dyn) == 32 && padded_query_length(30, dyn) == 38 &&
                     padded_query_length(32, dyn) == 40 && padded_query_length(57, dyn) == 65;
  return {affine && perm && table, "(a) max dev " + fmt("%.2e", worst) + ", (b) " + (perm ? "exact" : "differs") +
                                       ", (c) " + (table ? "table ok" : "table mismatch")};
}

Verdict checkpoint_algebra() {
  Rng rng(505);
  bool ok = true;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto c = support::random_checkpoint(rng);
    ok = ok && bitwise_equal(deserialize_checkpoint(serialize_checkpoint(c)), c);
    ok = ok && bitwise_equal(average_checkpoints({c, c, c}), c);
  }
  for (int t = 0; t < 50; ++t) {
    std::vector<Checkpoint> cs(3);
    for (auto& c : cs) {
      c.tensors["a"] = {{5}, {}};
      c.tensors["b"] = {{2, 3}, {}};
      for (auto& [name, ten] : c.tensors)
        for (std::int64_t k = 0; k < ten.element_count(); ++k) ten.values.push_back(static_cast<float>(rng.normal()));
    }
    const auto ref = average_checkpoints(cs);
    std::vector<int> idx{0, 1, 2};
    while (std::next_permutation(idx.begin(), idx.end())) {
      ok = ok && bitwise_equal(average_checkpoints({cs[idx[0]], cs[idx[1]], cs[idx[2]]}), ref);
    }
    for (const auto& [name, ten] : ref.tensors) {
      for (std::size_t k = 0; k < ten.values.size(); ++k) {
        const double mean = (static_cast<double>(cs[0].tensors.at(name).values[k]) + cs[1].tensors.at(name).values[k] +
                             cs[2].tensors.at(name).values[k]) /
                            3.0;
        worst = std::max(worst, std::abs(ten.values[k] - mean));
      }
    }
  }
  return {ok && worst < kMeanTol, "mean err " + fmt("%.2e", worst) + (ok ? ", bitwise checks ok" : ", bitwise mismatch")};
}

Verdict end_to_end() {
  std::ifstream in(LIFORGE_CALIBRATION_FILE);
  if (!in) return {false, "missing calibration file"};
  const auto cal = nlohmann::json::parse(in);
  const double margin = cal.at("margin").get<double>();
  const double tol = 0.01;
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (const auto& s : cal.at("seeds")) {
    const auto seed = s.at("seed").get<std::uint64_t>();
    const auto row = run_benchmark_seed(seed);
    const double init = row.initial.at("ndcg@10"), trained = row.trained.at("ndcg@10");
    const bool reproduced = std::abs(init - s.at("initial").get<double>()) <= tol &&
                            std::abs(trained - s.at("trained").get<double>()) <= tol;
    ok = ok && reproduced && trained - init >= margin && row.steps <= 2000;
    detail += "seed " + std::to_string(seed) + " " + fmt("%.4f", init) + "->" + fmt("%.4f", trained) + "; ";
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < kBenchmarkSeconds;
  return {ok, detail + "margin " + fmt("%.4f", margin) + ", " + fmt("%.1f", secs) + "s"};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LIFORGE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  const auto dir = support::fresh_dir("acceptance_ablate");
  std::ofstream(dir + "/grid.txt") << "kl loss.kind=kldiv\nmmse loss.kind=marginmse\nfixed encoder.aug_mode=fixed:8\n";
  const std::string common =
      "--set synth.n_docs=200 --set synth.n_queries=40 --set synth.heldout_queries=10 --set synth.vocab_size=200 "
      "--set synth.doc_len_min=8 --set synth.doc_len_max=14 --set train.batch_size=4 --set train.total_steps=20 "
      "--set train.checkpoint_every=10 --set encoder.hidden=16 --set encoder.out_dim=8 --set optim.lr=0.005";
  std::vector<std::string> outs;
  for (int threads : {1, 4}) {
    for (int rep = 0; rep < 2; ++rep) {
      const auto out = dir + "/t" + std::to_string(threads) + "_" + std::to_string(rep);
      if (run_cli(common + " --threads " + std::to_string(threads) + " ablate --grid " + dir + "/grid.txt -o " + out) !=
          0) {
        return {false, "ablate failed at threads " + std::to_string(threads)};
      }
      outs.push_back(out);
    }
  }
  std::size_t compared = 0;
  for (const auto& entry : std::filesystem::directory_iterator(outs[0])) {
    const auto name = entry.path().filename();
    if (name != "table.tsv" && entry.path().extension() != ".ckpt") continue;
    const auto ref = slurp(entry.path());
    for (std::size_t i = 1; i < outs.size(); ++i) {
      if (slurp(std::filesystem::path(outs[i]) / name) != ref) return {false, name.string() + " differs"};
    }
    ++compared;
  }
  return {compared == 4, std::to_string(compared) + " files identical across 4 runs (threads 1 and 4)"};
}

Verdict mining_contract() {
  Rng rng(808);
  for (int t = 0; t < 100; ++t) {
    const int n_docs = 10 + static_cast<int>(rng.below(80));
    const int vocab = 5 + static_cast<int>(rng.below(40));
    std::vector<Document> corpus;
    for (int d = 0; d < n_docs; ++d) {
      std::string text;
      const int len = 1 + static_cast<int>(rng.below(8));
      for (int w = 0; w < len; ++w) text += "w" + std::to_string(rng.below(vocab)) + " ";
      corpus.push_back({"d" + std::to_string(d), text});
    }
    std::vector<Query> queries;
    Qrels qrels;
    const int n_queries = 1 + static_cast<int>(rng.below(8));
    for (int q = 0; q < n_queries; ++q) {
      const auto qid = "q" + std::to_string(q);
      queries.push_back({qid, "w" + std::to_string(rng.below(vocab)) + " w" + std::to_string(rng.below(vocab))});
      const int judged = static_cast<int>(rng.below(5));
      for (int k = 0; k < judged; ++k) qrels[qid]["d" + std::to_string(rng.below(n_docs))] = static_cast<int>(rng.below(3));
    }
    std::set<std::string> positives;
    for (const auto& [q, docs] : qrels)
      for (const auto& [d, g] : docs)
        if (g > 0) positives.insert(d);
    const std::size_t depth = 1 + rng.below(12);
    const auto mined = mine_small_devset(queries, qrels, corpus, Bm25Index::build(corpus), depth);
    std::set<std::string> ids;
    for (const auto& d : mined.corpus) ids.insert(d.id);
    for (const auto& p : positives)
      if (!ids.count(p)) return {false, "instance " + std::to_string(t) + " dropped positive " + p};
    if (mined.corpus.size() > queries.size() * depth + positives.size()) {
      return {false, "instance " + std::to_string(t) + " exceeds the cardinality bound"};
    }
  }
  return {true, "100 random instances"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gradient suite", gradients},
      {"maxsim oracle", maxsim_oracle},
      {"metric oracle", metric_oracle},
      {"recipe invariances", recipe_invariances},
      {"checkpoint algebra", checkpoint_algebra},
      {"end-to-end synthetic distillation", end_to_end},
      {"ablate determinism", determinism},
      {"dev-set mining contract", mining_contract},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::printf("%s %zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
