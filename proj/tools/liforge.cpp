// SPDX-License-Identifier: Apache-2.0
// liforge: command-line front end for the late-interaction training and
// evaluation pipeline.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "liforge/bm25.hpp"
#include "liforge/checkpoint.hpp"
#include "liforge/config.hpp"
#include "liforge/error.hpp"
#include "liforge/harness.hpp"
#include "liforge/io.hpp"
#include "liforge/metrics.hpp"
#include "liforge/search.hpp"
#include "liforge/training.hpp"
#include "liforge/triplets.hpp"

namespace fs = std::filesystem;
using namespace liforge;

namespace {

enum ExitCode { kOk = 0, kMissingInput = 2, kValidation = 3, kInternal = 4 };

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool deterministic = true;
};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return out;
}

int report(int code, const char* kind, const std::string& msg) {
  std::cerr << "error: code=" << code << " kind=" << kind << " msg=\"" << escape(msg) << "\"\n";
  return code;
}

// defaults < config file < LIFORGE_* environment < --set < dedicated flags
CliConfig load_config(const Globals& g) {
  CliConfig cfg;
  if (!g.config_path.empty()) config_apply_file(cfg, g.config_path);
  config_apply_env(cfg);
  for (const auto& o : g.overrides) config_apply_override(cfg, o);
  if (g.seed) {
    cfg.train.seed = *g.seed;
    cfg.synth.seed = *g.seed;
  }
  cfg.train.threads = g.threads;
  cfg.validate();
  return cfg;
}

std::string path_or(const CliConfig& cfg, const std::string& flag_value, const std::string& key) {
  if (!flag_value.empty()) return flag_value;
  auto it = cfg.paths.find(key);
  if (it != cfg.paths.end() && !it->second.empty()) return it->second;
  throw std::invalid_argument("missing required path: pass the flag or set paths." + key);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

std::string step_name(std::int64_t step) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "ckpt-%08lld.ckpt", static_cast<long long>(step));
  return buf;
}

// Encoder shape read back from a checkpoint; the remaining settings come from config.
EncoderParams params_from_checkpoint(const Checkpoint& ckpt, EncoderConfig& enc) {
  auto shape = [&](const char* name) -> const std::vector<std::int64_t>& {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) throw FormatError(std::string("tensors.") + name, "missing encoder tensor");
    if (it->second.shape.size() != 2) throw FormatError(std::string("tensors.") + name + ".shape", "expected a matrix");
    return it->second.shape;
  };
  enc.vocab_size = static_cast<int>(shape(kEmbName)[0]);
  enc.hidden = static_cast<int>(shape(kEmbName)[1]);
  enc.out_dim = static_cast<int>(shape(kProjName)[1]);
  enc.mixer = ckpt.tensors.count(kAttQName) > 0;
  enc.validate();
  return EncoderParams::from_tensors(ckpt.tensors, enc);
}

// "name path weight" triples for posttrain-mix.
MixSource parse_mix_source(const std::string& spec) {
  const auto eq = spec.find('=');
  const auto colon = spec.rfind(':');
  if (eq == std::string::npos || colon == std::string::npos || colon < eq) {
    throw std::invalid_argument("--source expects name=path:weight, got '" + spec + "'");
  }
  MixSource src;
  src.name = spec.substr(0, eq);
  const std::string path = spec.substr(eq + 1, colon - eq - 1);
  try {
    src.weight = std::stod(spec.substr(colon + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("--source " + spec + ": bad weight");
  }
  src.records = read_triplets(path);
  return src;
}

// Grid file: one cell per line, "name key=value key=value ...", '#' comments.
std::vector<AblationCell> read_grid(const std::string& path, const CliConfig& base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open grid " + path);
  std::vector<AblationCell> grid;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ss(line);
    std::string name;
    if (!(ss >> name)) continue;
    CliConfig cell = base;
    std::string kv;
    try {
      while (ss >> kv) config_apply_override(cell, kv);
      cell.validate();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    grid.push_back({name, cell.resolved_train()});
  }
  if (grid.empty()) throw std::invalid_argument("grid " + path + " has no cells");
  return grid;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument("--seeds: bad seed '" + item + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"liforge - late-interaction retrieval training and evaluation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  Globals g;
  app.add_option("--config", g.config_path, "key = value config file");
  app.add_option("--set", g.overrides, "Override one config key (key=value); repeatable");
  app.add_option("--seed", g.seed, "Seed for training and data generation");
  app.add_option("--threads", g.threads, "Worker threads; outputs do not depend on it")->check(CLI::PositiveNumber);
  app.add_flag("--deterministic,!--no-deterministic", g.deterministic,
               "Deterministic execution (default on; every code path is deterministic)");

  // synth
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus, queries, qrels and triplets");
  synth->add_option("-o,--out", synth_out, "Output directory");

  // dump-config
  auto* dump = app.add_subcommand("dump-config", "Print the effective configuration");

  // train
  std::string train_triplets, train_vocab, train_out, train_init;
  std::optional<std::int64_t> train_steps;
  auto* train_cmd = app.add_subcommand("train", "Distill a teacher into the encoder");
  train_cmd->add_option("--triplets", train_triplets, "Triplets JSON-lines");
  train_cmd->add_option("--vocab", train_vocab, "Vocabulary file (built from the triplets if absent)");
  train_cmd->add_option("--init", train_init, "Start from this checkpoint instead of a seeded init");
  train_cmd->add_option("--total-steps", train_steps, "Number of optimizer steps")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("-o,--out", train_out, "Output directory");

  // posttrain-mix
  std::vector<std::string> mix_sources;
  std::string mix_inject, mix_out;
  std::optional<std::int64_t> mix_total;
  auto* mix = app.add_subcommand("posttrain-mix", "Interleave triplet datasets by weight");
  mix->add_option("--source", mix_sources, "name=path:weight; repeatable")->required();
  mix->add_option("--inject", mix_inject, "path:fraction of pretraining triplets to reinject");
  mix->add_option("--total", mix_total, "Output record count");
  mix->add_option("-o,--out", mix_out, "Output triplets file")->required();

  // score
  std::string score_in, score_out, score_teachers, score_name = "ensemble";
  auto* score = app.add_subcommand("score", "Add min-max normalized ensemble teacher scores");
  score->add_option("--triplets", score_in, "Input triplets")->required();
  score->add_option("--teachers", score_teachers, "Comma-separated teacher names")->required();
  score->add_option("--name", score_name, "Teacher name for the ensembled score")->capture_default_str();
  score->add_option("-o,--out", score_out, "Output triplets")->required();

  // merge
  std::vector<std::string> merge_inputs;
  std::string merge_out;
  auto* merge = app.add_subcommand("merge", "Average checkpoints elementwise");
  merge->add_option("inputs", merge_inputs, "Checkpoints to average")->required();
  merge->add_option("-o,--out", merge_out, "Output checkpoint")->required();

  // index-bm25
  std::string idx_corpus, idx_out;
  auto* index = app.add_subcommand("index-bm25", "Build a BM25 index");
  index->add_option("--corpus", idx_corpus, "Corpus JSON-lines");
  index->add_option("-o,--out", idx_out, "Index file")->required();

  // mine-devset
  std::string mine_queries, mine_qrels, mine_corpus, mine_index, mine_out_corpus, mine_out_qrels;
  std::optional<int> mine_depth;
  auto* mine = app.add_subcommand("mine-devset", "BM25 top-depth plus all positives as a small dev corpus");
  mine->add_option("--queries", mine_queries, "Queries TSV");
  mine->add_option("--qrels", mine_qrels, "Qrels");
  mine->add_option("--corpus", mine_corpus, "Corpus JSON-lines");
  mine->add_option("--index", mine_index, "Prebuilt BM25 index (built from the corpus if absent)");
  mine->add_option("--depth", mine_depth, "BM25 depth per query")->check(CLI::PositiveNumber);
  mine->add_option("--out-corpus", mine_out_corpus, "Output corpus")->required();
  mine->add_option("--out-qrels", mine_out_qrels, "Output qrels")->required();

  // search
  std::string search_method = "maxsim", search_queries_path, search_corpus, search_index, search_ckpt, search_vocab,
              search_out, search_tag = "liforge";
  std::optional<int> search_k;
  auto* search = app.add_subcommand("search", "Retrieve with BM25 or exact MaxSim");
  search->add_option("--method", search_method, "bm25 or maxsim")->capture_default_str()->check(CLI::IsMember({"bm25", "maxsim"}));
  search->add_option("--queries", search_queries_path, "Queries TSV");
  search->add_option("--corpus", search_corpus, "Corpus JSON-lines");
  search->add_option("--index", search_index, "BM25 index (bm25 only; built from the corpus if absent)");
  search->add_option("--checkpoint", search_ckpt, "Encoder checkpoint (maxsim)");
  search->add_option("--vocab", search_vocab, "Vocabulary (maxsim)");
  search->add_option("-k,--k", search_k, "Results per query")->check(CLI::PositiveNumber);
  search->add_option("--tag", search_tag, "Run tag")->capture_default_str();
  search->add_option("-o,--out", search_out, "Output run")->required();

  // eval
  std::string eval_run, eval_qrels, eval_metrics;
  bool eval_json = false;
  auto* eval = app.add_subcommand("eval", "Score a run against qrels");
  eval->add_option("--run", eval_run, "TREC run")->required();
  eval->add_option("--qrels", eval_qrels, "TREC qrels");
  eval->add_option("--metrics", eval_metrics, "e.g. ndcg@10,mrr@10");
  eval->add_flag("--json", eval_json, "JSON-lines output");

  // ablate
  std::string ablate_grid, ablate_out, ablate_seeds;
  auto* ablate = app.add_subcommand("ablate", "Train and evaluate a grid of configs on synthetic data");
  ablate->add_option("--grid", ablate_grid, "Grid file: 'name key=value ...' per line (default: one cell)");
  ablate->add_option("--seeds", ablate_seeds, "Comma-separated training seeds; each cell runs once per seed");
  ablate->add_option("-o,--out", ablate_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(kMissingInput, "usage", e.what());
  }

  try {
    const CliConfig cfg = load_config(g);

    if (*dump) {
      std::cout << config_dump(cfg);

    } else if (*synth) {
      const auto dir = path_or(cfg, synth_out, "data_dir");
      const auto data = generate(cfg.synth);
      write_synth(dir, data);
      write_text((fs::path(dir) / "config.txt").string(), config_dump(cfg));
      std::cout << "wrote " << data.corpus.size() << " docs, " << data.queries.size() << "+" << data.heldout.size()
                << " queries, " << data.triplets.size() << " triplets to " << dir << "\n";

    } else if (*train_cmd) {
      const auto records = read_triplets(path_or(cfg, train_triplets, "triplets"));
      const auto out_dir = path_or(cfg, train_out, "out_dir");
      Vocab vocab;
      const std::string vocab_path = train_vocab.empty() ? (cfg.paths.count("vocab") ? cfg.paths.at("vocab") : "")
                                                         : train_vocab;
      if (!vocab_path.empty()) {
        vocab = Vocab::load(vocab_path);
      } else {
        std::vector<std::string> texts;
        for (const auto& r : records) {
          texts.push_back(r.query_text);
          for (const auto& d : r.docs) texts.push_back(d.text);
        }
        vocab = Vocab::build(texts);
      }
      TrainConfig tc = cfg.resolved_train();
      if (train_steps) tc.total_steps = *train_steps;
      tc.encoder.vocab_size = static_cast<int>(vocab.size());
      tc.validate();
      EncoderParams init;
      if (!train_init.empty()) {
        EncoderConfig enc = tc.encoder;
        init = params_from_checkpoint(load_checkpoint(train_init), enc);
        if (enc.vocab_size != tc.encoder.vocab_size || enc.hidden != tc.encoder.hidden ||
            enc.out_dim != tc.encoder.out_dim || enc.mixer != tc.encoder.mixer) {
          throw std::invalid_argument("--init checkpoint shape does not match the configured encoder");
        }
      } else {
        init = initial_params(tc);
      }
      const auto result = train(tc, records, vocab, init);
      fs::create_directories(out_dir);
      for (const auto& ck : result.checkpoints) {
        save_checkpoint(ck, (fs::path(out_dir) / step_name(ck.meta.step)).string());
      }
      write_loss_trace((fs::path(out_dir) / "loss.tsv").string(), result.trace);
      vocab.save((fs::path(out_dir) / "vocab.txt").string());
      write_text((fs::path(out_dir) / "config.txt").string(), config_dump(cfg));
      std::cout << "trained " << tc.total_steps << " steps; " << result.checkpoints.size() << " checkpoints, "
                << result.skipped_batches << " skipped batches\n";

    } else if (*mix) {
      MixSpec spec;
      for (const auto& s : mix_sources) spec.sources.push_back(parse_mix_source(s));
      if (!mix_inject.empty()) {
        const auto colon = mix_inject.rfind(':');
        if (colon == std::string::npos) throw std::invalid_argument("--inject expects path:fraction");
        PretrainInjection inj;
        try {
          inj.fraction = std::stod(mix_inject.substr(colon + 1));
        } catch (const std::exception&) {
          throw std::invalid_argument("--inject: bad fraction");
        }
        inj.records = read_triplets(mix_inject.substr(0, colon));
        spec.inject_pretrain = std::move(inj);
      }
      spec.total_records = mix_total;
      Rng rng(mix_seed(cfg.train.seed, 0x6d6978));
      const auto mixed = build_posttrain_mix(spec, rng);
      write_triplets(mix_out, mixed);
      std::cout << "wrote " << mixed.size() << " records to " << mix_out << "\n";

    } else if (*score) {
      auto records = read_triplets(score_in);
      std::vector<std::string> teachers;
      std::stringstream ss(score_teachers);
      for (std::string t; std::getline(ss, t, ',');) {
        if (!t.empty()) teachers.push_back(t);
      }
      if (teachers.empty()) throw std::invalid_argument("--teachers is empty");
      for (auto& r : records) {
        const auto ens = ensemble_teacher_scores(r, teachers);
        for (std::size_t i = 0; i < r.docs.size(); ++i) r.docs[i].teacher_scores[score_name] = ens[i];
      }
      write_triplets(score_out, records);

    } else if (*merge) {
      std::vector<Checkpoint> ckpts;
      for (const auto& p : merge_inputs) ckpts.push_back(load_checkpoint(p));
      save_checkpoint(average_checkpoints(ckpts), merge_out);

    } else if (*index) {
      const auto corpus = read_corpus(path_or(cfg, idx_corpus, "corpus"));
      Bm25Index::build(corpus, cfg.bm25).save(idx_out);

    } else if (*mine) {
      const auto queries = read_queries(path_or(cfg, mine_queries, "queries"));
      const auto qrels = read_qrels(path_or(cfg, mine_qrels, "qrels"));
      const auto corpus = read_corpus(path_or(cfg, mine_corpus, "corpus"));
      const auto idx = mine_index.empty() ? Bm25Index::build(corpus, cfg.bm25) : Bm25Index::load(mine_index);
      const auto mined = mine_small_devset(queries, qrels, corpus, idx,
                                           static_cast<std::size_t>(mine_depth.value_or(cfg.mine_depth)));
      write_corpus(mine_out_corpus, mined.corpus);
      write_qrels(mine_out_qrels, mined.qrels);
      std::cout << "mined " << mined.corpus.size() << " of " << corpus.size() << " docs\n";

    } else if (*search) {
      const auto queries = read_queries(path_or(cfg, search_queries_path, "queries"));
      const auto k = static_cast<std::size_t>(search_k.value_or(cfg.search_depth));
      RunList run;
      if (search_method == "bm25") {
        Bm25Index idx = search_index.empty() ? Bm25Index::build(read_corpus(path_or(cfg, search_corpus, "corpus")), cfg.bm25)
                                             : Bm25Index::load(search_index);
        for (const auto& q : queries) run[q.id] = idx.search(split_tokens(q.text), k);
      } else {
        const auto corpus = read_corpus(path_or(cfg, search_corpus, "corpus"));
        const auto vocab = Vocab::load(path_or(cfg, search_vocab, "vocab"));
        EncoderConfig enc = cfg.train.encoder;
        const auto params = params_from_checkpoint(load_checkpoint(path_or(cfg, search_ckpt, "checkpoint")), enc);
        const auto encoded = encode_corpus(corpus, vocab, params, enc, g.threads);
        run = search_queries(queries, vocab, params, enc, encoded, k, g.threads);
      }
      write_run(search_out, run, search_tag);

    } else if (*eval) {
      const auto run = read_run(eval_run);
      const auto qrels = read_qrels(path_or(cfg, eval_qrels, "qrels"));
      const auto report_ = evaluate_run(run, qrels, parse_metric_list(eval_metrics.empty() ? cfg.metrics : eval_metrics));
      std::cout << (eval_json ? report_.to_json_lines() : report_.to_table());

    } else if (*ablate) {
      const auto out_dir = path_or(cfg, ablate_out, "out_dir");
      std::vector<AblationCell> grid =
          ablate_grid.empty() ? std::vector<AblationCell>{{"base", cfg.resolved_train()}} : read_grid(ablate_grid, cfg);
      if (!ablate_seeds.empty()) {
        std::vector<AblationCell> expanded;
        for (const auto& cell : grid) {
          for (auto s : parse_seed_list(ablate_seeds)) {
            AblationCell c = cell;
            c.config.seed = s;
            c.name += "@seed" + std::to_string(s);
            expanded.push_back(std::move(c));
          }
        }
        grid = std::move(expanded);
      }
      const auto data = generate(cfg.synth);
      const auto result = run_ablation(grid, data, parse_metric_list(cfg.metrics), g.threads);
      write_ablation_outputs(out_dir, result);
      write_text((fs::path(out_dir) / "config.txt").string(), config_dump(cfg));
      std::cout << result.to_table();
    }
  } catch (const InputError& e) {
    return report(kMissingInput, "input", e.what());
  } catch (const FormatError& e) {
    return report(kValidation, "format", e.what());
  } catch (const DataError& e) {
    return report(kValidation, "data", e.what());
  } catch (const GenerationError& e) {
    return report(kValidation, "generation", e.what());
  } catch (const std::invalid_argument& e) {
    return report(kValidation, "validation", e.what());
  } catch (const TrainingError& e) {
    return report(kInternal, "training", e.what());
  } catch (const std::exception& e) {
    return report(kInternal, "internal", e.what());
  }
  return kOk;
}
