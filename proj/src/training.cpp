// SPDX-License-Identifier: Apache-2.0
#include "liforge/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "liforge/error.hpp"
#include "liforge/io.hpp"
#include "liforge/parallel.hpp"
#include "liforge/scoring.hpp"
#include "liforge/triplets.hpp"

namespace liforge {
namespace {

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct RecordForward {
  EncoderForward query;
  std::vector<EncoderForward> docs;
  std::vector<std::vector<Eigen::Index>> argmax;
  std::vector<double> scores;
};

}  // namespace

TrainConfig TrainConfig::desk_scale() {
  TrainConfig cfg;
  cfg.n_way = 4;
  cfg.encoder.hidden = 32;
  cfg.encoder.out_dim = 32;
  return cfg;
}

void TrainConfig::validate() const {
  if (n_way < 2) throw std::invalid_argument("train: n_way must be >= 2");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (checkpoint_every < 1) throw std::invalid_argument("train: checkpoint_every must be >= 1");
  if (total_steps < 0) throw std::invalid_argument("train: total_steps must be >= 0");
  if (teachers.empty()) throw std::invalid_argument("train: at least one teacher is required");
  if (loss.ibneg_enabled && batch_size < 2) throw std::invalid_argument("train: in-batch negatives need batch_size >= 2");
  loss.validate();
  optim.validate();
  encoder.validate();
}

std::string TrainConfig::canonical_text() const {
  std::ostringstream os;
  std::string teacher_list;
  for (const auto& t : teachers) teacher_list += (teacher_list.empty() ? "" : ",") + t;
  os << "encoder.aug_mode=" << to_string(encoder.aug_mode) << '\n'
     << "encoder.hidden=" << encoder.hidden << '\n'
     << "encoder.max_doc_len=" << encoder.max_doc_len << '\n'
     << "encoder.mixer=" << (encoder.mixer ? "true" : "false") << '\n'
     << "encoder.out_dim=" << encoder.out_dim << '\n'
     << "encoder.vocab_size=" << encoder.vocab_size << '\n'
     << "loss.ibneg=" << (loss.ibneg_enabled ? "true" : "false") << '\n'
     << "loss.kind=" << to_string(loss.kind) << '\n'
     << "loss.mmse_lambda=" << format_double(loss.mmse_lambda) << '\n'
     << "loss.normalize_student=" << (loss.normalize_student ? "true" : "false") << '\n'
     << "loss.normalize_teacher=" << (loss.normalize_teacher ? "true" : "false") << '\n'
     << "loss.temperature=" << format_double(loss.temperature) << '\n'
     << "optim.beta1=" << format_double(optim.beta1) << '\n'
     << "optim.beta2=" << format_double(optim.beta2) << '\n'
     << "optim.clip_max_norm=" << (optim.clip_max_norm ? format_double(*optim.clip_max_norm) : "none") << '\n'
     << "optim.eps=" << format_double(optim.eps) << '\n'
     << "optim.lr=" << format_double(optim.lr) << '\n'
     << "optim.scheduler=" << to_string(optim.scheduler) << '\n'
     << "optim.warmup_frac=" << format_double(optim.warmup_frac) << '\n'
     << "optim.weight_decay=" << format_double(optim.weight_decay) << '\n'
     << "train.batch_size=" << batch_size << '\n'
     << "train.checkpoint_every=" << checkpoint_every << '\n'
     << "train.n_way=" << n_way << '\n'
     << "train.save_optimizer_state=" << (save_optimizer_state ? "true" : "false") << '\n'
     << "train.seed=" << seed << '\n'
     << "train.teachers=" << teacher_list << '\n'
     << "train.total_steps=" << total_steps << '\n';
  return os.str();
}

std::string TrainConfig::digest() const { return fnv1a_hex(canonical_text()); }

std::vector<PreparedRecord> prepare_records(const std::vector<TripletRecord>& records, const Vocab& vocab,
                                            const TrainConfig& cfg) {
  std::vector<PreparedRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (static_cast<int>(r.docs.size()) != cfg.n_way) {
      throw DataError("record " + r.query_id + " has " + std::to_string(r.docs.size()) + " docs, expected n_way=" +
                      std::to_string(cfg.n_way));
    }
    PreparedRecord p;
    p.query_id = r.query_id;
    p.query = prepare_query(tokenize(r.query_text, vocab), cfg.encoder);
    for (const auto& d : r.docs) {
      p.docs.push_back(prepare_document(tokenize(d.text, vocab), cfg.encoder));
      p.doc_ids.push_back(d.doc_id);
    }
    p.teacher = training_teacher_scores(r, cfg.teachers);
    p.accumulation_order.resize(p.docs.size());
    std::iota(p.accumulation_order.begin(), p.accumulation_order.end(), std::size_t{0});
    std::stable_sort(p.accumulation_order.begin(), p.accumulation_order.end(),
                     [&](std::size_t a, std::size_t b) { return p.doc_ids[a] < p.doc_ids[b]; });
    out.push_back(std::move(p));
  }
  return out;
}

BatchResult evaluate_batch(const std::vector<const PreparedRecord*>& batch, const EncoderParams& params,
                           const TrainConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("evaluate_batch: empty batch");
  const std::size_t b = batch.size();

  // Forward: every query and document of every record.
  std::vector<RecordForward> fwd(b);
  parallel_for(b, cfg.threads, [&](std::size_t r) {
    const auto& rec = *batch[r];
    auto& f = fwd[r];
    f.query = encode_forward(rec.query, params, cfg.encoder, true);
    f.docs.reserve(rec.docs.size());
    f.argmax.resize(rec.docs.size());
    for (std::size_t k = 0; k < rec.docs.size(); ++k) {
      f.docs.push_back(encode_forward(rec.docs[k], params, cfg.encoder, false));
      f.scores.push_back(maxsim(f.query.out, f.docs[k].out, f.argmax[k]));
    }
  });

  // Per-record distillation losses.
  BatchResult result;
  std::vector<LossResult> losses(b);
  std::size_t used = 0;
  for (std::size_t r = 0; r < b; ++r) {
    losses[r] = distillation_loss(fwd[r].scores, batch[r]->teacher, cfg.loss);
    if (losses[r].degenerate) {
      ++result.skipped_records;
    } else {
      ++used;
    }
  }
  if (used == 0) {
    result.skipped = true;
    return result;
  }
  const double inv_used = 1.0 / static_cast<double>(used);
  double total = 0.0;
  for (std::size_t r = 0; r < b; ++r) {
    if (losses[r].degenerate) continue;
    total += losses[r].loss;
    for (double& g : losses[r].grad) g *= inv_used;
  }
  total *= inv_used;

  // In-batch negatives: query i against the positive (doc 0) of record j.
  Matrix ib_grad;
  std::vector<std::vector<std::vector<Eigen::Index>>> ib_argmax;
  if (cfg.loss.ibneg_enabled && b >= 2) {
    Matrix ib_scores(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b));
    ib_argmax.assign(b, std::vector<std::vector<Eigen::Index>>(b));
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        ib_scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            maxsim(fwd[i].query.out, fwd[j].docs[0].out, ib_argmax[i][j]);
      }
    }
    auto ib = ibneg_loss(ib_scores);
    total += ib.loss;
    ib_grad = std::move(ib.grad);
  }
  result.loss = total;

  // Backward per record into private buffers, then a fixed-order sum.
  std::vector<EncoderParams> per_record(b);
  parallel_for(b, cfg.threads, [&](std::size_t r) {
    const auto& rec = *batch[r];
    const auto& f = fwd[r];
    auto& g = per_record[r];
    g = params.zeros_like();
    const bool distill = !losses[r].degenerate;
    const bool ibneg = ib_grad.size() > 0;
    if (!distill && !ibneg) return;

    Matrix dq = Matrix::Zero(f.query.out.rows(), f.query.out.dim());
    std::vector<Matrix> dd(rec.docs.size());
    for (std::size_t k = 0; k < rec.docs.size(); ++k) dd[k] = Matrix::Zero(f.docs[k].out.rows(), f.docs[k].out.dim());

    if (distill) {
      for (std::size_t k : rec.accumulation_order) {
        maxsim_backward(f.query.out, f.docs[k].out, f.argmax[k], losses[r].grad[k], dq, dd[k]);
      }
    }
    if (ibneg) {
      Matrix scratch_d;
      Matrix scratch_q;
      for (std::size_t j = 0; j < b; ++j) {
        scratch_d = Matrix::Zero(fwd[j].docs[0].out.rows(), fwd[j].docs[0].out.dim());
        maxsim_backward(f.query.out, fwd[j].docs[0].out, ib_argmax[r][j],
                        ib_grad(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)), dq, scratch_d);
      }
      for (std::size_t i = 0; i < b; ++i) {
        scratch_q = Matrix::Zero(fwd[i].query.out.rows(), fwd[i].query.out.dim());
        maxsim_backward(fwd[i].query.out, f.docs[0].out, ib_argmax[i][r],
                        ib_grad(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)), scratch_q, dd[0]);
      }
    }

    encode_backward_into(f.query, params, dq, g);
    for (std::size_t k : rec.accumulation_order) encode_backward_into(f.docs[k], params, dd[k], g);
  });

  result.grads = params.zeros_like();
  for (const auto& g : per_record) {
    if (g.emb.size() > 0) result.grads += g;
  }
  return result;
}

Checkpoint make_checkpoint(const EncoderParams& params, const TrainConfig& cfg, std::int64_t step) {
  Checkpoint c;
  c.tensors = params.to_tensors();
  c.meta.step = step;
  c.meta.seed = static_cast<std::int64_t>(cfg.seed);
  c.meta.config_digest = cfg.digest();
  return c;
}

TrainResult train(const TrainConfig& cfg, const std::vector<TripletRecord>& data, const Vocab& vocab,
                  const EncoderParams& initial) {
  cfg.validate();
  if (static_cast<std::size_t>(cfg.encoder.vocab_size) != vocab.size()) {
    throw std::invalid_argument("train: encoder vocab_size " + std::to_string(cfg.encoder.vocab_size) +
                                " does not match vocabulary size " + std::to_string(vocab.size()));
  }
  if (cfg.total_steps > 0 && data.empty()) throw DataError("train: no training records");
  const auto prepared = prepare_records(data, vocab, cfg);

  TrainResult result;
  EncoderParams params = initial;
  EncoderParams eval_params = initial;
  OptimState state;
  const bool schedule_free = cfg.optim.scheduler == SchedulerKind::ScheduleFree;
  const std::int64_t warmup = warmup_steps(cfg.total_steps, cfg.optim.warmup_frac);

  auto snapshot = [&](std::int64_t step) {
    auto ckpt = make_checkpoint(eval_params, cfg, step);
    if (cfg.save_optimizer_state) {
      for (auto& [name, t] : optim_state_to_tensors(state, params.names())) ckpt.tensors.emplace(name, std::move(t));
    }
    result.checkpoints.push_back(std::move(ckpt));
  };
  snapshot(0);

  Rng order_rng(mix_seed(cfg.seed, 0x6f72646572ULL));
  std::vector<std::size_t> order(prepared.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();

  for (std::int64_t step = 0; step < cfg.total_steps; ++step) {
    std::vector<const PreparedRecord*> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch_size));
    while (static_cast<int>(batch.size()) < cfg.batch_size) {
      if (cursor == order.size()) {
        order_rng.shuffle(order);
        cursor = 0;
      }
      batch.push_back(&prepared[order[cursor++]]);
    }

    double lr_t = 0.0;
    if (schedule_free) {
      lr_t = step + 1 <= warmup ? cfg.optim.lr * static_cast<double>(step + 1) / static_cast<double>(warmup)
                                : cfg.optim.lr;
    } else {
      lr_t = linear_decay_lr(step, cfg.total_steps, cfg.optim.warmup_frac, cfg.optim.lr);
    }

    auto br = evaluate_batch(batch, params, cfg);
    result.skipped_records += br.skipped_records;
    if (br.skipped) {
      ++result.skipped_batches;
      result.trace.push_back({step + 1, std::numeric_limits<double>::quiet_NaN(), lr_t});
    } else {
      if (!std::isfinite(br.loss)) throw TrainingError(step + 1, "non-finite loss");
      result.trace.push_back({step + 1, br.loss, lr_t});

      auto grad_views = br.grads.views();
      if (cfg.optim.clip_max_norm) clip_gradients(grad_views, *cfg.optim.clip_max_norm);
      GradViews grads(grad_views.begin(), grad_views.end());
      if (schedule_free) {
        schedulefree_adamw_step(params.views(), grads, state, cfg.optim, warmup);
        schedulefree_eval_params(state, eval_params.views());
      } else {
        adamw_step(params.views(), grads, state, cfg.optim, lr_t);
        eval_params = params;
      }
    }

    if ((step + 1) % cfg.checkpoint_every == 0) snapshot(step + 1);
  }
  if (cfg.total_steps > 0 && cfg.total_steps % cfg.checkpoint_every != 0) snapshot(cfg.total_steps);

  result.final_params = std::move(eval_params);
  return result;
}

void write_loss_trace(const std::string& path, const std::vector<StepLog>& trace) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write loss trace " + path);
  for (const auto& s : trace) {
    out << s.step << '\t' << (std::isnan(s.loss) ? std::string("nan") : format_double(s.loss)) << '\t'
        << format_double(s.lr) << '\n';
  }
}

}  // namespace liforge
