// SPDX-License-Identifier: Apache-2.0
#include "liforge/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "liforge/error.hpp"
#include "liforge/io.hpp"
#include "liforge/metrics.hpp"

namespace liforge {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw std::invalid_argument("config key " + key + ": invalid value '" + value + "' (expected " + expected + ")");
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& value) {
  Int out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) bad_value(key, value, "an integer");
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  if (value.empty()) bad_value(key, value, "a number");
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end != value.c_str() + value.size()) bad_value(key, value, "a number");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  std::string v = value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, value, "true/false");
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

template <typename T>
T wrap_parse(const std::string& key, const std::string& value, T (*fn)(const std::string&)) {
  try {
    return fn(value);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("config key " + key + ": " + e.what());
  }
}

struct Field {
  std::function<void(CliConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const CliConfig&)> get;
};

#define LF_INT(member)                                                                                  \
  Field {                                                                                               \
    [](CliConfig& c, const std::string& k, const std::string& v) {                                      \
      c.member = parse_int<std::remove_reference_t<decltype(c.member)>>(k, v);                           \
    },                                                                                                  \
        [](const CliConfig& c) { return std::to_string(c.member); }                                     \
  }
#define LF_REAL(member)                                                                                      \
  Field {                                                                                                    \
    [](CliConfig& c, const std::string& k, const std::string& v) { c.member = parse_real(k, v); },           \
        [](const CliConfig& c) { return format_double(c.member); }                                           \
  }
#define LF_BOOL(member)                                                                                      \
  Field {                                                                                                    \
    [](CliConfig& c, const std::string& k, const std::string& v) { c.member = parse_bool(k, v); },           \
        [](const CliConfig& c) { return bool_text(c.member); }                                               \
  }
#define LF_STR(member)                                                                                       \
  Field {                                                                                                    \
    [](CliConfig& c, const std::string&, const std::string& v) { c.member = v; },                            \
        [](const CliConfig& c) { return c.member; }                                                          \
  }

Field path_field(const std::string& name) {
  return {[name](CliConfig& c, const std::string&, const std::string& v) { c.paths[name] = v; },
          [name](const CliConfig& c) {
            auto it = c.paths.find(name);
            return it == c.paths.end() ? std::string() : it->second;
          }};
}

const std::map<std::string, Field>& registry() {
  static const std::map<std::string, Field> fields = [] {
    std::map<std::string, Field> f;
    f["encoder.aug_mode"] = {[](CliConfig& c, const std::string& k, const std::string& v) {
                               c.train.encoder.aug_mode = wrap_parse(k, v, &parse_augmentation);
                             },
                             [](const CliConfig& c) { return to_string(c.train.encoder.aug_mode); }};
    f["encoder.hidden"] = LF_INT(train.encoder.hidden);
    f["encoder.max_doc_len"] = LF_INT(train.encoder.max_doc_len);
    f["encoder.mixer"] = LF_BOOL(train.encoder.mixer);
    f["encoder.out_dim"] = LF_INT(train.encoder.out_dim);

    f["loss.ibneg"] = LF_BOOL(train.loss.ibneg_enabled);
    f["loss.kind"] = {[](CliConfig& c, const std::string& k, const std::string& v) {
                        c.train.loss.kind = wrap_parse(k, v, &parse_loss_kind);
                      },
                      [](const CliConfig& c) { return to_string(c.train.loss.kind); }};
    f["loss.mmse_lambda"] = LF_REAL(train.loss.mmse_lambda);
    f["loss.normalize_student"] = LF_BOOL(train.loss.normalize_student);
    f["loss.normalize_teacher"] = LF_BOOL(train.loss.normalize_teacher);
    f["loss.temperature"] = LF_REAL(train.loss.temperature);

    f["optim.beta1"] = LF_REAL(train.optim.beta1);
    f["optim.beta2"] = LF_REAL(train.optim.beta2);
    f["optim.clip_max_norm"] = {[](CliConfig& c, const std::string& k, const std::string& v) {
                                  if (v == "auto") {
                                    c.clip_auto = true;
                                    c.train.optim.clip_max_norm.reset();
                                  } else if (v == "none") {
                                    c.clip_auto = false;
                                    c.train.optim.clip_max_norm.reset();
                                  } else {
                                    c.clip_auto = false;
                                    c.train.optim.clip_max_norm = parse_real(k, v);
                                  }
                                },
                                [](const CliConfig& c) {
                                  if (c.clip_auto) return std::string("auto");
                                  return c.train.optim.clip_max_norm ? format_double(*c.train.optim.clip_max_norm)
                                                                     : std::string("none");
                                }};
    f["optim.eps"] = LF_REAL(train.optim.eps);
    f["optim.lr"] = LF_REAL(train.optim.lr);
    f["optim.scheduler"] = {[](CliConfig& c, const std::string& k, const std::string& v) {
                              c.train.optim.scheduler = wrap_parse(k, v, &parse_scheduler);
                            },
                            [](const CliConfig& c) { return to_string(c.train.optim.scheduler); }};
    f["optim.warmup_frac"] = LF_REAL(train.optim.warmup_frac);
    f["optim.weight_decay"] = LF_REAL(train.optim.weight_decay);

    f["train.batch_size"] = LF_INT(train.batch_size);
    f["train.checkpoint_every"] = LF_INT(train.checkpoint_every);
    f["train.n_way"] = LF_INT(train.n_way);
    f["train.save_optimizer_state"] = LF_BOOL(train.save_optimizer_state);
    f["train.seed"] = LF_INT(train.seed);
    f["train.teachers"] = {[](CliConfig& c, const std::string& k, const std::string& v) {
                             std::vector<std::string> names;
                             std::stringstream ss(v);
                             std::string item;
                             while (std::getline(ss, item, ',')) {
                               item = trim(item);
                               if (!item.empty()) names.push_back(item);
                             }
                             if (names.empty()) bad_value(k, v, "a comma-separated teacher list");
                             c.train.teachers = names;
                           },
                           [](const CliConfig& c) {
                             std::string out;
                             for (const auto& t : c.train.teachers) out += (out.empty() ? "" : ",") + t;
                             return out;
                           }};
    f["train.total_steps"] = LF_INT(train.total_steps);

    f["synth.concentration"] = LF_REAL(synth.concentration);
    f["synth.doc_len_max"] = LF_INT(synth.doc_len_max);
    f["synth.doc_len_min"] = LF_INT(synth.doc_len_min);
    f["synth.heldout_queries"] = LF_INT(synth.heldout_queries);
    f["synth.n_docs"] = LF_INT(synth.n_docs);
    f["synth.n_queries"] = LF_INT(synth.n_queries);
    f["synth.n_way"] = LF_INT(synth.n_way);
    f["synth.query_len_max"] = LF_INT(synth.query_len_max);
    f["synth.query_len_min"] = LF_INT(synth.query_len_min);
    f["synth.query_spread"] = LF_REAL(synth.query_spread);
    f["synth.seed"] = LF_INT(synth.seed);
    f["synth.teacher_noise_sigma"] = LF_REAL(synth.teacher_noise_sigma);
    f["synth.topic_dim"] = LF_INT(synth.topic_dim);
    f["synth.vocab_size"] = LF_INT(synth.vocab_size);

    f["bm25.b"] = LF_REAL(bm25.b);
    f["bm25.k1"] = LF_REAL(bm25.k1);
    f["eval.metrics"] = LF_STR(metrics);
    f["eval.search_depth"] = LF_INT(search_depth);
    f["eval.mine_depth"] = LF_INT(mine_depth);

    for (const char* p : {"data_dir", "out_dir", "triplets", "corpus", "queries", "qrels", "vocab", "checkpoint"}) {
      f[std::string("paths.") + p] = path_field(p);
    }
    return f;
  }();
  return fields;
}

#undef LF_INT
#undef LF_REAL
#undef LF_BOOL
#undef LF_STR

}  // namespace

TrainConfig CliConfig::resolved_train() const {
  TrainConfig t = train;
  if (clip_auto) t.optim.clip_max_norm = OptimConfig::with_default_clipping(t.optim.scheduler).clip_max_norm;
  return t;
}

void CliConfig::validate() const {
  auto t = resolved_train();
  // vocab size is only known once data is loaded
  if (t.encoder.vocab_size < 1) t.encoder.vocab_size = 1;
  t.validate();
  synth.validate();
  if (!(bm25.k1 >= 0.0) || !(bm25.b >= 0.0 && bm25.b <= 1.0)) throw std::invalid_argument("bm25: need k1 >= 0, 0 <= b <= 1");
  if (search_depth < 1 || mine_depth < 1) throw std::invalid_argument("eval: depths must be >= 1");
  parse_metric_list(metrics);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, field] : registry()) k.push_back(name);
    return k;
  }();
  return keys;
}

std::string config_env_name(const std::string& key) {
  std::string out = "LIFORGE_";
  for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

void config_set(CliConfig& cfg, const std::string& key, const std::string& value) {
  auto it = registry().find(key);
  if (it == registry().end()) throw std::invalid_argument("unknown config key '" + key + "'");
  it->second.set(cfg, key, value);
}

std::string config_get(const CliConfig& cfg, const std::string& key) {
  auto it = registry().find(key);
  if (it == registry().end()) throw std::invalid_argument("unknown config key '" + key + "'");
  return it->second.get(cfg);
}

void config_apply_text(CliConfig& cfg, const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    try {
      config_set(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void config_apply_file(CliConfig& cfg, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  config_apply_text(cfg, ss.str(), path);
}

void config_apply_env(CliConfig& cfg) {
  for (const auto& key : config_keys()) {
    if (const char* v = std::getenv(config_env_name(key).c_str())) config_set(cfg, key, trim(v));
  }
}

void config_apply_override(CliConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("override '" + assignment + "' is not key=value");
  config_set(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string config_dump(const CliConfig& cfg) {
  std::string out;
  for (const auto& key : config_keys()) out += key + " = " + config_get(cfg, key) + "\n";
  return out;
}

}  // namespace liforge
