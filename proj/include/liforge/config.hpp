// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "liforge/bm25.hpp"
#include "liforge/harness.hpp"
#include "liforge/training.hpp"

namespace liforge {

/// Everything a pipeline run can be configured with. Persisted as a flat
/// `key = value` file; `#` starts a comment. Defaults are the full-scale
/// training settings.
struct CliConfig {
  TrainConfig train;
  SynthSpec synth;
  Bm25Params bm25;
  std::string metrics = "ndcg@10,mrr@10,recall@100,map@10,hitrate@10";
  int search_depth = 100;
  int mine_depth = 250;
  /// Unset: 2.0 under linear decay, off under schedule-free.
  bool clip_auto = true;
  std::map<std::string, std::string> paths;

  /// TrainConfig with the automatic clipping default resolved.
  TrainConfig resolved_train() const;
  void validate() const;
};

/// All recognised keys, sorted.
const std::vector<std::string>& config_keys();

/// Environment variable consulted for `key`: LIFORGE_ + key with '.' -> '_', upper-cased.
std::string config_env_name(const std::string& key);

/// Sets one key; unknown keys and unparsable values throw std::invalid_argument.
void config_set(CliConfig& cfg, const std::string& key, const std::string& value);
std::string config_get(const CliConfig& cfg, const std::string& key);

/// Applies `key = value` lines. `origin` names the source in error messages.
void config_apply_text(CliConfig& cfg, const std::string& text, const std::string& origin = "config");
/// Missing file -> InputError.
void config_apply_file(CliConfig& cfg, const std::string& path);
/// Applies every LIFORGE_* variable that names a known key.
void config_apply_env(CliConfig& cfg);
/// "key=value" override.
void config_apply_override(CliConfig& cfg, const std::string& assignment);

/// Every key with its current value, one `key = value` line each, sorted.
std::string config_dump(const CliConfig& cfg);

}  // namespace liforge
