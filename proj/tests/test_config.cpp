// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "liforge/config.hpp"
#include "liforge/error.hpp"
#include "support.hpp"

using namespace liforge;

TEST(Config, DefaultsAreTheTrainingTable) {
  const CliConfig cfg;
  EXPECT_EQ(config_get(cfg, "optim.lr"), "3e-05");
  EXPECT_EQ(config_get(cfg, "train.batch_size"), "16");
  EXPECT_EQ(config_get(cfg, "train.n_way"), "32");
  EXPECT_EQ(config_get(cfg, "optim.warmup_frac"), "0.05");
  EXPECT_EQ(config_get(cfg, "encoder.max_doc_len"), "300");
  EXPECT_EQ(config_get(cfg, "encoder.aug_mode"), "dynamic:32:8");
  EXPECT_EQ(config_get(cfg, "loss.kind"), "kldiv");
  EXPECT_EQ(config_get(cfg, "optim.scheduler"), "schedulefree");
  EXPECT_EQ(config_get(cfg, "train.checkpoint_every"), "2000");
  EXPECT_FALSE(cfg.resolved_train().optim.clip_max_norm.has_value());
}

TEST(Config, DumpLoadDumpIsStable) {
  CliConfig cfg;
  config_set(cfg, "optim.lr", "0.00123");
  config_set(cfg, "train.teachers", "a, b");
  config_set(cfg, "optim.clip_max_norm", "1.5");
  config_set(cfg, "paths.out_dir", "/tmp/x y");
  const auto first = config_dump(cfg);
  CliConfig back;
  config_apply_text(back, first);
  EXPECT_EQ(config_dump(back), first);
  EXPECT_EQ(back.train.teachers, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(back.paths.at("out_dir"), "/tmp/x y");
  CliConfig defaults;
  CliConfig reloaded;
  config_apply_text(reloaded, config_dump(defaults));
  EXPECT_EQ(config_dump(reloaded), config_dump(defaults));
  EXPECT_EQ(reloaded.resolved_train().digest(), defaults.resolved_train().digest());
}

TEST(Config, ClippingFollowsScheduler) {
  CliConfig cfg;
  config_set(cfg, "optim.scheduler", "linear");
  EXPECT_EQ(cfg.resolved_train().optim.clip_max_norm, 2.0);
  config_set(cfg, "optim.clip_max_norm", "none");
  EXPECT_FALSE(cfg.resolved_train().optim.clip_max_norm.has_value());
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  CliConfig cfg;
  EXPECT_THROW(config_set(cfg, "optim.learning_rate", "1"), std::invalid_argument);
  EXPECT_THROW(config_set(cfg, "train.n_way", "four"), std::invalid_argument);
  EXPECT_THROW(config_set(cfg, "train.n_way", "4.5"), std::invalid_argument);
  EXPECT_THROW(config_set(cfg, "encoder.mixer", "maybe"), std::invalid_argument);
  EXPECT_THROW(config_set(cfg, "loss.kind", "hinge"), std::invalid_argument);
  EXPECT_THROW(config_apply_text(cfg, "# fine\nno equals sign\n"), std::invalid_argument);
  EXPECT_THROW(config_apply_file(cfg, "/nonexistent/liforge.cfg"), InputError);
  config_set(cfg, "train.n_way", "1");
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Config, CommentsAndFile) {
  const auto dir = support::fresh_dir("config");
  std::ofstream(dir + "/c.cfg") << "# settings\noptim.lr = 0.01  # trailing\n\ntrain.n_way=4\n";
  CliConfig cfg;
  config_apply_file(cfg, dir + "/c.cfg");
  EXPECT_DOUBLE_EQ(cfg.train.optim.lr, 0.01);
  EXPECT_EQ(cfg.train.n_way, 4);
}

TEST(Config, EnvironmentOverride) {
  EXPECT_EQ(config_env_name("train.n_way"), "LIFORGE_TRAIN_N_WAY");
  ::setenv("LIFORGE_TRAIN_BATCH_SIZE", "7", 1);
  CliConfig cfg;
  config_apply_env(cfg);
  ::unsetenv("LIFORGE_TRAIN_BATCH_SIZE");
  EXPECT_EQ(cfg.train.batch_size, 7);
  config_apply_override(cfg, "train.batch_size=9");
  EXPECT_EQ(cfg.train.batch_size, 9);
  EXPECT_THROW(config_apply_override(cfg, "train.batch_size"), std::invalid_argument);
}

TEST(Config, EveryKeyRoundTrips) {
  const CliConfig cfg;
  for (const auto& key : config_keys()) {
    CliConfig copy;
    config_set(copy, key, config_get(cfg, key));
    EXPECT_EQ(config_get(copy, key), config_get(cfg, key)) << key;
  }
}
