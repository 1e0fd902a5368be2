#ifndef DHRL_CONFIG_HPP
#define DHRL_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "dhrl/divergence.hpp"
#include "dhrl/env.hpp"
#include "dhrl/qa.hpp"

namespace dhrl {

struct TrainConfig {
  double lambda = 0.01;          // balance between reward and answer matching
  int questions = 5;             // K questions per split
  int iterations = 1000;
  int batch_size = 128;          // trajectories per iteration
  double lr_policy = 3e-3;
  double lr_critic = 1e-2;
  bool batch_mean_baseline = true;
  int critic_warmup = 20;        // iterations with critic-only updates
  int policy_update_delay = 20;  // agent updates start after this iteration
  double entropy_bonus = 0.01;   // 0 disables the bonus
  int fixed_split_t = 0;         // 0 = all-t schedule, otherwise the single split time
  int checkpoint_every = 200;
  TieRule tie_rule = TieRule::Random;
  QAKind qa_kind = QAKind::PairwiseHindsight;

  void validate(int horizon) const;
};

struct ReprConfig {
  int length = 4;    // L codes per representation
  int codebook = 16; // C values per code

  void validate() const;
};

// Every documented configuration key with its effective value. Unknown keys
// are rejected at parse time with the offending key named.
struct FullConfig {
  // env.*
  std::string env_kind = "recsim";
  int horizon = 10;
  double probe_accuracy = 0.85;
  double probe_reward = 0.05;
  int user_types = 3;
  int items = 10;
  double holdout_fraction = 0.4;
  double rating_noise = 0.35;
  std::uint64_t table_seed = 0;
  std::optional<Eigen::MatrixXd> rating_levels_table;
  // custom env tables, stored as JSON text until build_env
  std::string custom_tables_json;  // empty unless env.kind = custom

  TrainConfig train;
  ReprConfig repr;
  DivergenceKind divergence = DivergenceKind::TotalVariation;
  std::uint64_t seed = 1;
  int eval_episodes = 2000;

  EnvSpec build_env() const;

  // Deterministic key = value rendering of the effective configuration;
  // reparsing it reproduces this config. Basis of the config hash.
  std::string canonical_text() const;
  std::uint64_t hash() const;

  static FullConfig from_string(const std::string& text);
  static FullConfig from_file(const std::string& path);
  static FullConfig from_entries(const std::map<std::string, std::string>& entries);
};

// Parses `key = value` lines ('#' starts a comment line). Duplicate keys are
// rejected. Values keep their raw text; typed accessors live in FullConfig.
std::map<std::string, std::string> parse_kv_text(const std::string& text);
std::map<std::string, std::string> parse_kv_file(const std::string& path);

}  // namespace dhrl

#endif
