#ifndef DHRL_EVAL_HPP
#define DHRL_EVAL_HPP

#include <optional>
#include <string>
#include <vector>

#include "dhrl/agents.hpp"
#include "dhrl/config.hpp"
#include "dhrl/train.hpp"

namespace dhrl {

// 95% Wilson score interval half-width for a binomial fraction.
double wilson_half_width(double fraction, int n);

struct PredictionEval {
  double accuracy = 0.0;         // deterministic-mode answers vs hindsight truth
  double half_width = 0.0;       // Wilson 95%
  double ceiling_accuracy = 0.0; // exact-posterior argmax vs the same truth
  double ceiling_half_width = 0.0;
  int n_questions = 0;
  bool has_ceiling = false;      // false for non-static-latent environments
};

// Fresh trajectories under the induced (stochastic) policy, hindsight QA per
// split, argmax answers from argmax representations.
PredictionEval eval_prediction_accuracy(const EnvSpec& env, const AgentBundle& bundle,
                                        const FullConfig& cfg, int episodes, RandomStream& rng);

struct RecommendationEval {
  double mean_reward = 0.0;  // normalized realized rating of the recommended item
  double half_width = 0.0;   // normal-approximation 95%
  int n_episodes = 0;
};

// Stochastic history phase, then a deterministic held-out recommendation.
// Throws when the environment has no held-out items.
RecommendationEval eval_recommendation_reward(const EnvSpec& env, const AgentBundle& bundle,
                                              const FullConfig& cfg, int episodes,
                                              RandomStream& rng);

// Exact expected reward of recommending uniformly over the held-out items.
double uniform_holdout_reward(const EnvSpec& env);

// Least-squares probe from representation one-hots to targets; falls back to
// a 1e-6 ridge when the normal equations are singular (flagged).
struct ProbeFit {
  double mean_abs_error = 0.0;  // held-out
  bool ridge_flagged = false;
};
ProbeFit fit_linear_probe(const std::vector<Eigen::VectorXd>& inputs,
                          const std::vector<Eigen::VectorXd>& targets,
                          double test_fraction = 0.2);

struct SufficiencyResult {
  double probe_error = 0.0;       // probe from codes to the exact belief
  bool probe_ridge_flagged = false;
  double sufficiency_gap = 0.0;   // ceiling accuracy - agent accuracy
  double gap_std_error = 0.0;     // combined standard error of the gap
  double agent_accuracy = 0.0;
  double ceiling_accuracy = 0.0;
  int n_questions = 0;
};

SufficiencyResult sufficiency_probe(const EnvSpec& env, const AgentBundle& bundle,
                                    const FullConfig& cfg, int episodes, RandomStream& rng);

struct EvalReport {
  double prediction_accuracy = 0.0;
  double prediction_half_width = 0.0;
  double oracle_ceiling_accuracy = 0.0;
  double oracle_ceiling_half_width = 0.0;
  double recommendation_reward = 0.0;
  double recommendation_half_width = 0.0;
  double sufficiency_gap = 0.0;
  double probe_error = 0.0;
  bool probe_ridge_flagged = false;
  int n_questions = 0;
  int n_episodes = 0;

  std::string to_json() const;
};

EvalReport make_eval_report(const EnvSpec& env, const AgentBundle& bundle, const FullConfig& cfg,
                            int episodes, RandomStream& rng);

struct AblationSpec {
  std::string axis;                 // history_length, profile_length,
                                    // num_questions, divergence, lambda
  std::vector<std::string> values;  // raw axis values
  int seeds_per_cell = 5;
  FullConfig base;

  static AblationSpec from_file(const std::string& path);
  static AblationSpec from_string(const std::string& text);
};

// Applies one axis value to a copy of the base configuration.
FullConfig apply_axis_value(const FullConfig& base, const std::string& axis,
                            const std::string& value);

struct AblationRow {
  std::string axis;
  std::string value;
  std::uint64_t seed = 0;
  std::optional<double> prediction_accuracy;
  std::optional<double> recommendation_reward;
  std::optional<double> d_hat_final;
  double runtime_s = 0.0;
  std::string error;
};

// Full factorial over axis values x seeds; each cell trains and evaluates
// independently. Cells run in parallel across `threads` workers; failures
// become rows with the error column set.
std::vector<AblationRow> run_ablation(const AblationSpec& spec, int threads);

// Fixed-order CSV rendering (header + one row per cell).
std::string ablation_csv(const std::vector<AblationRow>& rows);

// Trains per the config, writing config.txt, metrics.jsonl, periodic and
// final checkpoints, eval_report.json, and summary.json under out_dir.
// Returns the summary JSON text.
std::string run_training(const FullConfig& cfg, const std::string& out_dir);

// Tidy (iteration, metric, value) CSV from a run directory's metrics.jsonl.
std::string plot_data_csv(const std::string& run_dir);

}  // namespace dhrl

#endif
