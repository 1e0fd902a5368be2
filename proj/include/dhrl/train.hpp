#ifndef DHRL_TRAIN_HPP
#define DHRL_TRAIN_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dhrl/agents.hpp"
#include "dhrl/config.hpp"

namespace dhrl {

// One hindsight QA event inside a collected batch.
struct QARecord {
  int column = 0;  // rollout column (trajectory * H + step - 1)
  int item_a = 0;
  int item_b = 0;
  Preference truth = Preference::First;
  Preference predicted = Preference::First;
  double answer_log_prob = 0.0;
  Eigen::Vector2d answer_dist{0.5, 0.5};
  double g_agent = 0.0;  // clamped critic value on (h, q, predicted), at collection
  double g_truth = 0.0;  // clamped critic value on (h, q, truth), at collection
  double reward_answer = 0.0;   // f*(g) under the post-update critic
  double g_truth_fresh = 0.0;   // post-update critic on the truth row
  // Adversarial question selection (family_index < 0 when not adversarial).
  int family_index = -1;
  double selection_log_prob = 0.0;
  std::vector<int> candidates;
};

// Everything Algorithm-line-3..8 produced for one iteration, laid out as
// column batches. Column c = trajectory * H + (t - 1) is decision point t.
struct BatchRecord {
  std::uint64_t policy_version = 0;
  int batch_size = 0;
  int horizon = 0;

  Eigen::MatrixXd h_features;      // history_dim x BH
  Eigen::MatrixXd encoder_hidden;  // hidden x BH
  Eigen::MatrixXd head_probs;      // (L*C) x BH, head l in rows [l*C, l*C+C)
  Eigen::MatrixXi codes;           // L x BH
  Eigen::VectorXd z_log_prob;      // BH
  Eigen::MatrixXd z_onehot;        // (L*C) x BH
  Eigen::MatrixXd decider_hidden;  // hidden x BH
  Eigen::MatrixXd action_probs;    // A x BH (masked softmax)
  std::vector<int> actions;        // BH
  std::vector<double> rewards;     // BH, r_t at decision point t
  std::vector<double> reward_to_go;  // BH  (the per-sample r^D)

  std::vector<int> split_columns;  // columns acting as splits per the schedule
  std::vector<HistoryState> split_histories;  // aligned with split_columns
  std::vector<QARecord> qa;

  // Assembled critic inputs for the two answer populations.
  Eigen::MatrixXd critic_in_agent, critic_in_truth;
  // Answer-agent caches.
  Eigen::MatrixXd answer_in;      // (L*C + question_dim) x Nqa
  Eigen::MatrixXd answer_hidden;  // hidden x Nqa

  std::vector<double> r_encoder;  // per split column, aligned with split_columns
  double mean_return = 0.0;

  int qa_count() const { return static_cast<int>(qa.size()); }
};

// Categorical question-selection distribution over ordered item pairs
// (Appendix-style adversarial QA generator; answers stay hindsight truth).
struct AdversarialQA {
  std::vector<std::pair<int, int>> family;  // ordered pairs
  Eigen::VectorXd logits;                   // one per family entry

  static AdversarialQA init(const EnvSpec& env,
                            const std::optional<std::vector<int>>& item_subset);
};

struct MetricsRecord {
  int iteration = 0;
  double mean_return = 0.0;
  double d_hat = 0.0;
  double answer_accuracy = 0.0;  // sampled answers vs hindsight truth
  double bayes_accuracy = -1.0;  // vs exact-posterior argmax; -1 if unavailable
  double reward_decision = 0.0;
  double reward_answer = 0.0;
  double reward_encoder = 0.0;
  double grad_norm_encoder = 0.0;
  double grad_norm_answerer = 0.0;
  double grad_norm_decider = 0.0;
  double grad_norm_critic = 0.0;
  int qa_count = 0;
  bool qa_skipped = false;
  double wall_clock_ms = 0.0;  // observability only; never serialized

  std::string to_jsonl() const;  // deterministic field order and formatting
};

// Samples batch_size trajectories under the induced policy (a fresh z per
// step), splits them per the schedule, generates hindsight QA, predicts
// answers, and evaluates the critic on both answer sets. The z recorded for
// a split is the one sampled at that step during the rollout.
BatchRecord collect_batch(const EnvSpec& env, const AgentBundle& bundle, const FullConfig& cfg,
                          RandomStream& rng, const AdversarialQA* adversarial = nullptr);

struct CriticStep {
  double loss = 0.0;       // pre-step objective; the divergence estimate is -loss
  double grad_norm = 0.0;
};

// One gradient-descent step on mean[f*(g(h,q,y_hat)) - g(h,q,y)]. Fills the
// per-record critic values, then steps. Returns the pre-step objective, or
// nullopt when the batch carried no QA samples.
std::optional<CriticStep> update_discriminator(AgentBundle& bundle, BatchRecord& batch,
                                               const FullConfig& cfg);

// Fills reward_answer (post-update critic), reward_to_go-based r^D is already
// present, and r_encoder = (1-lambda) r^D + lambda mean_k r^A per split.
void compute_agent_rewards(BatchRecord& batch, const FullConfig& cfg, const AgentBundle& bundle);

struct PolicyStepStats {
  double grad_norm_encoder = 0.0;
  double grad_norm_answerer = 0.0;
  double grad_norm_decider = 0.0;
};

// Score-function (REINFORCE) step per agent with an optional batch-mean
// baseline. Decision advantages carry the (1-lambda) objective weight and
// answer advantages are unweighted; the encoder reward already interpolates.
PolicyStepStats policy_gradient_step(AgentBundle& bundle, const BatchRecord& batch,
                                     const FullConfig& cfg);

// Score-function ascent on the question-selection logits with per-question
// reward g(h,q,y) - f*(g(h,q,y_hat)).
void adversarial_qa_step(AdversarialQA& adversarial, const BatchRecord& batch,
                         const FullConfig& cfg);

struct TrainHooks {
  // Called after every iteration with the fresh metrics and current bundle.
  std::function<void(const MetricsRecord&, const AgentBundle&)> on_iteration;
};

struct TrainResult {
  AgentBundle bundle;
  std::vector<MetricsRecord> metrics;
  std::optional<AdversarialQA> adversarial;
};

// The full training loop: collect, critic update, then (past warmup/delay)
// policy-gradient updates, once per iteration. Deterministic given the seed.
TrainResult train(const FullConfig& cfg, const TrainHooks* hooks = nullptr);

}  // namespace dhrl

#endif
