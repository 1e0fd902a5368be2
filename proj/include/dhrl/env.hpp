#ifndef DHRL_ENV_HPP
#define DHRL_ENV_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dhrl/common.hpp"
#include "dhrl/rng.hpp"

namespace dhrl {

enum class EnvKind { Signal, Recsim, Custom };

// Finite-latent partially observable environment. Dynamics factor as
//   s' ~ transition[s][a],  o ~ emission[s'][a],  r = reward[s'][a][o]
// with every probability row normalized and rewards in [0, 1].
struct EnvSpec {
  EnvKind kind = EnvKind::Custom;
  int num_states = 0;
  int num_actions = 0;
  int num_observations = 0;
  int horizon = 0;
  Eigen::VectorXd initial_dist;                         // S
  std::vector<std::vector<Eigen::VectorXd>> transition; // [s][a] -> dist over S
  std::vector<std::vector<Eigen::VectorXd>> emission;   // [s'][a] -> dist over O
  std::vector<std::vector<Eigen::VectorXd>> reward;     // [s'][a] -> reward per obs

  // Recsim: items excluded from the interaction phase and offered at the
  // terminal recommendation step. Empty means no holdout.
  std::vector<int> holdout_items;

  void validate() const;  // throws ContractError on any broken invariant

  bool static_latent() const;          // transition is identity for all actions
  bool has_holdout() const { return !holdout_items.empty(); }

  // Legal-action masks (1 = legal). Interaction phase excludes holdout
  // items; the terminal step is restricted to them when a holdout exists.
  std::vector<std::uint8_t> interaction_mask() const;
  std::vector<std::uint8_t> terminal_mask() const;
};

// Built-in environments. All numeric arguments are configuration defaults.
EnvSpec make_signal_env(int horizon = 10, double probe_accuracy = 0.85,
                        double probe_reward = 0.05);
EnvSpec make_recsim_env(int horizon = 10, int user_types = 3, int items = 10,
                        double holdout_fraction = 0.4, double rating_noise = 0.35,
                        std::uint64_t table_seed = 0,
                        const Eigen::MatrixXd* level_table = nullptr);

// Alternating observation/action prefix o_1, a_1, ..., o_t. An empty history
// (t = 0) is the degenerate prior case; otherwise observations.size() ==
// actions.size() + 1.
struct HistoryState {
  std::vector<int> observations;
  std::vector<int> actions;

  int length() const { return static_cast<int>(observations.size()); }
  void validate(const EnvSpec& env) const;
};

// Realization a_t, o_{t+1}, ..., o_H of the remainder of a trajectory,
// plus the terminal recommendation action when one was sampled.
struct FutureRealization {
  std::vector<int> actions;       // a_t ... a_{H-1}
  std::vector<int> observations;  // o_{t+1} ... o_H
  int terminal_action = -1;       // -1 when absent

  int steps() const { return static_cast<int>(actions.size()); }
};

// Access token for oracle-only trajectory state. Evaluation and test code
// construct it explicitly; agent-facing paths never see the latent trace.
struct OracleAccess {
  explicit OracleAccess() = default;
};

struct Trajectory {
  std::vector<int> observations;  // o_1 ... o_H
  std::vector<int> actions;       // a_1 ... a_{H-1}
  int terminal_action = -1;
  std::vector<double> rewards;    // r_1 ... r_H (r_H from the terminal action)
  std::uint64_t seed_tag = 0;

  int horizon() const { return static_cast<int>(observations.size()); }

  const std::vector<int>& latent_trace(OracleAccess) const { return latent_trace_; }
  void set_latent_trace(std::vector<int> trace) { latent_trace_ = std::move(trace); }

 private:
  std::vector<int> latent_trace_;  // s_1 ... s_H, oracle evaluation only
};

using BeliefVector = Eigen::VectorXd;

// A history policy maps a history prefix to a distribution over actions.
// The terminal recommendation step is reached when h has length H.
using HistoryPolicy = std::function<Eigen::VectorXd(const HistoryState&, RandomStream&)>;

// Uniform over the legal actions of the current phase.
HistoryPolicy make_uniform_policy(const EnvSpec& env);

// One environment transition from latent state `latent` under `action`.
struct StepResult {
  int next_latent;
  int observation;
  double reward;
};
StepResult step(const EnvSpec& env, int latent, int action, RandomStream& rng);

// Samples a full trajectory: o_1 ~ emission(s_1, action 0), then H-1
// intermediate actions and one terminal action whose observation is
// discarded. Throws if the policy emits an invalid distribution.
Trajectory sample_trajectory(const EnvSpec& env, const HistoryPolicy& policy, RandomStream& rng);

// Splits at time t (1 <= t < H): history of length t, future starting with a_t.
std::pair<HistoryState, FutureRealization> split(const Trajectory& traj, int t);

// Inverse of split on the (observation, action) content of a trajectory.
Trajectory join(const HistoryState& history, const FutureRealization& future);

// Exact Bayes filter over latent states. Throws ImpossibleHistoryError when
// the history has zero likelihood.
BeliefVector exact_belief(const EnvSpec& env, const HistoryState& history);

// Probability that executing the test's actions from `history` produces the
// test's observations. The test alternates (action, observation) pairs.
double future_probability(const EnvSpec& env, const HistoryState& history,
                          const std::vector<std::pair<int, int>>& test);

// Monte-Carlo value estimate of a policy: (mean return, standard error).
std::pair<double, double> policy_value(const EnvSpec& env, const HistoryPolicy& policy,
                                       int episodes, RandomStream& rng);

}  // namespace dhrl

#endif
