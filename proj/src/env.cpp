#include "dhrl/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dhrl {
namespace {

void check_prob_vector(const Eigen::VectorXd& v, int expected_size, const char* what) {
  if (v.size() != expected_size)
    throw ContractError(std::string(what) + ": wrong length");
  if ((v.array() < -1e-15).any())
    throw ContractError(std::string(what) + ": negative entry");
  if (std::abs(v.sum() - 1.0) > 1e-12)
    throw ContractError(std::string(what) + ": does not sum to 1");
}

void check_symbol(int value, int bound, const char* what) {
  if (value < 0 || value >= bound)
    throw ContractError(std::string(what) + ": symbol index out of range");
}

}  // namespace

void EnvSpec::validate() const {
  if (num_states <= 0 || num_actions <= 0 || num_observations <= 0)
    throw ContractError("EnvSpec: all symbol sets must be nonempty");
  if (horizon < 2) throw ContractError("EnvSpec: horizon must be at least 2");
  check_prob_vector(initial_dist, num_states, "initial_dist");
  if (static_cast<int>(transition.size()) != num_states ||
      static_cast<int>(emission.size()) != num_states ||
      static_cast<int>(reward.size()) != num_states)
    throw ContractError("EnvSpec: table outer dimension mismatch");
  for (int s = 0; s < num_states; ++s) {
    if (static_cast<int>(transition[s].size()) != num_actions ||
        static_cast<int>(emission[s].size()) != num_actions ||
        static_cast<int>(reward[s].size()) != num_actions)
      throw ContractError("EnvSpec: table action dimension mismatch");
    for (int a = 0; a < num_actions; ++a) {
      check_prob_vector(transition[s][a], num_states, "transition row");
      check_prob_vector(emission[s][a], num_observations, "emission row");
      if (reward[s][a].size() != num_observations)
        throw ContractError("EnvSpec: reward row length mismatch");
      if ((reward[s][a].array() < -1e-15).any() || (reward[s][a].array() > 1.0 + 1e-15).any())
        throw ContractError("EnvSpec: reward outside [0, 1]");
    }
  }
  for (int item : holdout_items) check_symbol(item, num_actions, "holdout item");
}

bool EnvSpec::static_latent() const {
  for (int s = 0; s < num_states; ++s)
    for (int a = 0; a < num_actions; ++a)
      for (int s2 = 0; s2 < num_states; ++s2) {
        const double want = s2 == s ? 1.0 : 0.0;
        if (std::abs(transition[s][a][s2] - want) > 1e-12) return false;
      }
  return true;
}

std::vector<std::uint8_t> EnvSpec::interaction_mask() const {
  std::vector<std::uint8_t> mask(num_actions, 1);
  for (int item : holdout_items) mask[item] = 0;
  return mask;
}

std::vector<std::uint8_t> EnvSpec::terminal_mask() const {
  if (holdout_items.empty()) return std::vector<std::uint8_t>(num_actions, 1);
  std::vector<std::uint8_t> mask(num_actions, 0);
  for (int item : holdout_items) mask[item] = 1;
  return mask;
}

EnvSpec make_signal_env(int horizon, double probe_accuracy, double probe_reward) {
  // States: 0 = left, 1 = right, 2 = win, 3 = lose. Committing moves to
  // win/lose (which carries the commit outcome for the reward lookup); any
  // action taken from win/lose faces a freshly uniform side.
  const int kLeft = 0, kRight = 1, kWin = 2, kLose = 3;
  const int kProbe = 0, kCommitA = 1, kCommitB = 2;
  EnvSpec env;
  env.kind = EnvKind::Signal;
  env.num_states = 4;
  env.num_actions = 3;
  env.num_observations = 2;
  env.horizon = horizon;
  env.initial_dist = Eigen::VectorXd::Zero(4);
  env.initial_dist[kLeft] = 0.5;
  env.initial_dist[kRight] = 0.5;

  auto point = [](int n, int i) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    v[i] = 1.0;
    return v;
  };
  Eigen::VectorXd fresh_side = Eigen::VectorXd::Zero(4);
  fresh_side[kLeft] = 0.5;
  fresh_side[kRight] = 0.5;
  Eigen::VectorXd fresh_commit = Eigen::VectorXd::Zero(4);
  fresh_commit[kWin] = 0.5;
  fresh_commit[kLose] = 0.5;

  env.transition.assign(4, std::vector<Eigen::VectorXd>(3));
  env.transition[kLeft][kProbe] = point(4, kLeft);
  env.transition[kRight][kProbe] = point(4, kRight);
  env.transition[kWin][kProbe] = fresh_side;
  env.transition[kLose][kProbe] = fresh_side;
  env.transition[kLeft][kCommitA] = point(4, kWin);
  env.transition[kRight][kCommitA] = point(4, kLose);
  env.transition[kLeft][kCommitB] = point(4, kLose);
  env.transition[kRight][kCommitB] = point(4, kWin);
  for (int s : {kWin, kLose}) {
    env.transition[s][kCommitA] = fresh_commit;
    env.transition[s][kCommitB] = fresh_commit;
  }

  Eigen::VectorXd hear_left(2), hear_right(2), uninformative(2);
  hear_left << probe_accuracy, 1.0 - probe_accuracy;
  hear_right << 1.0 - probe_accuracy, probe_accuracy;
  uninformative << 0.5, 0.5;
  env.emission.assign(4, std::vector<Eigen::VectorXd>(3, uninformative));
  env.emission[kLeft][kProbe] = hear_left;
  env.emission[kRight][kProbe] = hear_right;

  env.reward.assign(4, std::vector<Eigen::VectorXd>(3, Eigen::VectorXd::Zero(2)));
  for (int s = 0; s < 4; ++s)
    env.reward[s][kProbe] = Eigen::VectorXd::Constant(2, probe_reward);
  for (int a : {kCommitA, kCommitB}) {
    env.reward[kWin][a] = Eigen::VectorXd::Constant(2, 1.0);
    env.reward[kLose][a] = Eigen::VectorXd::Constant(2, 0.0);
  }
  env.validate();
  return env;
}

namespace {

// Default 3x10 preference-level table. Columns 6..9 are the held-out items;
// each user type has a distinct best item among them.
const int kDefaultLevels[3][10] = {
    {5, 1, 4, 2, 3, 2, 5, 2, 3, 1},
    {1, 5, 2, 4, 2, 3, 2, 5, 1, 3},
    {3, 2, 5, 1, 4, 5, 1, 3, 5, 2},
};

}  // namespace

EnvSpec make_recsim_env(int horizon, int user_types, int items, double holdout_fraction,
                        double rating_noise, std::uint64_t table_seed,
                        const Eigen::MatrixXd* level_table) {
  if (user_types < 1 || items < 2)
    throw ContractError("recsim env needs at least 1 user type and 2 items");
  if (rating_noise <= 0.0) throw ContractError("recsim rating_noise must be positive");
  const int kLevels = 5;

  Eigen::MatrixXd levels(user_types, items);
  if (level_table != nullptr) {
    if (level_table->rows() != user_types || level_table->cols() != items)
      throw ContractError("recsim level table shape mismatch");
    levels = *level_table;
    if ((levels.array() < 1.0).any() || (levels.array() > 5.0).any())
      throw ContractError("recsim level table entries must lie in [1, 5]");
  } else if (user_types == 3 && items == 10 && table_seed == 0) {
    for (int u = 0; u < 3; ++u)
      for (int m = 0; m < 10; ++m) levels(u, m) = kDefaultLevels[u][m];
  } else {
    RandomStream rng(table_seed == 0 ? 0x72656373696dULL : table_seed);
    for (int u = 0; u < user_types; ++u)
      for (int m = 0; m < items; ++m) levels(u, m) = 1 + rng.uniform_int(kLevels);
  }

  EnvSpec env;
  env.kind = EnvKind::Recsim;
  env.num_states = user_types;
  env.num_actions = items;
  env.num_observations = kLevels;
  env.horizon = horizon;
  env.initial_dist = Eigen::VectorXd::Constant(user_types, 1.0 / user_types);

  env.transition.assign(user_types, std::vector<Eigen::VectorXd>(items));
  env.emission.assign(user_types, std::vector<Eigen::VectorXd>(items));
  env.reward.assign(user_types, std::vector<Eigen::VectorXd>(items));
  Eigen::VectorXd norm_rating(kLevels);
  for (int o = 0; o < kLevels; ++o) norm_rating[o] = static_cast<double>(o) / (kLevels - 1);
  for (int u = 0; u < user_types; ++u) {
    Eigen::VectorXd self = Eigen::VectorXd::Zero(user_types);
    self[u] = 1.0;
    for (int m = 0; m < items; ++m) {
      env.transition[u][m] = self;
      Eigen::VectorXd p(kLevels);
      for (int o = 0; o < kLevels; ++o)
        p[o] = std::exp(-std::abs((o + 1) - levels(u, m)) / rating_noise);
      env.emission[u][m] = p / p.sum();
      env.reward[u][m] = norm_rating;
    }
  }

  const int holdout_count =
      std::min(items - 1, static_cast<int>(std::ceil(holdout_fraction * items - 1e-12)));
  for (int m = items - holdout_count; m < items; ++m) env.holdout_items.push_back(m);
  env.validate();
  return env;
}

void HistoryState::validate(const EnvSpec& env) const {
  if (observations.empty()) {
    if (!actions.empty()) throw ContractError("HistoryState: actions without observations");
    return;
  }
  if (observations.size() != actions.size() + 1)
    throw ContractError("HistoryState: must alternate o, a, ..., o");
  for (int o : observations) check_symbol(o, env.num_observations, "history observation");
  for (int a : actions) check_symbol(a, env.num_actions, "history action");
}

HistoryPolicy make_uniform_policy(const EnvSpec& env) {
  return [&env](const HistoryState& h, RandomStream&) {
    const auto mask =
        h.length() >= env.horizon ? env.terminal_mask() : env.interaction_mask();
    Eigen::VectorXd dist = Eigen::VectorXd::Zero(env.num_actions);
    int legal = 0;
    for (int a = 0; a < env.num_actions; ++a) legal += mask[a];
    for (int a = 0; a < env.num_actions; ++a)
      if (mask[a]) dist[a] = 1.0 / legal;
    return dist;
  };
}

StepResult step(const EnvSpec& env, int latent, int action, RandomStream& rng) {
  check_symbol(latent, env.num_states, "step latent");
  check_symbol(action, env.num_actions, "step action");
  const int next = rng.categorical(env.transition[latent][action]);
  const int obs = rng.categorical(env.emission[next][action]);
  return StepResult{next, obs, env.reward[next][action][obs]};
}

namespace {

int sample_policy_action(const EnvSpec& env, const HistoryPolicy& policy,
                         const HistoryState& h, RandomStream& rng) {
  const Eigen::VectorXd dist = policy(h, rng);
  if (dist.size() != env.num_actions)
    throw ContractError("policy returned a distribution of the wrong size");
  if ((dist.array() < -1e-12).any() || std::abs(dist.sum() - 1.0) > 1e-9)
    throw ContractError("policy returned an invalid action distribution");
  return rng.categorical(dist);
}

}  // namespace

Trajectory sample_trajectory(const EnvSpec& env, const HistoryPolicy& policy, RandomStream& rng) {
  Trajectory traj;
  traj.seed_tag = rng.base_seed();
  std::vector<int> latents;
  int s = rng.categorical(env.initial_dist);
  latents.push_back(s);
  // The initial observation is emitted as if under action 0.
  int o = rng.categorical(env.emission[s][0]);
  traj.observations.push_back(o);

  HistoryState h;
  h.observations.push_back(o);
  for (int t = 1; t < env.horizon; ++t) {
    const int a = sample_policy_action(env, policy, h, rng);
    const StepResult r = step(env, s, a, rng);
    s = r.next_latent;
    latents.push_back(s);
    traj.actions.push_back(a);
    traj.observations.push_back(r.observation);
    traj.rewards.push_back(r.reward);
    h.actions.push_back(a);
    h.observations.push_back(r.observation);
  }
  // Terminal action: reward is realized, the observation is discarded.
  const int a_terminal = sample_policy_action(env, policy, h, rng);
  const StepResult r = step(env, s, a_terminal, rng);
  traj.terminal_action = a_terminal;
  traj.rewards.push_back(r.reward);
  traj.set_latent_trace(std::move(latents));
  return traj;
}

std::pair<HistoryState, FutureRealization> split(const Trajectory& traj, int t) {
  const int H = traj.horizon();
  if (t < 1 || t >= H) throw ContractError("split: t must satisfy 1 <= t < H");
  HistoryState h;
  h.observations.assign(traj.observations.begin(), traj.observations.begin() + t);
  h.actions.assign(traj.actions.begin(), traj.actions.begin() + (t - 1));
  FutureRealization f;
  f.actions.assign(traj.actions.begin() + (t - 1), traj.actions.end());
  f.observations.assign(traj.observations.begin() + t, traj.observations.end());
  f.terminal_action = traj.terminal_action;
  return {std::move(h), std::move(f)};
}

Trajectory join(const HistoryState& history, const FutureRealization& future) {
  Trajectory traj;
  traj.observations = history.observations;
  traj.observations.insert(traj.observations.end(), future.observations.begin(),
                           future.observations.end());
  traj.actions = history.actions;
  traj.actions.insert(traj.actions.end(), future.actions.begin(), future.actions.end());
  traj.terminal_action = future.terminal_action;
  return traj;
}

BeliefVector exact_belief(const EnvSpec& env, const HistoryState& history) {
  history.validate(env);
  BeliefVector belief = env.initial_dist;
  if (history.observations.empty()) return belief;

  // Correct on the initial observation (emitted under action 0).
  for (int s = 0; s < env.num_states; ++s)
    belief[s] *= env.emission[s][0][history.observations[0]];
  double total = belief.sum();
  if (total <= 1e-300) throw ImpossibleHistoryError("impossible history");
  belief /= total;

  for (std::size_t i = 0; i < history.actions.size(); ++i) {
    const int a = history.actions[i];
    const int o = history.observations[i + 1];
    BeliefVector predicted = BeliefVector::Zero(env.num_states);
    for (int s = 0; s < env.num_states; ++s)
      if (belief[s] > 0.0) predicted += belief[s] * env.transition[s][a];
    for (int s2 = 0; s2 < env.num_states; ++s2) predicted[s2] *= env.emission[s2][a][o];
    total = predicted.sum();
    if (total <= 1e-300) throw ImpossibleHistoryError("impossible history");
    belief = predicted / total;
  }
  return belief;
}

double future_probability(const EnvSpec& env, const HistoryState& history,
                          const std::vector<std::pair<int, int>>& test) {
  BeliefVector belief = exact_belief(env, history);
  double prob = 1.0;
  for (const auto& [a, o] : test) {
    check_symbol(a, env.num_actions, "test action");
    check_symbol(o, env.num_observations, "test observation");
    BeliefVector predicted = BeliefVector::Zero(env.num_states);
    for (int s = 0; s < env.num_states; ++s)
      if (belief[s] > 0.0) predicted += belief[s] * env.transition[s][a];
    for (int s2 = 0; s2 < env.num_states; ++s2) predicted[s2] *= env.emission[s2][a][o];
    const double likelihood = predicted.sum();
    prob *= likelihood;
    if (likelihood <= 0.0) return 0.0;
    belief = predicted / likelihood;
  }
  return prob;
}

std::pair<double, double> policy_value(const EnvSpec& env, const HistoryPolicy& policy,
                                       int episodes, RandomStream& rng) {
  if (episodes < 1) throw ContractError("policy_value: episodes must be positive");
  double sum = 0.0, sum_sq = 0.0;
  for (int e = 0; e < episodes; ++e) {
    RandomStream episode_rng = rng.split(static_cast<std::uint64_t>(e));
    const Trajectory traj = sample_trajectory(env, policy, episode_rng);
    const double ret = std::accumulate(traj.rewards.begin(), traj.rewards.end(), 0.0);
    sum += ret;
    sum_sq += ret * ret;
  }
  const double mean = sum / episodes;
  if (episodes == 1) return {mean, 0.0};
  const double var = std::max(0.0, (sum_sq - episodes * mean * mean) / (episodes - 1));
  return {mean, std::sqrt(var / episodes)};
}

}  // namespace dhrl
