#ifndef DHRL_AGENTS_HPP
#define DHRL_AGENTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dhrl/config.hpp"
#include "dhrl/divergence.hpp"
#include "dhrl/env.hpp"
#include "dhrl/net.hpp"
#include "dhrl/qa.hpp"

namespace dhrl {

// Fixed-length sequence of discrete codes; the compact stand-in for a
// textual profile.
struct Representation {
  std::vector<int> codes;  // length L, each in [0, C)
};

// Dense feature layout induced by an environment and horizon.
struct FeatureLayout {
  int observations = 0;
  int actions = 0;
  int horizon = 0;

  int history_dim() const { return horizon * (observations + actions) + 1; }
  int question_dim() const { return 2 * actions; }
  int answer_dim() const { return 2; }
};

// Per-step one-hot (observation, action) blocks zero-padded to the horizon,
// plus a normalized length scalar. Injective on histories up to length H.
Eigen::VectorXd featurize_history(const EnvSpec& env, const HistoryState& history);
Eigen::VectorXd featurize_question(const EnvSpec& env, const Question& question);
Eigen::VectorXd featurize_answer(Preference choice);

Eigen::VectorXd repr_onehot(const Representation& z, const ReprConfig& repr);

// Encoder, answer agent, decision agent, and discriminator, all built on the
// same one-hidden-layer architecture.
struct AgentBundle {
  FeatureLayout layout;
  ReprConfig repr;
  DivergenceKind divergence = DivergenceKind::TotalVariation;
  Mlp encoder;   // history features -> L*C logits (L heads over C codes)
  Mlp answerer;  // [repr one-hot ; question features] -> 2 logits
  Mlp decider;   // repr one-hot -> action logits
  Mlp critic;    // [history ; question ; answer] features -> raw scalar
  std::uint64_t version = 0;  // bumped on every parameter update

  static AgentBundle init(const EnvSpec& env, const ReprConfig& repr, DivergenceKind kind,
                          RandomStream& rng, int hidden = 64);

  std::vector<double> flatten_params() const;
  void unflatten_params(const std::vector<double>& params);
};

struct EncodeResult {
  Representation z;
  double log_prob = 0.0;
  Eigen::MatrixXd head_probs;  // C x L softmax probabilities
};
EncodeResult encode(const AgentBundle& bundle, const Eigen::Ref<const Eigen::VectorXd>& h_feat,
                    RandomStream& rng, bool deterministic = false);

struct AnswerResult {
  Preference choice = Preference::First;
  double log_prob = 0.0;
  Eigen::Vector2d dist;
};
AnswerResult answer_pairwise(const AgentBundle& bundle, const Representation& z,
                             const Eigen::Ref<const Eigen::VectorXd>& q_feat, RandomStream& rng,
                             bool deterministic = false);

struct ActResult {
  int action = 0;
  double log_prob = 0.0;
  Eigen::VectorXd dist;
};
ActResult act(const AgentBundle& bundle, const Representation& z,
              const std::vector<std::uint8_t>& mask, RandomStream& rng,
              bool deterministic = false);

// Critic forward pass followed by the divergence-specific clamp.
double criticize(const AgentBundle& bundle, const Eigen::Ref<const Eigen::VectorXd>& h_feat,
                 const Eigen::Ref<const Eigen::VectorXd>& q_feat,
                 const Eigen::Ref<const Eigen::VectorXd>& y_feat);

// Policy over histories induced by (encoder, decider): a fresh z is sampled
// at every step. Masks switch to the terminal set at h length H.
HistoryPolicy induced_policy(const AgentBundle& bundle, const EnvSpec& env,
                             bool deterministic = false);

// Flat binary checkpoint with a JSON header carrying the full config text,
// iteration, shapes, and content hashes. Loading validates both hashes.
void save_checkpoint(const std::string& path, const AgentBundle& bundle,
                     const FullConfig& config, int iteration);

struct Checkpoint {
  AgentBundle bundle;
  FullConfig config;
  int iteration = 0;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dhrl

#endif
