#include "dhrl/agents.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace dhrl {

Eigen::VectorXd featurize_history(const EnvSpec& env, const HistoryState& history) {
  history.validate(env);
  const int block = env.num_observations + env.num_actions;
  Eigen::VectorXd feat = Eigen::VectorXd::Zero(env.horizon * block + 1);
  const int t = history.length();
  if (t > env.horizon) throw ContractError("history longer than horizon");
  for (int i = 0; i < t; ++i) feat[i * block + history.observations[i]] = 1.0;
  for (std::size_t i = 0; i < history.actions.size(); ++i)
    feat[static_cast<int>(i) * block + env.num_observations + history.actions[i]] = 1.0;
  feat[feat.size() - 1] = static_cast<double>(t) / env.horizon;
  return feat;
}

Eigen::VectorXd featurize_question(const EnvSpec& env, const Question& question) {
  const auto* pc = std::get_if<PairwiseComparison>(&question);
  if (pc == nullptr)
    throw ContractError("only pairwise questions can be featurized for the answer agent");
  if (pc->item_a < 0 || pc->item_a >= env.num_actions || pc->item_b < 0 ||
      pc->item_b >= env.num_actions || pc->item_a == pc->item_b)
    throw ContractError("invalid pairwise question");
  Eigen::VectorXd feat = Eigen::VectorXd::Zero(2 * env.num_actions);
  feat[pc->item_a] = 1.0;
  feat[env.num_actions + pc->item_b] = 1.0;
  return feat;
}

Eigen::VectorXd featurize_answer(Preference choice) {
  Eigen::VectorXd feat = Eigen::VectorXd::Zero(2);
  feat[choice == Preference::First ? 0 : 1] = 1.0;
  return feat;
}

Eigen::VectorXd repr_onehot(const Representation& z, const ReprConfig& repr) {
  if (static_cast<int>(z.codes.size()) != repr.length)
    throw ContractError("representation length mismatch");
  Eigen::VectorXd feat = Eigen::VectorXd::Zero(repr.length * repr.codebook);
  for (int l = 0; l < repr.length; ++l) {
    const int code = z.codes[l];
    if (code < 0 || code >= repr.codebook) throw ContractError("code out of range");
    feat[l * repr.codebook + code] = 1.0;
  }
  return feat;
}

AgentBundle AgentBundle::init(const EnvSpec& env, const ReprConfig& repr, DivergenceKind kind,
                              RandomStream& rng, int hidden) {
  AgentBundle bundle;
  bundle.layout = FeatureLayout{env.num_observations, env.num_actions, env.horizon};
  bundle.repr = repr;
  bundle.divergence = kind;
  const int h_dim = bundle.layout.history_dim();
  const int q_dim = bundle.layout.question_dim();
  const int y_dim = bundle.layout.answer_dim();
  const int z_dim = repr.length * repr.codebook;
  RandomStream r1 = rng.split(1), r2 = rng.split(2), r3 = rng.split(3), r4 = rng.split(4);
  bundle.encoder = Mlp::init(h_dim, hidden, z_dim, r1);
  bundle.answerer = Mlp::init(z_dim + q_dim, hidden, 2, r2);
  bundle.decider = Mlp::init(z_dim, hidden, env.num_actions, r3);
  bundle.critic = Mlp::init(h_dim + q_dim + y_dim, hidden, 1, r4);
  return bundle;
}

std::vector<double> AgentBundle::flatten_params() const {
  std::vector<double> out;
  out.reserve(encoder.param_count() + answerer.param_count() + decider.param_count() +
              critic.param_count());
  encoder.flatten(out);
  answerer.flatten(out);
  decider.flatten(out);
  critic.flatten(out);
  return out;
}

void AgentBundle::unflatten_params(const std::vector<double>& params) {
  const std::size_t expected = encoder.param_count() + answerer.param_count() +
                               decider.param_count() + critic.param_count();
  if (params.size() != expected) throw Error("checkpoint parameter count mismatch");
  const double* cursor = params.data();
  encoder.unflatten(cursor);
  answerer.unflatten(cursor);
  decider.unflatten(cursor);
  critic.unflatten(cursor);
}

EncodeResult encode(const AgentBundle& bundle, const Eigen::Ref<const Eigen::VectorXd>& h_feat,
                    RandomStream& rng, bool deterministic) {
  const Eigen::VectorXd logits = bundle.encoder.forward_one(h_feat);
  if (!logits.allFinite()) throw Error("encoder produced non-finite output");
  const int L = bundle.repr.length, C = bundle.repr.codebook;
  EncodeResult res;
  res.head_probs = Eigen::MatrixXd(C, L);
  res.z.codes.resize(L);
  for (int l = 0; l < L; ++l) {
    const Eigen::VectorXd p = softmax_vector(logits.segment(l * C, C));
    res.head_probs.col(l) = p;
    int code = 0;
    if (deterministic) {
      p.maxCoeff(&code);
    } else {
      code = rng.categorical(p);
    }
    res.z.codes[l] = code;
    res.log_prob += std::log(p[code]);
  }
  return res;
}

AnswerResult answer_pairwise(const AgentBundle& bundle, const Representation& z,
                             const Eigen::Ref<const Eigen::VectorXd>& q_feat, RandomStream& rng,
                             bool deterministic) {
  Eigen::VectorXd input(bundle.repr.length * bundle.repr.codebook + q_feat.size());
  input << repr_onehot(z, bundle.repr), q_feat;
  const Eigen::VectorXd logits = bundle.answerer.forward_one(input);
  if (!logits.allFinite()) throw Error("answer agent produced non-finite output");
  const Eigen::VectorXd p = softmax_vector(logits);
  AnswerResult res;
  res.dist = p;
  int idx;
  if (deterministic) {
    // Ties break toward First.
    idx = p[0] >= p[1] ? 0 : 1;
  } else {
    idx = rng.categorical(p);
  }
  res.choice = idx == 0 ? Preference::First : Preference::Second;
  res.log_prob = std::log(p[idx]);
  return res;
}

ActResult act(const AgentBundle& bundle, const Representation& z,
              const std::vector<std::uint8_t>& mask, RandomStream& rng, bool deterministic) {
  if (static_cast<int>(mask.size()) != bundle.layout.actions)
    throw ContractError("action mask size mismatch");
  const Eigen::VectorXd logits = bundle.decider.forward_one(repr_onehot(z, bundle.repr));
  if (!logits.allFinite()) throw Error("decision agent produced non-finite output");
  double max_legal = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < logits.size(); ++a)
    if (mask[a] && logits[a] > max_legal) max_legal = logits[a];
  if (!std::isfinite(max_legal)) throw ContractError("all actions are masked");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(logits.size());
  double total = 0.0;
  for (int a = 0; a < logits.size(); ++a) {
    if (!mask[a]) continue;
    p[a] = std::exp(logits[a] - max_legal);
    total += p[a];
  }
  p /= total;
  ActResult res;
  res.dist = p;
  if (deterministic) {
    int best = -1;
    for (int a = 0; a < p.size(); ++a)
      if (mask[a] && (best < 0 || p[a] > p[best])) best = a;
    res.action = best;
  } else {
    res.action = rng.categorical(p);
  }
  res.log_prob = std::log(p[res.action]);
  return res;
}

double criticize(const AgentBundle& bundle, const Eigen::Ref<const Eigen::VectorXd>& h_feat,
                 const Eigen::Ref<const Eigen::VectorXd>& q_feat,
                 const Eigen::Ref<const Eigen::VectorXd>& y_feat) {
  Eigen::VectorXd input(h_feat.size() + q_feat.size() + y_feat.size());
  input << h_feat, q_feat, y_feat;
  const double raw = bundle.critic.forward_one(input)[0];
  if (!std::isfinite(raw)) throw Error("critic produced non-finite output");
  return clamp_critic(bundle.divergence, raw);
}

HistoryPolicy induced_policy(const AgentBundle& bundle, const EnvSpec& env, bool deterministic) {
  return [&bundle, &env, deterministic](const HistoryState& h, RandomStream& rng) {
    const Eigen::VectorXd h_feat = featurize_history(env, h);
    const EncodeResult enc = encode(bundle, h_feat, rng, deterministic);
    const auto mask = h.length() >= env.horizon ? env.terminal_mask() : env.interaction_mask();
    // The returned distribution is pi_D(. | z) for the sampled z.
    const Eigen::VectorXd logits = bundle.decider.forward_one(repr_onehot(enc.z, bundle.repr));
    double max_legal = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < logits.size(); ++a)
      if (mask[a] && logits[a] > max_legal) max_legal = logits[a];
    if (!std::isfinite(max_legal)) throw ContractError("all actions are masked");
    Eigen::VectorXd p = Eigen::VectorXd::Zero(logits.size());
    double total = 0.0;
    for (int a = 0; a < logits.size(); ++a) {
      if (!mask[a]) continue;
      p[a] = std::exp(logits[a] - max_legal);
      total += p[a];
    }
    p /= total;
    if (deterministic) {
      int best = -1;
      for (int a = 0; a < p.size(); ++a)
        if (mask[a] && (best < 0 || p[a] > p[best])) best = a;
      Eigen::VectorXd point = Eigen::VectorXd::Zero(p.size());
      point[best] = 1.0;
      return point;
    }
    return p;
  };
}

namespace {

constexpr char kMagic[8] = {'D', 'H', 'R', 'L', 'C', 'K', 'P', 'T'};

nlohmann::json shape_of(const Mlp& net) {
  return {net.in_dim(), net.hidden_dim(), net.out_dim()};
}

void check_shape(const Mlp& net, const nlohmann::json& shape, const char* name) {
  if (shape.size() != 3 || net.in_dim() != shape[0].get<int>() ||
      net.hidden_dim() != shape[1].get<int>() || net.out_dim() != shape[2].get<int>())
    throw Error(std::string("checkpoint shape mismatch for ") + name);
}

}  // namespace

void save_checkpoint(const std::string& path, const AgentBundle& bundle,
                     const FullConfig& config, int iteration) {
  const std::vector<double> params = bundle.flatten_params();
  const std::string config_text = config.canonical_text();
  nlohmann::ordered_json header;
  header["format_version"] = 1;
  header["config"] = config_text;
  header["config_hash"] = to_hex(fnv1a64(config_text));
  header["iteration"] = iteration;
  header["hidden"] = bundle.encoder.hidden_dim();
  header["shapes"] = {{"encoder", shape_of(bundle.encoder)},
                      {"answerer", shape_of(bundle.answerer)},
                      {"decider", shape_of(bundle.decider)},
                      {"critic", shape_of(bundle.critic)}};
  header["param_count"] = params.size();
  header["params_hash"] = to_hex(fnv1a64(params.data(), params.size() * sizeof(double)));
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t header_len = static_cast<std::uint32_t>(header_text.size());
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_text.data(), header_text.size());
  out.write(reinterpret_cast<const char*>(params.data()), params.size() * sizeof(double));
  if (!out) throw Error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error("not a checkpoint file: " + path);
  std::uint32_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), header_len);
  if (!in) throw Error("truncated checkpoint header: " + path);
  const nlohmann::json header = nlohmann::json::parse(header_text);
  if (header.at("format_version").get<int>() != 1)
    throw Error("unsupported checkpoint format version");

  const std::string config_text = header.at("config").get<std::string>();
  if (to_hex(fnv1a64(config_text)) != header.at("config_hash").get<std::string>())
    throw Error("checkpoint config hash mismatch");

  Checkpoint ckpt;
  ckpt.config = FullConfig::from_string(config_text);
  ckpt.iteration = header.at("iteration").get<int>();
  const EnvSpec env = ckpt.config.build_env();
  RandomStream init_rng(ckpt.config.seed);
  ckpt.bundle = AgentBundle::init(env, ckpt.config.repr, ckpt.config.divergence, init_rng,
                                  header.at("hidden").get<int>());
  check_shape(ckpt.bundle.encoder, header.at("shapes").at("encoder"), "encoder");
  check_shape(ckpt.bundle.answerer, header.at("shapes").at("answerer"), "answerer");
  check_shape(ckpt.bundle.decider, header.at("shapes").at("decider"), "decider");
  check_shape(ckpt.bundle.critic, header.at("shapes").at("critic"), "critic");

  const std::size_t count = header.at("param_count").get<std::size_t>();
  std::vector<double> params(count);
  in.read(reinterpret_cast<char*>(params.data()), count * sizeof(double));
  if (!in) throw Error("truncated checkpoint payload: " + path);
  if (to_hex(fnv1a64(params.data(), params.size() * sizeof(double))) !=
      header.at("params_hash").get<std::string>())
    throw Error("checkpoint parameter hash mismatch");
  ckpt.bundle.unflatten_params(params);
  ckpt.bundle.encoder.check_finite();
  ckpt.bundle.answerer.check_finite();
  ckpt.bundle.decider.check_finite();
  ckpt.bundle.critic.check_finite();
  return ckpt;
}

}  // namespace dhrl
