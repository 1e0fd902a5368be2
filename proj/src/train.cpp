#include "dhrl/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace dhrl {

namespace {

constexpr std::uint64_t kInitSalt = 0xA11CE;
constexpr std::uint64_t kIterationSalt = 0x17E2A710ULL;
constexpr std::uint64_t kQaSalt = 101;
constexpr std::uint64_t kAnswerSalt = 102;

std::vector<int> split_times(const FullConfig& cfg) {
  std::vector<int> ts;
  if (cfg.train.fixed_split_t > 0) {
    ts.push_back(cfg.train.fixed_split_t);
  } else {
    for (int t = 1; t < cfg.horizon; ++t) ts.push_back(t);
  }
  return ts;
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

AdversarialQA AdversarialQA::init(const EnvSpec& env,
                                  const std::optional<std::vector<int>>& item_subset) {
  AdversarialQA adv;
  std::vector<int> items;
  if (item_subset.has_value()) {
    items = *item_subset;
  } else {
    for (int m = 0; m < env.num_actions; ++m) items.push_back(m);
  }
  for (int a : items)
    for (int b : items)
      if (a != b) adv.family.emplace_back(a, b);
  if (adv.family.empty()) throw ContractError("adversarial question family is empty");
  adv.logits = Eigen::VectorXd::Zero(static_cast<int>(adv.family.size()));
  return adv;
}

BatchRecord collect_batch(const EnvSpec& env, const AgentBundle& bundle, const FullConfig& cfg,
                          RandomStream& rng, const AdversarialQA* adversarial) {
  const int B = cfg.train.batch_size;
  const int H = env.horizon;
  const int BH = B * H;
  const int L = bundle.repr.length, C = bundle.repr.codebook;
  const int A = env.num_actions;

  BatchRecord batch;
  batch.policy_version = bundle.version;
  batch.batch_size = B;
  batch.horizon = H;
  batch.h_features = Eigen::MatrixXd::Zero(bundle.layout.history_dim(), BH);
  batch.head_probs = Eigen::MatrixXd(L * C, BH);
  batch.codes = Eigen::MatrixXi(L, BH);
  batch.z_log_prob = Eigen::VectorXd(BH);
  batch.z_onehot = Eigen::MatrixXd::Zero(L * C, BH);
  batch.action_probs = Eigen::MatrixXd::Zero(A, BH);
  batch.actions.assign(BH, 0);
  batch.rewards.assign(BH, 0.0);
  batch.reward_to_go.assign(BH, 0.0);

  std::vector<RandomStream> traj_rng;
  traj_rng.reserve(B);
  for (int b = 0; b < B; ++b) traj_rng.push_back(rng.split(static_cast<std::uint64_t>(b)));

  // Lockstep rollout across the batch.
  std::vector<int> latent(B);
  std::vector<HistoryState> histories(B);
  std::vector<Trajectory> trajectories(B);
  for (int b = 0; b < B; ++b) {
    latent[b] = traj_rng[b].categorical(env.initial_dist);
    const int o1 = traj_rng[b].categorical(env.emission[latent[b]][0]);
    histories[b].observations.push_back(o1);
    trajectories[b].observations.push_back(o1);
  }

  const auto interaction = env.interaction_mask();
  const auto terminal = env.terminal_mask();
  Eigen::MatrixXd x(bundle.layout.history_dim(), B);
  batch.encoder_hidden = Eigen::MatrixXd(bundle.encoder.hidden_dim(), BH);
  batch.decider_hidden = Eigen::MatrixXd(bundle.decider.hidden_dim(), BH);

  for (int t = 1; t <= H; ++t) {
    for (int b = 0; b < B; ++b) x.col(b) = featurize_history(env, histories[b]);
    const Mlp::Forward enc = bundle.encoder.forward(x);
    if (!enc.out.allFinite()) throw Error("encoder produced non-finite output");

    Eigen::MatrixXd z_onehot = Eigen::MatrixXd::Zero(L * C, B);
    for (int b = 0; b < B; ++b) {
      double log_prob = 0.0;
      for (int l = 0; l < L; ++l) {
        const Eigen::VectorXd p = softmax_vector(enc.out.col(b).segment(l * C, C));
        const int code = traj_rng[b].categorical(p);
        const int col = b * H + (t - 1);
        batch.head_probs.col(col).segment(l * C, C) = p;
        batch.codes(l, col) = code;
        z_onehot(l * C + code, b) = 1.0;
        log_prob += std::log(p[code]);
      }
      batch.z_log_prob[b * H + (t - 1)] = log_prob;
    }

    const Mlp::Forward dec = bundle.decider.forward(z_onehot);
    if (!dec.out.allFinite()) throw Error("decision agent produced non-finite output");
    const auto& mask = t == H ? terminal : interaction;
    for (int b = 0; b < B; ++b) {
      const int col = b * H + (t - 1);
      double max_legal = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < A; ++a)
        if (mask[a] && dec.out(a, b) > max_legal) max_legal = dec.out(a, b);
      if (!std::isfinite(max_legal)) throw ContractError("all actions are masked");
      double total = 0.0;
      for (int a = 0; a < A; ++a) {
        if (!mask[a]) continue;
        batch.action_probs(a, col) = std::exp(dec.out(a, b) - max_legal);
        total += batch.action_probs(a, col);
      }
      batch.action_probs.col(col) /= total;
      const int action = traj_rng[b].categorical(batch.action_probs.col(col));
      batch.actions[col] = action;

      const StepResult sr = step(env, latent[b], action, traj_rng[b]);
      latent[b] = sr.next_latent;
      batch.rewards[col] = sr.reward;
      if (t < H) {
        histories[b].actions.push_back(action);
        histories[b].observations.push_back(sr.observation);
        trajectories[b].actions.push_back(action);
        trajectories[b].observations.push_back(sr.observation);
      } else {
        trajectories[b].terminal_action = action;
      }
      trajectories[b].rewards.push_back(sr.reward);

      batch.h_features.col(col) = x.col(b);
      batch.encoder_hidden.col(col) = enc.hidden.col(b);
      batch.decider_hidden.col(col) = dec.hidden.col(b);
      batch.z_onehot.col(col) = z_onehot.col(b);
    }
  }

  double return_sum = 0.0;
  for (int b = 0; b < B; ++b) {
    double to_go = 0.0;
    for (int t = H; t >= 1; --t) {
      const int col = b * H + (t - 1);
      to_go += batch.rewards[col];
      batch.reward_to_go[col] = to_go;
    }
    return_sum += to_go;
  }
  batch.mean_return = return_sum / B;

  // Hindsight splitting and QA generation.
  QAGeneratorSpec qa_spec;
  qa_spec.kind = cfg.train.qa_kind == QAKind::Adversarial ? QAKind::Adversarial
                                                          : cfg.train.qa_kind;
  qa_spec.questions_per_split = cfg.train.questions;
  qa_spec.tie_rule = cfg.train.tie_rule;

  const std::vector<int> times = split_times(cfg);
  for (int b = 0; b < B; ++b) {
    RandomStream qa_rng = traj_rng[b].split(kQaSalt);
    for (int t : times) {
      const int col = b * H + (t - 1);
      auto [h, future] = split(trajectories[b], t);
      batch.split_columns.push_back(col);
      batch.split_histories.push_back(h);
      if (cfg.train.qa_kind == QAKind::Adversarial) {
        const auto ratings = realized_ratings(future);
        std::vector<int> candidates;
        for (std::size_t i = 0; i < adversarial->family.size(); ++i) {
          const auto& [ia, ib] = adversarial->family[i];
          if (ratings.count(ia) && ratings.count(ib)) candidates.push_back(static_cast<int>(i));
        }
        if (candidates.size() < 1) continue;
        Eigen::VectorXd w(candidates.size());
        for (std::size_t i = 0; i < candidates.size(); ++i)
          w[static_cast<int>(i)] = adversarial->logits[candidates[i]];
        const Eigen::VectorXd p = softmax_vector(w);
        for (int k = 0; k < cfg.train.questions; ++k) {
          const int pick = qa_rng.categorical(p);
          const auto& [ia, ib] = adversarial->family[candidates[pick]];
          const int ra = ratings.at(ia), rb = ratings.at(ib);
          Preference truth;
          if (ra > rb) {
            truth = Preference::First;
          } else if (rb > ra) {
            truth = Preference::Second;
          } else if (cfg.train.tie_rule == TieRule::Drop) {
            continue;
          } else {
            truth = qa_rng.uniform01() < 0.5 ? Preference::First : Preference::Second;
          }
          QARecord rec;
          rec.column = col;
          rec.item_a = ia;
          rec.item_b = ib;
          rec.truth = truth;
          rec.family_index = candidates[pick];
          rec.selection_log_prob = std::log(p[pick]);
          rec.candidates = candidates;
          batch.qa.push_back(std::move(rec));
        }
      } else {
        const auto samples = generate_qa(qa_spec, env, h, future, t, qa_rng);
        for (const auto& s : samples) {
          const auto& pc = std::get<PairwiseComparison>(s.question);
          QARecord rec;
          rec.column = col;
          rec.item_a = pc.item_a;
          rec.item_b = pc.item_b;
          rec.truth = std::get<PreferenceAnswer>(s.answer).choice;
          batch.qa.push_back(std::move(rec));
        }
      }
    }
  }

  const int n_qa = batch.qa_count();
  if (n_qa == 0) return batch;

  // Predict answers from the split representations.
  const int q_dim = bundle.layout.question_dim();
  batch.answer_in = Eigen::MatrixXd::Zero(L * C + q_dim, n_qa);
  for (int i = 0; i < n_qa; ++i) {
    const QARecord& rec = batch.qa[i];
    batch.answer_in.col(i).head(L * C) = batch.z_onehot.col(rec.column);
    batch.answer_in(L * C + rec.item_a, i) = 1.0;
    batch.answer_in(L * C + A + rec.item_b, i) = 1.0;
  }
  const Mlp::Forward ans = bundle.answerer.forward(batch.answer_in);
  if (!ans.out.allFinite()) throw Error("answer agent produced non-finite output");
  batch.answer_hidden = ans.hidden;
  {
    std::vector<RandomStream> ans_rng;
    ans_rng.reserve(B);
    for (int b = 0; b < B; ++b) ans_rng.push_back(traj_rng[b].split(kAnswerSalt));
    for (int i = 0; i < n_qa; ++i) {
      QARecord& rec = batch.qa[i];
      const int b = rec.column / H;
      const Eigen::Vector2d p = softmax_vector(ans.out.col(i));
      const int idx = ans_rng[b].categorical(p);
      rec.predicted = idx == 0 ? Preference::First : Preference::Second;
      rec.answer_log_prob = std::log(p[idx]);
      rec.answer_dist = p;
    }
  }

  // Critic on both answer sets.
  const int h_dim = bundle.layout.history_dim();
  const int in_dim = h_dim + q_dim + bundle.layout.answer_dim();
  batch.critic_in_agent = Eigen::MatrixXd::Zero(in_dim, n_qa);
  batch.critic_in_truth = Eigen::MatrixXd::Zero(in_dim, n_qa);
  for (int i = 0; i < n_qa; ++i) {
    const QARecord& rec = batch.qa[i];
    batch.critic_in_agent.col(i).head(h_dim) = batch.h_features.col(rec.column);
    batch.critic_in_agent(h_dim + rec.item_a, i) = 1.0;
    batch.critic_in_agent(h_dim + A + rec.item_b, i) = 1.0;
    batch.critic_in_truth.col(i) = batch.critic_in_agent.col(i);
    batch.critic_in_agent(h_dim + q_dim + (rec.predicted == Preference::First ? 0 : 1), i) = 1.0;
    batch.critic_in_truth(h_dim + q_dim + (rec.truth == Preference::First ? 0 : 1), i) = 1.0;
  }
  return batch;
}

std::optional<CriticStep> update_discriminator(AgentBundle& bundle, BatchRecord& batch,
                                               const FullConfig& cfg) {
  const int n = batch.qa_count();
  if (n == 0) return std::nullopt;
  const DivergenceKind kind = bundle.divergence;

  const Mlp::Forward fwd_agent = bundle.critic.forward(batch.critic_in_agent);
  const Mlp::Forward fwd_truth = bundle.critic.forward(batch.critic_in_truth);
  if (!fwd_agent.out.allFinite() || !fwd_truth.out.allFinite())
    throw Error("critic produced non-finite output");
  std::vector<double> g_agent(n), g_truth(n);
  for (int i = 0; i < n; ++i) {
    g_agent[i] = clamp_critic(kind, fwd_agent.out(0, i));
    g_truth[i] = clamp_critic(kind, fwd_truth.out(0, i));
    batch.qa[i].g_agent = g_agent[i];
    batch.qa[i].g_truth = g_truth[i];
  }
  const double loss = discriminator_objective(kind, g_agent, g_truth);

  // d/d raw of (1/n) sum [ f*(clamp(raw_agent)) - clamp(raw_truth) ].
  Eigen::MatrixXd up_agent(1, n), up_truth(1, n);
  for (int i = 0; i < n; ++i) {
    up_agent(0, i) = f_conjugate_prime(kind, g_agent[i]) *
                     clamp_critic_grad(kind, fwd_agent.out(0, i)) / n;
    up_truth(0, i) = -clamp_critic_grad(kind, fwd_truth.out(0, i)) / n;
  }
  Mlp::Grads grads = bundle.critic.backward(batch.critic_in_agent, fwd_agent, up_agent);
  const Mlp::Grads truth_grads =
      bundle.critic.backward(batch.critic_in_truth, fwd_truth, up_truth);
  grads.w1 += truth_grads.w1;
  grads.b1 += truth_grads.b1;
  grads.w2 += truth_grads.w2;
  grads.b2 += truth_grads.b2;
  if (!std::isfinite(grads.squared_norm())) throw Error("non-finite critic gradient");
  bundle.critic.apply(grads, -cfg.train.lr_critic);  // descent on the objective
  return CriticStep{loss, std::sqrt(grads.squared_norm())};
}

void compute_agent_rewards(BatchRecord& batch, const FullConfig& cfg, const AgentBundle& bundle) {
  const double lambda = cfg.train.lambda;
  const int n = batch.qa_count();
  std::vector<double> qa_sum(batch.h_features.cols(), 0.0);
  std::vector<int> qa_n(batch.h_features.cols(), 0);
  if (n > 0) {
    // Answer rewards use the critic as updated this iteration.
    const Mlp::Forward fresh_agent = bundle.critic.forward(batch.critic_in_agent);
    const Mlp::Forward fresh_truth = bundle.critic.forward(batch.critic_in_truth);
    for (int i = 0; i < n; ++i) {
      QARecord& rec = batch.qa[i];
      const double g = clamp_critic(bundle.divergence, fresh_agent.out(0, i));
      rec.reward_answer = answer_reward(bundle.divergence, g);
      rec.g_truth_fresh = clamp_critic(bundle.divergence, fresh_truth.out(0, i));
      qa_sum[rec.column] += rec.reward_answer;
      qa_n[rec.column] += 1;
    }
  }
  batch.r_encoder.assign(batch.split_columns.size(), 0.0);
  for (std::size_t i = 0; i < batch.split_columns.size(); ++i) {
    const int col = batch.split_columns[i];
    const double mean_ra = qa_n[col] > 0 ? qa_sum[col] / qa_n[col] : 0.0;
    batch.r_encoder[i] = (1.0 - lambda) * batch.reward_to_go[col] + lambda * mean_ra;
  }
}

PolicyStepStats policy_gradient_step(AgentBundle& bundle, const BatchRecord& batch,
                                     const FullConfig& cfg) {
  if (batch.policy_version != bundle.version)
    throw ContractError("off-policy update: batch was collected by different parameters");
  const double lambda = cfg.train.lambda;
  const double beta = cfg.train.entropy_bonus;
  const int L = bundle.repr.length, C = bundle.repr.codebook;
  const int cols = static_cast<int>(batch.h_features.cols());
  PolicyStepStats stats;

  // Decision agent: every decision point, reward-to-go, weight (1 - lambda).
  {
    double baseline = 0.0;
    if (cfg.train.batch_mean_baseline)
      baseline = mean_of(batch.reward_to_go);
    Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(batch.action_probs.rows(), cols);
    for (int c = 0; c < cols; ++c) {
      const double adv = (1.0 - lambda) * (batch.reward_to_go[c] - baseline);
      Eigen::VectorXd g = -batch.action_probs.col(c) * adv;
      g[batch.actions[c]] += adv;
      if (beta > 0.0) g += beta * entropy_grad_logits(batch.action_probs.col(c));
      upstream.col(c) = g / cols;
    }
    Mlp::Forward fwd{batch.decider_hidden, Eigen::MatrixXd()};
    const Mlp::Grads grads = bundle.decider.backward(batch.z_onehot, fwd, upstream);
    if (!std::isfinite(grads.squared_norm())) throw Error("non-finite decision gradient");
    stats.grad_norm_decider = std::sqrt(grads.squared_norm());
    bundle.decider.apply(grads, cfg.train.lr_policy);
  }

  // Answer agent: one sample per QA record, reward f*(g(h,q,y_hat)).
  const int n_qa = batch.qa_count();
  if (n_qa > 0) {
    double baseline = 0.0;
    if (cfg.train.batch_mean_baseline) {
      for (const auto& rec : batch.qa) baseline += rec.reward_answer;
      baseline /= n_qa;
    }
    Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(2, n_qa);
    for (int i = 0; i < n_qa; ++i) {
      const QARecord& rec = batch.qa[i];
      const double adv = rec.reward_answer - baseline;
      Eigen::Vector2d g = -rec.answer_dist * adv;
      g[rec.predicted == Preference::First ? 0 : 1] += adv;
      if (beta > 0.0) g += beta * entropy_grad_logits(rec.answer_dist);
      upstream.col(i) = g / n_qa;
    }
    Mlp::Forward fwd{batch.answer_hidden, Eigen::MatrixXd()};
    const Mlp::Grads grads = bundle.answerer.backward(batch.answer_in, fwd, upstream);
    if (!std::isfinite(grads.squared_norm())) throw Error("non-finite answer gradient");
    stats.grad_norm_answerer = std::sqrt(grads.squared_norm());
    bundle.answerer.apply(grads, cfg.train.lr_policy);
  }

  // Encoder: split-time representations with the interpolated reward.
  if (!batch.split_columns.empty()) {
    const int n_split = static_cast<int>(batch.split_columns.size());
    double baseline = 0.0;
    if (cfg.train.batch_mean_baseline) baseline = mean_of(batch.r_encoder);
    Eigen::MatrixXd x(batch.h_features.rows(), n_split);
    Eigen::MatrixXd hidden(batch.encoder_hidden.rows(), n_split);
    Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(L * C, n_split);
    for (int i = 0; i < n_split; ++i) {
      const int col = batch.split_columns[i];
      x.col(i) = batch.h_features.col(col);
      hidden.col(i) = batch.encoder_hidden.col(col);
      const double adv = batch.r_encoder[i] - baseline;
      for (int l = 0; l < L; ++l) {
        const Eigen::VectorXd p = batch.head_probs.col(col).segment(l * C, C);
        Eigen::VectorXd g = -p * adv;
        g[batch.codes(l, col)] += adv;
        if (beta > 0.0) g += beta * entropy_grad_logits(p);
        upstream.col(i).segment(l * C, C) = g / n_split;
      }
    }
    Mlp::Forward fwd{hidden, Eigen::MatrixXd()};
    const Mlp::Grads grads = bundle.encoder.backward(x, fwd, upstream);
    if (!std::isfinite(grads.squared_norm())) throw Error("non-finite encoder gradient");
    stats.grad_norm_encoder = std::sqrt(grads.squared_norm());
    bundle.encoder.apply(grads, cfg.train.lr_policy);
  }

  bundle.version += 1;
  return stats;
}

void adversarial_qa_step(AdversarialQA& adversarial, const BatchRecord& batch,
                         const FullConfig& cfg) {
  std::vector<double> rewards;
  std::vector<const QARecord*> recs;
  for (const auto& rec : batch.qa) {
    if (rec.family_index < 0) continue;
    recs.push_back(&rec);
    rewards.push_back(rec.g_truth_fresh - rec.reward_answer);
  }
  if (recs.empty()) return;
  const double baseline = cfg.train.batch_mean_baseline ? mean_of(rewards) : 0.0;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(adversarial.logits.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const QARecord& rec = *recs[i];
    const double adv = rewards[i] - baseline;
    Eigen::VectorXd w(rec.candidates.size());
    for (std::size_t j = 0; j < rec.candidates.size(); ++j)
      w[static_cast<int>(j)] = adversarial.logits[rec.candidates[j]];
    const Eigen::VectorXd p = softmax_vector(w);
    for (std::size_t j = 0; j < rec.candidates.size(); ++j) {
      const int fam = rec.candidates[j];
      double indicator = fam == rec.family_index ? 1.0 : 0.0;
      grad[fam] += adv * (indicator - p[static_cast<int>(j)]);
    }
  }
  grad /= static_cast<double>(recs.size());
  adversarial.logits += cfg.train.lr_policy * grad;
}

std::string MetricsRecord::to_jsonl() const {
  nlohmann::ordered_json rec;
  rec["iteration"] = iteration;
  rec["mean_return"] = mean_return;
  rec["d_hat"] = d_hat;
  rec["answer_accuracy"] = answer_accuracy;
  rec["bayes_accuracy"] = bayes_accuracy;
  rec["reward_decision"] = reward_decision;
  rec["reward_answer"] = reward_answer;
  rec["reward_encoder"] = reward_encoder;
  rec["grad_norm_encoder"] = grad_norm_encoder;
  rec["grad_norm_answerer"] = grad_norm_answerer;
  rec["grad_norm_decider"] = grad_norm_decider;
  rec["grad_norm_critic"] = grad_norm_critic;
  rec["qa_count"] = qa_count;
  rec["qa_skipped"] = qa_skipped;
  return rec.dump();
}

TrainResult train(const FullConfig& cfg, const TrainHooks* hooks) {
  const EnvSpec env = cfg.build_env();
  RandomStream root(cfg.seed);
  RandomStream init_rng = root.split(kInitSalt);

  TrainResult result;
  result.bundle = AgentBundle::init(env, cfg.repr, cfg.divergence, init_rng);
  if (cfg.train.qa_kind == QAKind::Adversarial)
    result.adversarial = AdversarialQA::init(env, std::nullopt);

  const int start_updates = std::max(cfg.train.critic_warmup, cfg.train.policy_update_delay);
  const bool static_env = env.static_latent();

  for (int iter = 1; iter <= cfg.train.iterations; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    RandomStream iter_rng = root.split(kIterationSalt + static_cast<std::uint64_t>(iter));
    BatchRecord batch =
        collect_batch(env, result.bundle, cfg, iter_rng,
                      result.adversarial.has_value() ? &*result.adversarial : nullptr);

    MetricsRecord m;
    m.iteration = iter;
    m.mean_return = batch.mean_return;
    m.qa_count = batch.qa_count();

    const std::optional<CriticStep> critic_step =
        update_discriminator(result.bundle, batch, cfg);
    if (critic_step.has_value()) {
      m.d_hat = -critic_step->loss;
      m.grad_norm_critic = critic_step->grad_norm;
    } else {
      m.qa_skipped = true;
    }

    compute_agent_rewards(batch, cfg, result.bundle);
    m.reward_decision = mean_of(batch.reward_to_go);
    if (batch.qa_count() > 0) {
      double acc = 0.0, ra = 0.0;
      for (const auto& rec : batch.qa) {
        acc += rec.predicted == rec.truth ? 1.0 : 0.0;
        ra += rec.reward_answer;
      }
      m.answer_accuracy = acc / batch.qa_count();
      m.reward_answer = ra / batch.qa_count();
    }
    m.reward_encoder = mean_of(batch.r_encoder);

    if (static_env && batch.qa_count() > 0) {
      // Agreement of sampled answers with the exact-posterior argmax.
      std::vector<int> split_of_column(batch.batch_size * env.horizon, -1);
      for (std::size_t i = 0; i < batch.split_columns.size(); ++i)
        split_of_column[batch.split_columns[i]] = static_cast<int>(i);
      double agree = 0.0;
      int last_col = -1;
      BeliefVector belief;
      for (const auto& rec : batch.qa) {
        if (rec.column != last_col) {
          belief = exact_belief(env, batch.split_histories[split_of_column[rec.column]]);
          last_col = rec.column;
        }
        double p_first = 0.0;
        for (int u = 0; u < env.num_states; ++u) {
          if (belief[u] <= 0.0) continue;
          const Eigen::VectorXd& pa = env.emission[u][rec.item_a];
          const Eigen::VectorXd& pb = env.emission[u][rec.item_b];
          double win = 0.0, tie = 0.0;
          for (int x1 = 0; x1 < env.num_observations; ++x1)
            for (int x2 = 0; x2 < env.num_observations; ++x2) {
              const double joint = pa[x1] * pb[x2];
              if (x1 > x2) win += joint;
              if (x1 == x2) tie += joint;
            }
          p_first += belief[u] * (win + 0.5 * tie);
        }
        const Preference oracle = p_first >= 0.5 ? Preference::First : Preference::Second;
        agree += rec.predicted == oracle ? 1.0 : 0.0;
      }
      m.bayes_accuracy = agree / batch.qa_count();
    }

    if (iter > start_updates) {
      const PolicyStepStats stats = policy_gradient_step(result.bundle, batch, cfg);
      m.grad_norm_encoder = stats.grad_norm_encoder;
      m.grad_norm_answerer = stats.grad_norm_answerer;
      m.grad_norm_decider = stats.grad_norm_decider;
      if (result.adversarial.has_value())
        adversarial_qa_step(*result.adversarial, batch, cfg);
    }

    const auto t1 = std::chrono::steady_clock::now();
    m.wall_clock_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    if (!std::isfinite(m.mean_return) || !std::isfinite(m.d_hat))
      throw Error("non-finite training metric at iteration " + std::to_string(iter));
    result.metrics.push_back(m);
    if (hooks != nullptr && hooks->on_iteration) hooks->on_iteration(m, result.bundle);
  }
  return result;
}

}  // namespace dhrl
