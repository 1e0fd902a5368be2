#include "dhrl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "dhrl/eval.hpp"
#include "dhrl/train.hpp"

namespace dhrl {

BeliefVector brute_force_belief(const EnvSpec& env, const HistoryState& history) {
  history.validate(env);
  const int t = history.length();
  if (t == 0) return env.initial_dist;
  BeliefVector posterior = BeliefVector::Zero(env.num_states);
  std::vector<int> trace(t, 0);
  double total = 0.0;
  while (true) {
    double w = env.initial_dist[trace[0]] * env.emission[trace[0]][0][history.observations[0]];
    for (int i = 1; i < t && w > 0.0; ++i) {
      const int a = history.actions[i - 1];
      w *= env.transition[trace[i - 1]][a][trace[i]] *
           env.emission[trace[i]][a][history.observations[i]];
    }
    posterior[trace[t - 1]] += w;
    total += w;
    int pos = t - 1;
    while (pos >= 0 && ++trace[pos] == env.num_states) trace[pos--] = 0;
    if (pos < 0) break;
  }
  if (total <= 1e-300) throw ImpossibleHistoryError("impossible history");
  return posterior / total;
}

double brute_force_future_probability(const EnvSpec& env, const HistoryState& history,
                                      const std::vector<std::pair<int, int>>& test) {
  if (test.empty()) return 1.0;
  const int t = history.length();
  const int n = t + static_cast<int>(test.size());
  double joint = 0.0, marginal = 0.0;
  std::vector<int> trace(n, 0);
  while (true) {
    double w = env.initial_dist[trace[0]] * env.emission[trace[0]][0][history.observations[0]];
    for (int i = 1; i < t && w > 0.0; ++i) {
      const int a = history.actions[i - 1];
      w *= env.transition[trace[i - 1]][a][trace[i]] *
           env.emission[trace[i]][a][history.observations[i]];
    }
    double w_test = w;
    for (std::size_t k = 0; k < test.size() && w_test > 0.0; ++k) {
      const auto& [a, o] = test[k];
      const int i = t + static_cast<int>(k);
      w_test *= env.transition[trace[i - 1]][a][trace[i]] * env.emission[trace[i]][a][o];
    }
    joint += w_test;
    // Count each history trace exactly once: marginal ignores the test tail,
    // so only accumulate when the tail odometer is at zero.
    bool tail_zero = true;
    for (int i = t; i < n; ++i) tail_zero = tail_zero && trace[i] == 0;
    if (tail_zero) marginal += w;
    int pos = n - 1;
    while (pos >= 0 && ++trace[pos] == env.num_states) trace[pos--] = 0;
    if (pos < 0) break;
  }
  if (marginal <= 1e-300) throw ImpossibleHistoryError("impossible history");
  return joint / marginal;
}

std::vector<HistoryState> enumerate_histories(const EnvSpec& env, int length) {
  std::vector<HistoryState> out;
  if (length < 1) return out;
  const long long combos = [&] {
    long long c = env.num_observations;
    for (int i = 1; i < length; ++i) c *= env.num_actions * env.num_observations;
    return c;
  }();
  for (long long idx = 0; idx < combos; ++idx) {
    long long rest = idx;
    HistoryState h;
    h.observations.push_back(static_cast<int>(rest % env.num_observations));
    rest /= env.num_observations;
    for (int i = 1; i < length; ++i) {
      h.actions.push_back(static_cast<int>(rest % env.num_actions));
      rest /= env.num_actions;
      h.observations.push_back(static_cast<int>(rest % env.num_observations));
      rest /= env.num_observations;
    }
    out.push_back(std::move(h));
  }
  return out;
}

namespace {

CheckResult make_check(const std::string& name, bool pass, const std::string& detail) {
  return CheckResult{name, pass, detail};
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

std::vector<CheckResult> verify_oracle_equivalence() {
  std::vector<CheckResult> results;
  const EnvSpec signal = make_signal_env(6);
  double worst_belief = 0.0, worst_psr = 0.0;
  int compared = 0;
  for (int len = 1; len <= 4; ++len) {
    for (const auto& h : enumerate_histories(signal, len)) {
      bool filter_ok = true, brute_ok = true;
      BeliefVector filtered, brute;
      try {
        filtered = exact_belief(signal, h);
      } catch (const ImpossibleHistoryError&) {
        filter_ok = false;
      }
      try {
        brute = brute_force_belief(signal, h);
      } catch (const ImpossibleHistoryError&) {
        brute_ok = false;
      }
      if (filter_ok != brute_ok) {
        results.push_back(make_check("belief filter vs enumeration", false,
                                     "impossible-history disagreement"));
        return results;
      }
      if (!filter_ok) continue;
      worst_belief = std::max(worst_belief, (filtered - brute).cwiseAbs().maxCoeff());
      ++compared;
      // One-step and two-step tests from this history.
      RandomStream rng(fnv1a64("psr") + len);
      for (int trial = 0; trial < 3; ++trial) {
        std::vector<std::pair<int, int>> test;
        const int steps = 1 + rng.uniform_int(2);
        for (int k = 0; k < steps; ++k)
          test.emplace_back(rng.uniform_int(signal.num_actions),
                            rng.uniform_int(signal.num_observations));
        const double filter_p = future_probability(signal, h, test);
        const double brute_p = brute_force_future_probability(signal, h, test);
        worst_psr = std::max(worst_psr, std::abs(filter_p - brute_p));
      }
    }
  }
  results.push_back(make_check("belief filter vs enumeration (signal, len<=4)",
                               worst_belief < 1e-10,
                               "sup abs diff " + fmt(worst_belief) + " over " +
                                   std::to_string(compared) + " histories"));
  results.push_back(make_check("future probability vs enumeration (signal, len<=4)",
                               worst_psr < 1e-10, "sup abs diff " + fmt(worst_psr)));

  // Same regime on a small recsim instance (static latent).
  const EnvSpec rec = make_recsim_env(6, 2, 3, 0.0, 0.6, 42);
  double worst_rec = 0.0;
  for (int len = 1; len <= 3; ++len) {
    RandomStream rng(fnv1a64("rec") + len);
    for (int trial = 0; trial < 40; ++trial) {
      HistoryState h;
      h.observations.push_back(rng.uniform_int(rec.num_observations));
      for (int i = 1; i < len; ++i) {
        h.actions.push_back(rng.uniform_int(rec.num_actions));
        h.observations.push_back(rng.uniform_int(rec.num_observations));
      }
      worst_rec = std::max(
          worst_rec, (exact_belief(rec, h) - brute_force_belief(rec, h)).cwiseAbs().maxCoeff());
      std::vector<std::pair<int, int>> test{{rng.uniform_int(rec.num_actions),
                                             rng.uniform_int(rec.num_observations)}};
      worst_rec = std::max(worst_rec, std::abs(future_probability(rec, h, test) -
                                               brute_force_future_probability(rec, h, test)));
    }
  }
  results.push_back(make_check("oracle equivalence (recsim sample)", worst_rec < 1e-10,
                               "sup abs diff " + fmt(worst_rec)));
  return results;
}

std::vector<CheckResult> verify_conjugates() {
  std::vector<CheckResult> results;
  const DivergenceKind kinds[] = {DivergenceKind::TotalVariation, DivergenceKind::ChiSquared,
                                  DivergenceKind::KL};
  double worst_fy = 0.0;
  RandomStream rng(fnv1a64("fenchel"));
  for (DivergenceKind kind : kinds) {
    for (int i = 0; i < 1000; ++i) {
      const double t = 5.0 * rng.uniform01();
      double x = 0.0;
      switch (kind) {
        case DivergenceKind::TotalVariation: x = rng.uniform01() - 0.5; break;
        case DivergenceKind::ChiSquared: x = -2.5 + 7.0 * rng.uniform01(); break;
        case DivergenceKind::KL: x = -5.0 + 8.0 * rng.uniform01(); break;
      }
      worst_fy = std::max(worst_fy, t * x - f_value(kind, t) - f_conjugate(kind, x));
    }
  }
  results.push_back(make_check("Fenchel-Young inequality (1000 pairs per divergence)",
                               worst_fy < 1e-9, "max violation " + fmt(worst_fy)));

  double worst_bi = 0.0;
  for (DivergenceKind kind : kinds) {
    double x_lo = 0.0, x_hi = 0.0, step = 0.0;
    switch (kind) {
      case DivergenceKind::TotalVariation: x_lo = -0.5; x_hi = 0.5; step = 1e-3; break;
      case DivergenceKind::ChiSquared: x_lo = -2.5; x_hi = 7.0; step = 5e-3; break;
      case DivergenceKind::KL: x_lo = -40.0; x_hi = 3.0; step = 5e-3; break;
    }
    for (double t = 0.0; t <= 4.0 + 1e-9; t += 0.05) {
      double best = -1e300;
      for (double x = x_lo; x <= x_hi + 1e-12; x += step)
        best = std::max(best, t * x - f_conjugate(kind, x));
      worst_bi = std::max(worst_bi, std::abs(best - f_value(kind, t)));
    }
  }
  results.push_back(make_check("grid biconjugation recovers f", worst_bi < 1e-4,
                               "max abs error " + fmt(worst_bi)));

  double worst_convex = -1.0;
  for (DivergenceKind kind : kinds) {
    for (int i = 0; i < 100; ++i) {
      const double t1 = 5.0 * rng.uniform01(), t2 = 5.0 * rng.uniform01();
      const double alpha = rng.uniform01();
      const double lhs = f_value(kind, alpha * t1 + (1 - alpha) * t2);
      const double rhs = alpha * f_value(kind, t1) + (1 - alpha) * f_value(kind, t2);
      worst_convex = std::max(worst_convex, lhs - rhs);
    }
  }
  results.push_back(make_check("f convexity sweep", worst_convex < 1e-12,
                               "max violation " + fmt(worst_convex)));
  return results;
}

namespace {

// Scalar losses with analytic upstream gradients, used to exercise each
// network composition end to end in the finite-difference check.
struct GradCase {
  Mlp net;
  Eigen::VectorXd input;
  // Returns loss; fills upstream on the raw outputs.
  std::function<double(const Eigen::VectorXd& out, Eigen::VectorXd& upstream)> loss;
};

double numeric_vs_analytic(GradCase& gc) {
  const Mlp::Forward fwd = gc.net.forward(gc.input);
  Eigen::VectorXd upstream(gc.net.out_dim());
  gc.loss(fwd.out.col(0), upstream);
  const Mlp::Grads grads = gc.net.backward(gc.input, fwd, upstream);

  std::vector<double> g;
  g.insert(g.end(), grads.w1.data(), grads.w1.data() + grads.w1.size());
  g.insert(g.end(), grads.b1.data(), grads.b1.data() + grads.b1.size());
  g.insert(g.end(), grads.w2.data(), grads.w2.data() + grads.w2.size());
  g.insert(g.end(), grads.b2.data(), grads.b2.data() + grads.b2.size());

  Mlp probe_net = gc.net;
  std::vector<double> params;
  gc.net.flatten(params);
  const double eps = 1e-5;
  double worst = 0.0;
  Eigen::VectorXd scratch(gc.net.out_dim());
  std::vector<double> p = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    p[i] = params[i] + eps;
    probe_net.set_params(p);
    const double up = gc.loss(probe_net.forward_one(gc.input), scratch);
    p[i] = params[i] - eps;
    probe_net.set_params(p);
    const double down = gc.loss(probe_net.forward_one(gc.input), scratch);
    p[i] = params[i];
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(numeric), std::abs(g[i]), 1e-6});
    worst = std::max(worst, std::abs(numeric - g[i]) / denom);
  }
  return worst;
}

}  // namespace

double max_gradient_check_error(int points) {
  const EnvSpec env = make_recsim_env();
  const ReprConfig repr;
  double worst = 0.0;
  for (int point = 0; point < points; ++point) {
    RandomStream rng(fnv1a64("gradcheck") + static_cast<std::uint64_t>(point));
    AgentBundle bundle = AgentBundle::init(env, repr, DivergenceKind::TotalVariation, rng);

    auto random_input = [&rng](int dim) {
      Eigen::VectorXd x(dim);
      for (int i = 0; i < dim; ++i) x[i] = 2.0 * rng.uniform01() - 1.0;
      return x;
    };

    {  // encoder: sum of per-head log softmax probabilities
      GradCase gc;
      gc.net = bundle.encoder;
      gc.input = random_input(gc.net.in_dim());
      std::vector<int> targets(repr.length);
      for (int l = 0; l < repr.length; ++l) targets[l] = rng.uniform_int(repr.codebook);
      const int C = repr.codebook;
      gc.loss = [targets, C](const Eigen::VectorXd& out, Eigen::VectorXd& upstream) {
        double loss = 0.0;
        upstream.setZero();
        for (std::size_t l = 0; l < targets.size(); ++l) {
          const Eigen::VectorXd p = softmax_vector(out.segment(l * C, C));
          loss += std::log(p[targets[l]]);
          Eigen::VectorXd u = -p;
          u[targets[l]] += 1.0;
          upstream.segment(l * C, C) = u;
        }
        return loss;
      };
      worst = std::max(worst, numeric_vs_analytic(gc));
    }
    {  // answer agent: log softmax of a sampled class
      GradCase gc;
      gc.net = bundle.answerer;
      gc.input = random_input(gc.net.in_dim());
      const int target = rng.uniform_int(2);
      gc.loss = [target](const Eigen::VectorXd& out, Eigen::VectorXd& upstream) {
        const Eigen::VectorXd p = softmax_vector(out);
        upstream = -p;
        upstream[target] += 1.0;
        return std::log(p[target]);
      };
      worst = std::max(worst, numeric_vs_analytic(gc));
    }
    {  // decision agent: masked log softmax
      GradCase gc;
      gc.net = bundle.decider;
      gc.input = random_input(gc.net.in_dim());
      const auto mask = env.interaction_mask();
      std::vector<int> legal;
      for (int a = 0; a < env.num_actions; ++a)
        if (mask[a]) legal.push_back(a);
      const int target = legal[rng.uniform_int(static_cast<int>(legal.size()))];
      gc.loss = [mask, target](const Eigen::VectorXd& out, Eigen::VectorXd& upstream) {
        double max_legal = -1e300;
        for (int a = 0; a < out.size(); ++a)
          if (mask[a]) max_legal = std::max(max_legal, out[a]);
        double total = 0.0;
        Eigen::VectorXd p = Eigen::VectorXd::Zero(out.size());
        for (int a = 0; a < out.size(); ++a) {
          if (!mask[a]) continue;
          p[a] = std::exp(out[a] - max_legal);
          total += p[a];
        }
        p /= total;
        upstream = -p;
        upstream[target] += 1.0;
        return std::log(p[target]);
      };
      worst = std::max(worst, numeric_vs_analytic(gc));
    }
    for (DivergenceKind kind : {DivergenceKind::TotalVariation, DivergenceKind::ChiSquared,
                                DivergenceKind::KL}) {
      // critic: f*(clamp(raw)) through the clamp composition
      GradCase gc;
      gc.net = bundle.critic;
      gc.input = random_input(gc.net.in_dim());
      gc.loss = [kind](const Eigen::VectorXd& out, Eigen::VectorXd& upstream) {
        const double raw = out[0];
        const double clamped = clamp_critic(kind, raw);
        upstream.resize(1);
        upstream[0] = f_conjugate_prime(kind, clamped) * clamp_critic_grad(kind, raw);
        return f_conjugate(kind, clamped);
      };
      worst = std::max(worst, numeric_vs_analytic(gc));
    }
  }
  return worst;
}

std::vector<CheckResult> verify_gradients() {
  const double worst = max_gradient_check_error(10);
  return {make_check("finite-difference gradient agreement (all default shapes)",
                     worst < 1e-4, "max relative error " + fmt(worst))};
}

namespace {

struct CalibrationData {
  Eigen::MatrixXd agent_in;
  Eigen::MatrixXd truth_in;
};

// Contexts from uniform rollouts in the default recsim env; answers for both
// populations drawn per the provided rule.
CalibrationData make_calibration_data(int n, bool identical, RandomStream& rng) {
  const EnvSpec env = make_recsim_env();
  const FeatureLayout layout{env.num_observations, env.num_actions, env.horizon};
  const int h_dim = layout.history_dim(), q_dim = layout.question_dim();
  const int in_dim = h_dim + q_dim + layout.answer_dim();
  CalibrationData data;
  data.agent_in = Eigen::MatrixXd::Zero(in_dim, n);
  data.truth_in = Eigen::MatrixXd::Zero(in_dim, n);
  const HistoryPolicy policy = make_uniform_policy(env);
  const auto mask = env.interaction_mask();
  std::vector<int> items;
  for (int m = 0; m < env.num_actions; ++m)
    if (mask[m]) items.push_back(m);

  int filled = 0;
  for (int e = 0; filled < n; ++e) {
    RandomStream ep_rng = rng.split(static_cast<std::uint64_t>(e));
    const Trajectory traj = sample_trajectory(env, policy, ep_rng);
    for (int t = 1; t < env.horizon && filled < n; ++t) {
      auto [h, future] = split(traj, t);
      (void)future;
      const Eigen::VectorXd h_feat = featurize_history(env, h);
      const int ia = items[ep_rng.uniform_int(static_cast<int>(items.size()))];
      int ib = ia;
      while (ib == ia) ib = items[ep_rng.uniform_int(static_cast<int>(items.size()))];
      Eigen::VectorXd base = Eigen::VectorXd::Zero(data.agent_in.rows());
      base.head(h_dim) = h_feat;
      base[h_dim + ia] = 1.0;
      base[h_dim + env.num_actions + ib] = 1.0;
      data.agent_in.col(filled) = base;
      data.truth_in.col(filled) = base;
      if (identical) {
        const double p = bayes_optimal_pairwise(env, h, PairwiseComparison{ia, ib});
        const int y_truth = ep_rng.uniform01() < p ? 0 : 1;
        const int y_agent = ep_rng.uniform01() < p ? 0 : 1;
        data.truth_in(h_dim + q_dim + y_truth, filled) = 1.0;
        data.agent_in(h_dim + q_dim + y_agent, filled) = 1.0;
      } else {
        data.truth_in(h_dim + q_dim + 0, filled) = 1.0;  // truth always First
        data.agent_in(h_dim + q_dim + 1, filled) = 1.0;  // agent always Second
      }
      ++filled;
    }
  }
  return data;
}

double train_critic_and_estimate(const CalibrationData& data, DivergenceKind kind, int steps,
                                 int minibatch, double lr, RandomStream& rng) {
  const int n = static_cast<int>(data.agent_in.cols());
  Mlp critic = Mlp::init(static_cast<int>(data.agent_in.rows()), 64, 1, rng);
  for (int s = 0; s < steps; ++s) {
    Eigen::MatrixXd xa(data.agent_in.rows(), minibatch), xt(data.truth_in.rows(), minibatch);
    for (int i = 0; i < minibatch; ++i) {
      const int pick = rng.uniform_int(n);
      xa.col(i) = data.agent_in.col(pick);
      xt.col(i) = data.truth_in.col(pick);
    }
    const Mlp::Forward fa = critic.forward(xa);
    const Mlp::Forward ft = critic.forward(xt);
    Eigen::MatrixXd ua(1, minibatch), ut(1, minibatch);
    for (int i = 0; i < minibatch; ++i) {
      const double raw_a = fa.out(0, i), raw_t = ft.out(0, i);
      ua(0, i) = f_conjugate_prime(kind, clamp_critic(kind, raw_a)) *
                 clamp_critic_grad(kind, raw_a) / minibatch;
      ut(0, i) = -clamp_critic_grad(kind, raw_t) / minibatch;
    }
    Mlp::Grads g = critic.backward(xa, fa, ua);
    const Mlp::Grads gt = critic.backward(xt, ft, ut);
    g.w1 += gt.w1;
    g.b1 += gt.b1;
    g.w2 += gt.w2;
    g.b2 += gt.b2;
    critic.apply(g, -lr);
  }
  const Mlp::Forward fa = critic.forward(data.agent_in);
  const Mlp::Forward ft = critic.forward(data.truth_in);
  std::vector<double> ga(n), gt(n);
  for (int i = 0; i < n; ++i) {
    ga[i] = clamp_critic(kind, fa.out(0, i));
    gt[i] = clamp_critic(kind, ft.out(0, i));
  }
  return -discriminator_objective(kind, ga, gt);
}

}  // namespace

std::vector<CheckResult> verify_calibration() {
  std::vector<CheckResult> results;
  RandomStream rng(fnv1a64("calibration"));
  {
    RandomStream data_rng = rng.split(1), train_rng = rng.split(2);
    const CalibrationData data = make_calibration_data(10000, /*identical=*/true, data_rng);
    const double d_hat = train_critic_and_estimate(data, DivergenceKind::TotalVariation, 2000,
                                                   128, 1e-2, train_rng);
    results.push_back(make_check("discriminator on identical distributions (TV)",
                                 std::abs(d_hat) <= 0.05, "|D| = " + fmt(std::abs(d_hat))));
  }
  {
    RandomStream data_rng = rng.split(3), train_rng = rng.split(4);
    const CalibrationData data = make_calibration_data(10000, /*identical=*/false, data_rng);
    const double d_hat = train_critic_and_estimate(data, DivergenceKind::TotalVariation, 2000,
                                                   128, 1e-2, train_rng);
    results.push_back(make_check("discriminator on disjoint point masses (TV)", d_hat >= 0.95,
                                 "D = " + fmt(d_hat)));
  }
  return results;
}

std::vector<CheckResult> verify_structural() {
  std::vector<CheckResult> results;
  const EnvSpec env = make_recsim_env();
  RandomStream rng(fnv1a64("structural"));

  {  // split/join round-trip
    bool ok = true;
    const HistoryPolicy policy = make_uniform_policy(env);
    for (int e = 0; e < 20 && ok; ++e) {
      RandomStream ep = rng.split(e);
      const Trajectory traj = sample_trajectory(env, policy, ep);
      for (int t = 1; t < env.horizon; ++t) {
        auto [h, f] = split(traj, t);
        const Trajectory back = join(h, f);
        ok = ok && back.observations == traj.observations && back.actions == traj.actions &&
             back.terminal_action == traj.terminal_action;
      }
    }
    results.push_back(make_check("split/join round-trip", ok, "20 trajectories, all t"));
  }
  {  // softmax normalization, positivity, log-prob consistency
    RandomStream init = rng.split(100);
    const AgentBundle bundle =
        AgentBundle::init(env, ReprConfig{}, DivergenceKind::TotalVariation, init);
    double worst_sum = 0.0, worst_logp = 0.0;
    bool positive = true;
    const HistoryPolicy policy = make_uniform_policy(env);
    for (int e = 0; e < 10; ++e) {
      RandomStream ep = rng.split(200 + e);
      const Trajectory traj = sample_trajectory(env, policy, ep);
      for (int t = 1; t < env.horizon; ++t) {
        auto [h, f] = split(traj, t);
        (void)f;
        const Eigen::VectorXd feat = featurize_history(env, h);
        const EncodeResult enc = encode(bundle, feat, ep);
        for (int l = 0; l < bundle.repr.length; ++l) {
          const Eigen::VectorXd p = enc.head_probs.col(l);
          worst_sum = std::max(worst_sum, std::abs(p.sum() - 1.0));
          positive = positive && (p.array() > 0.0).all();
        }
        double logp = 0.0;
        for (int l = 0; l < bundle.repr.length; ++l)
          logp += std::log(enc.head_probs(enc.z.codes[l], l));
        worst_logp = std::max(worst_logp, std::abs(logp - enc.log_prob));
        const ActResult a = act(bundle, enc.z, env.interaction_mask(), ep);
        worst_sum = std::max(worst_sum, std::abs(a.dist.sum() - 1.0));
        worst_logp = std::max(worst_logp, std::abs(std::log(a.dist[a.action]) - a.log_prob));
      }
    }
    results.push_back(make_check("softmax heads normalized, positive, log-prob consistent",
                                 worst_sum < 1e-12 && worst_logp < 1e-12 && positive,
                                 "max |sum-1| " + fmt(worst_sum) + ", max logp err " +
                                     fmt(worst_logp)));
  }
  {  // featurization injectivity, exhaustive at length <= 3 on the signal env
    const EnvSpec signal = make_signal_env(6);
    std::set<std::string> seen;
    int count = 0;
    bool injective = true;
    for (int len = 1; len <= 3; ++len) {
      for (const auto& h : enumerate_histories(signal, len)) {
        const Eigen::VectorXd f = featurize_history(signal, h);
        std::ostringstream key;
        for (int i = 0; i < f.size(); ++i) key << f[i] << ",";
        injective = injective && seen.insert(key.str()).second;
        ++count;
      }
    }
    results.push_back(make_check("history featurization injective (exhaustive len<=3)",
                                 injective, std::to_string(count) + " histories"));
  }
  {  // critic clamps
    bool ok = true;
    ok = ok && std::abs(clamp_critic(DivergenceKind::TotalVariation, 0.0)) < 1e-15;
    const double saturated = clamp_critic(DivergenceKind::TotalVariation, 1e3);
    ok = ok && saturated > 0.4999 && saturated < 0.5;
    ok = ok && clamp_critic(DivergenceKind::ChiSquared, -5.0) == -2.0;
    ok = ok && clamp_critic(DivergenceKind::KL, 1.7) == 1.7;
    results.push_back(make_check("critic clamps respect conjugate domains", ok, ""));
  }
  return results;
}

std::vector<CheckResult> verify_determinism() {
  FullConfig cfg;
  cfg.horizon = 5;
  cfg.train.iterations = 4;
  cfg.train.batch_size = 8;
  cfg.train.critic_warmup = 1;
  cfg.train.policy_update_delay = 1;
  cfg.seed = 77;
  auto run_once = [&cfg]() {
    std::string text;
    const TrainResult result = train(cfg);
    for (const auto& m : result.metrics) text += m.to_jsonl() + "\n";
    return text;
  };
  const std::string first = run_once();
  const std::string second = run_once();
  return {make_check("training metrics bit-identical across reruns", first == second,
                     first == second ? "identical" : "mismatch")};
}

std::vector<CheckResult> run_verify_checks() {
  std::vector<CheckResult> all;
  for (auto group : {verify_oracle_equivalence, verify_conjugates, verify_gradients,
                     verify_calibration, verify_structural, verify_determinism}) {
    const auto results = group();
    all.insert(all.end(), results.begin(), results.end());
  }
  return all;
}

}  // namespace dhrl
