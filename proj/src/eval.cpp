#include "dhrl/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <Eigen/Cholesky>
#include <json.hpp>

namespace dhrl {

namespace {

constexpr std::uint64_t kEvalSalt = 0xE7A1;

struct EvalQuestion {
  Preference truth;
  Preference agent;
  Preference oracle;
};

struct EvalSplit {
  Representation z;        // argmax codes
  BeliefVector belief;
};

struct EvalCollection {
  std::vector<EvalQuestion> questions;
  std::vector<EvalSplit> splits;
  bool has_ceiling = false;
};

EvalCollection collect_eval_data(const EnvSpec& env, const AgentBundle& bundle,
                                 const FullConfig& cfg, int episodes, RandomStream& rng,
                                 bool want_splits) {
  EvalCollection data;
  data.has_ceiling = env.static_latent();
  const HistoryPolicy policy = induced_policy(bundle, env, false);
  QAGeneratorSpec qa_spec;
  qa_spec.kind = QAKind::PairwiseHindsight;
  qa_spec.questions_per_split = cfg.train.questions;
  qa_spec.tie_rule = cfg.train.tie_rule;
  RandomStream det(0);  // deterministic-mode calls never consume draws

  for (int e = 0; e < episodes; ++e) {
    RandomStream ep_rng = rng.split(static_cast<std::uint64_t>(e));
    const Trajectory traj = sample_trajectory(env, policy, ep_rng);
    RandomStream qa_rng = ep_rng.split(7);
    for (int t = 1; t < env.horizon; ++t) {
      auto [h, future] = split(traj, t);
      const auto samples = generate_qa(qa_spec, env, h, future, t, qa_rng);
      if (samples.empty() && !want_splits) continue;
      const Eigen::VectorXd h_feat = featurize_history(env, h);
      const EncodeResult enc = encode(bundle, h_feat, det, /*deterministic=*/true);
      if (want_splits) data.splits.push_back({enc.z, exact_belief(env, h)});
      for (const auto& s : samples) {
        const auto& pc = std::get<PairwiseComparison>(s.question);
        EvalQuestion q;
        q.truth = std::get<PreferenceAnswer>(s.answer).choice;
        const AnswerResult ans = answer_pairwise(
            bundle, enc.z, featurize_question(env, s.question), det, /*deterministic=*/true);
        q.agent = ans.choice;
        if (data.has_ceiling) {
          const double p_first = bayes_optimal_pairwise(env, h, pc);
          q.oracle = p_first >= 0.5 ? Preference::First : Preference::Second;
        } else {
          q.oracle = Preference::First;
        }
        data.questions.push_back(q);
      }
    }
  }
  return data;
}

}  // namespace

double wilson_half_width(double fraction, int n) {
  if (n <= 0) return 1.0;
  const double z = 1.959963984540054;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  return z * std::sqrt(fraction * (1.0 - fraction) / n + z2 / (4.0 * n * n)) / denom;
}

PredictionEval eval_prediction_accuracy(const EnvSpec& env, const AgentBundle& bundle,
                                        const FullConfig& cfg, int episodes, RandomStream& rng) {
  const EvalCollection data = collect_eval_data(env, bundle, cfg, episodes, rng, false);
  PredictionEval out;
  out.n_questions = static_cast<int>(data.questions.size());
  out.has_ceiling = data.has_ceiling;
  if (data.questions.empty()) return out;
  double correct = 0.0, oracle_correct = 0.0;
  for (const auto& q : data.questions) {
    correct += q.agent == q.truth ? 1.0 : 0.0;
    oracle_correct += q.oracle == q.truth ? 1.0 : 0.0;
  }
  out.accuracy = correct / out.n_questions;
  out.half_width = wilson_half_width(out.accuracy, out.n_questions);
  if (data.has_ceiling) {
    out.ceiling_accuracy = oracle_correct / out.n_questions;
    out.ceiling_half_width = wilson_half_width(out.ceiling_accuracy, out.n_questions);
  }
  return out;
}

RecommendationEval eval_recommendation_reward(const EnvSpec& env, const AgentBundle& bundle,
                                              const FullConfig& cfg, int episodes,
                                              RandomStream& rng) {
  (void)cfg;
  if (!env.has_holdout()) throw ContractError("recommendation eval requires held-out items");
  RecommendationEval out;
  out.n_episodes = episodes;
  const auto terminal = env.terminal_mask();
  RandomStream det(0);
  double sum = 0.0, sum_sq = 0.0;
  for (int e = 0; e < episodes; ++e) {
    RandomStream ep_rng = rng.split(static_cast<std::uint64_t>(e));
    // Stochastic interaction phase.
    int latent = ep_rng.categorical(env.initial_dist);
    HistoryState h;
    h.observations.push_back(ep_rng.categorical(env.emission[latent][0]));
    for (int t = 1; t < env.horizon; ++t) {
      const EncodeResult enc = encode(bundle, featurize_history(env, h), ep_rng, false);
      const ActResult a = act(bundle, enc.z, env.interaction_mask(), ep_rng, false);
      const StepResult sr = step(env, latent, a.action, ep_rng);
      latent = sr.next_latent;
      h.actions.push_back(a.action);
      h.observations.push_back(sr.observation);
    }
    // Deterministic held-out recommendation.
    const EncodeResult enc = encode(bundle, featurize_history(env, h), det, true);
    const ActResult rec = act(bundle, enc.z, terminal, det, true);
    const StepResult sr = step(env, latent, rec.action, ep_rng);
    sum += sr.reward;
    sum_sq += sr.reward * sr.reward;
  }
  out.mean_reward = sum / episodes;
  if (episodes > 1) {
    const double var =
        std::max(0.0, (sum_sq - episodes * out.mean_reward * out.mean_reward) / (episodes - 1));
    out.half_width = 1.959963984540054 * std::sqrt(var / episodes);
  }
  return out;
}

double uniform_holdout_reward(const EnvSpec& env) {
  if (!env.has_holdout()) throw ContractError("environment has no held-out items");
  double total = 0.0;
  for (int u = 0; u < env.num_states; ++u) {
    if (env.initial_dist[u] <= 0.0) continue;
    double per_type = 0.0;
    for (int item : env.holdout_items)
      per_type += env.emission[u][item].dot(env.reward[u][item]);
    total += env.initial_dist[u] * per_type / static_cast<double>(env.holdout_items.size());
  }
  return total;
}

ProbeFit fit_linear_probe(const std::vector<Eigen::VectorXd>& inputs,
                          const std::vector<Eigen::VectorXd>& targets, double test_fraction) {
  if (inputs.empty() || inputs.size() != targets.size())
    throw ContractError("probe needs matched nonempty inputs and targets");
  const int n = static_cast<int>(inputs.size());
  const int n_test = std::max(1, static_cast<int>(n * test_fraction));
  const int n_train = n - n_test;
  if (n_train < 1) throw ContractError("probe needs at least one training sample");
  const int d = static_cast<int>(inputs[0].size()) + 1;  // + intercept
  const int k = static_cast<int>(targets[0].size());

  Eigen::MatrixXd X(n_train, d);
  Eigen::MatrixXd Y(n_train, k);
  for (int i = 0; i < n_train; ++i) {
    X.row(i).head(d - 1) = inputs[i].transpose();
    X(i, d - 1) = 1.0;
    Y.row(i) = targets[i].transpose();
  }
  Eigen::MatrixXd gram = X.transpose() * X;
  Eigen::MatrixXd rhs = X.transpose() * Y;

  ProbeFit fit;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  Eigen::MatrixXd weights;
  if (llt.info() == Eigen::Success) {
    weights = llt.solve(rhs);
  } else {
    fit.ridge_flagged = true;
    gram.diagonal().array() += 1e-6;
    weights = Eigen::LLT<Eigen::MatrixXd>(gram).solve(rhs);
  }

  double err = 0.0;
  int count = 0;
  for (int i = n_train; i < n; ++i) {
    Eigen::VectorXd x(d);
    x.head(d - 1) = inputs[i];
    x[d - 1] = 1.0;
    const Eigen::VectorXd pred = weights.transpose() * x;
    err += (pred - targets[i]).cwiseAbs().mean();
    ++count;
  }
  fit.mean_abs_error = err / count;
  return fit;
}

SufficiencyResult sufficiency_probe(const EnvSpec& env, const AgentBundle& bundle,
                                    const FullConfig& cfg, int episodes, RandomStream& rng) {
  const EvalCollection data = collect_eval_data(env, bundle, cfg, episodes, rng, true);
  SufficiencyResult out;
  out.n_questions = static_cast<int>(data.questions.size());
  if (!data.questions.empty()) {
    double correct = 0.0, oracle_correct = 0.0;
    for (const auto& q : data.questions) {
      correct += q.agent == q.truth ? 1.0 : 0.0;
      oracle_correct += q.oracle == q.truth ? 1.0 : 0.0;
    }
    out.agent_accuracy = correct / out.n_questions;
    out.ceiling_accuracy = oracle_correct / out.n_questions;
    out.sufficiency_gap = out.ceiling_accuracy - out.agent_accuracy;
    const double se_a =
        std::sqrt(out.agent_accuracy * (1.0 - out.agent_accuracy) / out.n_questions);
    const double se_c =
        std::sqrt(out.ceiling_accuracy * (1.0 - out.ceiling_accuracy) / out.n_questions);
    out.gap_std_error = std::sqrt(se_a * se_a + se_c * se_c);
  }
  if (!data.splits.empty()) {
    std::vector<Eigen::VectorXd> inputs;
    std::vector<Eigen::VectorXd> targets;
    inputs.reserve(data.splits.size());
    targets.reserve(data.splits.size());
    for (const auto& s : data.splits) {
      inputs.push_back(repr_onehot(s.z, bundle.repr));
      targets.push_back(s.belief);
    }
    const ProbeFit fit = fit_linear_probe(inputs, targets);
    out.probe_error = fit.mean_abs_error;
    out.probe_ridge_flagged = fit.ridge_flagged;
  }
  return out;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json rec;
  rec["prediction_accuracy"] = prediction_accuracy;
  rec["prediction_half_width"] = prediction_half_width;
  rec["oracle_ceiling_accuracy"] = oracle_ceiling_accuracy;
  rec["oracle_ceiling_half_width"] = oracle_ceiling_half_width;
  rec["recommendation_reward"] = recommendation_reward;
  rec["recommendation_half_width"] = recommendation_half_width;
  rec["sufficiency_gap"] = sufficiency_gap;
  rec["probe_error"] = probe_error;
  rec["probe_ridge_flagged"] = probe_ridge_flagged;
  rec["n_questions"] = n_questions;
  rec["n_episodes"] = n_episodes;
  return rec.dump(2);
}

EvalReport make_eval_report(const EnvSpec& env, const AgentBundle& bundle, const FullConfig& cfg,
                            int episodes, RandomStream& rng) {
  EvalReport report;
  report.n_episodes = episodes;
  RandomStream pred_rng = rng.split(1);
  RandomStream rec_rng = rng.split(2);
  RandomStream suff_rng = rng.split(3);
  const SufficiencyResult suff = sufficiency_probe(env, bundle, cfg, episodes, suff_rng);
  report.sufficiency_gap = suff.sufficiency_gap;
  report.probe_error = suff.probe_error;
  report.probe_ridge_flagged = suff.probe_ridge_flagged;
  const PredictionEval pred = eval_prediction_accuracy(env, bundle, cfg, episodes, pred_rng);
  report.prediction_accuracy = pred.accuracy;
  report.prediction_half_width = pred.half_width;
  report.oracle_ceiling_accuracy = pred.ceiling_accuracy;
  report.oracle_ceiling_half_width = pred.ceiling_half_width;
  report.n_questions = pred.n_questions;
  if (env.has_holdout()) {
    const RecommendationEval rec = eval_recommendation_reward(env, bundle, cfg, episodes, rec_rng);
    report.recommendation_reward = rec.mean_reward;
    report.recommendation_half_width = rec.half_width;
  }
  return report;
}

AblationSpec AblationSpec::from_string(const std::string& text) {
  auto entries = parse_kv_text(text);
  AblationSpec spec;
  auto take = [&entries](const char* key) -> std::optional<std::string> {
    auto it = entries.find(key);
    if (it == entries.end()) return std::nullopt;
    std::string v = it->second;
    entries.erase(it);
    return v;
  };
  const auto axis = take("ablate.axis");
  if (!axis.has_value()) throw ConfigError("ablate.axis", "ablation spec needs ablate.axis");
  spec.axis = *axis;
  const auto values = take("ablate.values");
  if (!values.has_value()) throw ConfigError("ablate.values", "ablation spec needs ablate.values");
  const nlohmann::json list = nlohmann::json::parse(*values, nullptr, false);
  if (list.is_discarded() || !list.is_array() || list.empty())
    throw ConfigError("ablate.values", "ablate.values must be a nonempty JSON array");
  for (const auto& v : list)
    spec.values.push_back(v.is_string() ? v.get<std::string>() : v.dump());
  if (const auto seeds = take("ablate.seeds_per_cell"); seeds.has_value())
    spec.seeds_per_cell = std::stoi(*seeds);
  if (spec.seeds_per_cell < 1)
    throw ConfigError("ablate.seeds_per_cell", "seeds_per_cell must be >= 1");
  spec.base = FullConfig::from_entries(entries);
  // Validate the axis and every value up front.
  for (const auto& v : spec.values) apply_axis_value(spec.base, spec.axis, v);
  return spec;
}

AblationSpec AblationSpec::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ablation spec: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

FullConfig apply_axis_value(const FullConfig& base, const std::string& axis,
                            const std::string& value) {
  FullConfig cfg = base;
  if (axis == "history_length") {
    cfg.horizon = std::stoi(value);
    if (cfg.horizon < 2) throw ConfigError("ablate.values", "history_length must be >= 2");
  } else if (axis == "profile_length") {
    cfg.repr.length = std::stoi(value);
    cfg.repr.validate();
  } else if (axis == "num_questions") {
    cfg.train.questions = std::stoi(value);
    if (cfg.train.questions < 1)
      throw ConfigError("ablate.values", "num_questions must be >= 1");
  } else if (axis == "divergence") {
    cfg.divergence = parse_divergence(value);
  } else if (axis == "lambda") {
    cfg.train.lambda = std::stod(value);
    if (cfg.train.lambda < 0.0 || cfg.train.lambda > 1.0)
      throw ConfigError("ablate.values", "lambda must lie in [0, 1]");
  } else {
    throw ConfigError("ablate.axis", "unknown ablation axis '" + axis + "'");
  }
  return cfg;
}

std::vector<AblationRow> run_ablation(const AblationSpec& spec, int threads) {
  struct Cell {
    std::string value;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& value : spec.values)
    for (int s = 0; s < spec.seeds_per_cell; ++s)
      cells.push_back({value, spec.base.seed + static_cast<std::uint64_t>(s)});

  std::vector<AblationRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell& cell = cells[i];
      AblationRow& row = rows[i];
      row.axis = spec.axis;
      row.value = cell.value;
      row.seed = cell.seed;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        FullConfig cfg = apply_axis_value(spec.base, spec.axis, cell.value);
        cfg.seed = cell.seed;
        const TrainResult result = train(cfg);
        const EnvSpec env = cfg.build_env();
        RandomStream eval_rng = RandomStream(cfg.seed).split(kEvalSalt);
        RandomStream pred_rng = eval_rng.split(1);
        const PredictionEval pred =
            eval_prediction_accuracy(env, result.bundle, cfg, cfg.eval_episodes, pred_rng);
        row.prediction_accuracy = pred.accuracy;
        if (env.has_holdout()) {
          RandomStream rec_rng = eval_rng.split(2);
          const RecommendationEval rec =
              eval_recommendation_reward(env, result.bundle, cfg, cfg.eval_episodes, rec_rng);
          row.recommendation_reward = rec.mean_reward;
        }
        if (!result.metrics.empty()) row.d_hat_final = result.metrics.back().d_hat;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      const auto t1 = std::chrono::steady_clock::now();
      row.runtime_s = std::chrono::duration<double>(t1 - t0).count();
    }
  };
  const int n_workers = std::max(1, std::min<int>(threads, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "axis,value,seed,prediction_accuracy,recommendation_reward,d_hat_final,"
                    "runtime_s,error\n";
  for (const auto& row : rows) {
    out += row.axis + "," + row.value + "," + std::to_string(row.seed) + ",";
    out += row.prediction_accuracy.has_value() ? format_double(*row.prediction_accuracy) : "";
    out += ",";
    out += row.recommendation_reward.has_value() ? format_double(*row.recommendation_reward) : "";
    out += ",";
    out += row.d_hat_final.has_value() ? format_double(*row.d_hat_final) : "";
    out += "," + format_double(row.runtime_s) + ",";
    std::string clean = row.error;
    for (char& c : clean)
      if (c == ',' || c == '\n') c = ';';
    out += clean + "\n";
  }
  return out;
}

std::string run_training(const FullConfig& cfg, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream cfg_out(out_dir + "/config.txt");
    cfg_out << cfg.canonical_text();
  }
  std::ofstream metrics_out(out_dir + "/metrics.jsonl");
  std::ofstream log_out(out_dir + "/run.log");
  if (!metrics_out || !log_out) throw Error("cannot write into output directory: " + out_dir);

  TrainHooks hooks;
  hooks.on_iteration = [&](const MetricsRecord& m, const AgentBundle& bundle) {
    metrics_out << m.to_jsonl() << "\n";
    metrics_out.flush();  // partial metrics survive an abort
    log_out << "iteration " << m.iteration << " wall_ms " << m.wall_clock_ms << "\n";
    if (m.iteration % cfg.train.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "/ckpt_%06d.bin", m.iteration);
      save_checkpoint(out_dir + name, bundle, cfg, m.iteration);
    }
  };
  const TrainResult result = train(cfg, &hooks);
  save_checkpoint(out_dir + "/checkpoint_final.bin", result.bundle, cfg,
                  cfg.train.iterations);

  const EnvSpec env = cfg.build_env();
  RandomStream eval_rng = RandomStream(cfg.seed).split(kEvalSalt);
  const EvalReport report = make_eval_report(env, result.bundle, cfg, cfg.eval_episodes, eval_rng);
  {
    std::ofstream report_out(out_dir + "/eval_report.json");
    report_out << report.to_json() << "\n";
  }

  nlohmann::ordered_json summary;
  summary["config_hash"] = to_hex(cfg.hash());
  summary["iterations"] = cfg.train.iterations;
  if (!result.metrics.empty()) {
    const MetricsRecord& last = result.metrics.back();
    summary["final_mean_return"] = last.mean_return;
    summary["final_d_hat"] = last.d_hat;
    summary["final_answer_accuracy"] = last.answer_accuracy;
  }
  summary["eval"] = nlohmann::json::parse(report.to_json());
  const std::string summary_text = summary.dump(2);
  {
    std::ofstream summary_out(out_dir + "/summary.json");
    summary_out << summary_text << "\n";
  }
  return summary_text;
}

std::string plot_data_csv(const std::string& run_dir) {
  std::ifstream in(run_dir + "/metrics.jsonl");
  if (!in) throw Error("no metrics.jsonl under " + run_dir);
  std::string out = "iteration,metric,value\n";
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json rec = nlohmann::json::parse(line);
    const int iteration = rec.at("iteration").get<int>();
    for (const auto& [key, value] : rec.items()) {
      if (key == "iteration" || !value.is_number()) continue;
      out += std::to_string(iteration) + "," + key + "," +
             format_double(value.get<double>()) + "\n";
    }
  }
  return out;
}

}  // namespace dhrl
