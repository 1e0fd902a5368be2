#include "dhrl/qa.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace dhrl {

void check_compatible(const Question& q, const Answer& a) {
  const bool pairwise = std::holds_alternative<PairwiseComparison>(q);
  const bool preference = std::holds_alternative<PreferenceAnswer>(a);
  if (pairwise != preference)
    throw ContractError("question/answer variants are incompatible");
  if (const auto* pc = std::get_if<PairwiseComparison>(&q)) {
    if (pc->item_a == pc->item_b)
      throw ContractError("pairwise comparison requires distinct items");
  }
  if (const auto* ct = std::get_if<CoreTest>(&q)) {
    (void)ct;  // begins-with-action is structural: steps are (action, obs) pairs
  }
  if (const auto* pa = std::get_if<ProbabilityAnswer>(&a)) {
    if (pa->p < 0.0 || pa->p > 1.0)
      throw ContractError("probability answer outside [0, 1]");
  }
}

QAKind parse_qa_kind(const std::string& name) {
  if (name == "pairwise-hindsight") return QAKind::PairwiseHindsight;
  if (name == "belief-oracle") return QAKind::BeliefOracle;
  if (name == "psr-oracle") return QAKind::PsrOracle;
  if (name == "adversarial") return QAKind::Adversarial;
  throw ConfigError("train.qa_kind", "unknown QA generator kind '" + name + "'");
}

std::string qa_kind_name(QAKind kind) {
  switch (kind) {
    case QAKind::PairwiseHindsight: return "pairwise-hindsight";
    case QAKind::BeliefOracle: return "belief-oracle";
    case QAKind::PsrOracle: return "psr-oracle";
    case QAKind::Adversarial: return "adversarial";
  }
  return "?";
}

TieRule parse_tie_rule(const std::string& name) {
  if (name == "random") return TieRule::Random;
  if (name == "drop") return TieRule::Drop;
  throw ConfigError("train.tie_rule", "unknown tie rule '" + name + "'");
}

std::string tie_rule_name(TieRule rule) {
  return rule == TieRule::Random ? "random" : "drop";
}

void QAGeneratorSpec::validate() const {
  if (questions_per_split < 1)
    throw ContractError("QAGeneratorSpec: K must be at least 1");
}

std::map<int, int> realized_ratings(const FutureRealization& future) {
  std::map<int, int> ratings;
  const std::size_t n = std::min(future.actions.size(), future.observations.size());
  for (std::size_t i = 0; i < n; ++i)
    ratings.emplace(future.actions[i], future.observations[i]);  // keeps first occurrence
  return ratings;
}

namespace {

std::vector<QASample> generate_pairwise(const QAGeneratorSpec& spec,
                                        const HistoryState& /*history*/,
                                        const FutureRealization& future, int split_time,
                                        RandomStream& rng) {
  auto ratings = realized_ratings(future);
  if (spec.holdout_items.has_value()) {
    std::map<int, int> filtered;
    for (int item : *spec.holdout_items) {
      auto it = ratings.find(item);
      if (it != ratings.end()) filtered.emplace(*it);
    }
    ratings = std::move(filtered);
  }
  std::vector<int> items;
  items.reserve(ratings.size());
  for (const auto& [item, _] : ratings) items.push_back(item);
  std::vector<QASample> out;
  if (items.size() < 2) return out;

  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < items.size(); ++i)
    for (std::size_t j = i + 1; j < items.size(); ++j)
      pairs.emplace_back(items[i], items[j]);
  // Fisher-Yates with the stream's uniform ints keeps generation replayable.
  for (std::size_t i = pairs.size(); i > 1; --i)
    std::swap(pairs[i - 1], pairs[rng.uniform_int(static_cast<int>(i))]);

  for (const auto& [first, second] : pairs) {
    if (static_cast<int>(out.size()) >= spec.questions_per_split) break;
    int a = first, b = second;
    if (rng.uniform01() < 0.5) std::swap(a, b);
    const int ra = ratings.at(a), rb = ratings.at(b);
    Preference choice;
    if (ra > rb) {
      choice = Preference::First;
    } else if (rb > ra) {
      choice = Preference::Second;
    } else if (spec.tie_rule == TieRule::Drop) {
      continue;
    } else {
      choice = rng.uniform01() < 0.5 ? Preference::First : Preference::Second;
    }
    QASample sample;
    sample.question = PairwiseComparison{a, b};
    sample.answer = PreferenceAnswer{choice};
    sample.source_split_time = split_time;
    check_compatible(sample.question, sample.answer);
    out.push_back(std::move(sample));
  }
  return out;
}

std::vector<QASample> generate_belief_oracle(const QAGeneratorSpec& spec, const EnvSpec& env,
                                             const HistoryState& history, int split_time,
                                             RandomStream& rng) {
  std::vector<int> states(env.num_states);
  for (int s = 0; s < env.num_states; ++s) states[s] = s;
  for (std::size_t i = states.size(); i > 1; --i)
    std::swap(states[i - 1], states[rng.uniform_int(static_cast<int>(i))]);
  const int count = std::min<int>(spec.questions_per_split, env.num_states);
  std::vector<QASample> out;
  for (int i = 0; i < count; ++i) {
    StateQuery q{states[i]};
    QASample sample;
    sample.question = q;
    sample.answer = belief_oracle_answer(env, history, q);
    sample.source_split_time = split_time;
    out.push_back(std::move(sample));
  }
  return out;
}

std::vector<QASample> generate_psr_oracle(const QAGeneratorSpec& spec, const EnvSpec& env,
                                          const HistoryState& history,
                                          const FutureRealization& future, int split_time,
                                          RandomStream& rng) {
  std::vector<QASample> out;
  const int max_len = std::min<int>(3, future.steps());
  if (max_len < 1) return out;
  for (int i = 0; i < spec.questions_per_split; ++i) {
    const int len = 1 + rng.uniform_int(max_len);
    CoreTest test;
    for (int k = 0; k < len; ++k)
      test.steps.emplace_back(future.actions[k], future.observations[k]);
    QASample sample;
    sample.question = test;
    sample.answer = psr_oracle_answer(env, history, test);
    sample.source_split_time = split_time;
    out.push_back(std::move(sample));
  }
  return out;
}

}  // namespace

std::vector<QASample> generate_qa(const QAGeneratorSpec& spec, const EnvSpec& env,
                                  const HistoryState& history, const FutureRealization& future,
                                  int split_time, RandomStream& rng) {
  spec.validate();
  switch (spec.kind) {
    case QAKind::PairwiseHindsight:
      return generate_pairwise(spec, history, future, split_time, rng);
    case QAKind::BeliefOracle:
      return generate_belief_oracle(spec, env, history, split_time, rng);
    case QAKind::PsrOracle:
      return generate_psr_oracle(spec, env, history, future, split_time, rng);
    case QAKind::Adversarial:
      throw ContractError("adversarial QA generation is driven by the trainer");
  }
  return {};
}

ProbabilityAnswer belief_oracle_answer(const EnvSpec& env, const HistoryState& history,
                                       const StateQuery& q) {
  if (q.state < 0 || q.state >= env.num_states)
    throw ContractError("state query out of range");
  return ProbabilityAnswer{exact_belief(env, history)[q.state]};
}

ProbabilityAnswer psr_oracle_answer(const EnvSpec& env, const HistoryState& history,
                                    const CoreTest& q) {
  return ProbabilityAnswer{future_probability(env, history, q.steps)};
}

double bayes_optimal_pairwise(const EnvSpec& env, const HistoryState& history,
                              const PairwiseComparison& q) {
  if (!env.static_latent())
    throw ContractError("bayes_optimal_pairwise requires a static-latent environment");
  if (q.item_a == q.item_b || q.item_a < 0 || q.item_b < 0 || q.item_a >= env.num_actions ||
      q.item_b >= env.num_actions)
    throw ContractError("invalid pairwise comparison");
  const BeliefVector belief = exact_belief(env, history);
  double p_first = 0.0;
  for (int u = 0; u < env.num_states; ++u) {
    if (belief[u] <= 0.0) continue;
    const Eigen::VectorXd& pa = env.emission[u][q.item_a];
    const Eigen::VectorXd& pb = env.emission[u][q.item_b];
    double win = 0.0, tie = 0.0;
    for (int ra = 0; ra < env.num_observations; ++ra) {
      for (int rb = 0; rb < env.num_observations; ++rb) {
        const double joint = pa[ra] * pb[rb];
        if (ra > rb)
          win += joint;
        else if (ra == rb)
          tie += joint;
      }
    }
    p_first += belief[u] * (win + 0.5 * tie);
  }
  return p_first;
}

std::string qa_samples_to_jsonl(const std::vector<QASample>& samples) {
  std::string out;
  for (const auto& sample : samples) {
    nlohmann::ordered_json rec;
    rec["v"] = 1;
    rec["t"] = sample.source_split_time;
    if (const auto* sq = std::get_if<StateQuery>(&sample.question)) {
      rec["kind"] = "state-query";
      rec["q"] = {{"state", sq->state}};
    } else if (const auto* ct = std::get_if<CoreTest>(&sample.question)) {
      rec["kind"] = "core-test";
      nlohmann::json steps = nlohmann::json::array();
      for (const auto& [a, o] : ct->steps) steps.push_back({a, o});
      rec["q"] = {{"steps", steps}};
    } else {
      const auto& pc = std::get<PairwiseComparison>(sample.question);
      rec["kind"] = "pairwise";
      rec["q"] = {{"item_a", pc.item_a}, {"item_b", pc.item_b}};
    }
    if (const auto* pa = std::get_if<ProbabilityAnswer>(&sample.answer)) {
      rec["y"] = pa->p;
    } else {
      rec["y"] = std::get<PreferenceAnswer>(sample.answer).choice == Preference::First
                     ? "first"
                     : "second";
    }
    out += rec.dump();
    out += '\n';
  }
  return out;
}

}  // namespace dhrl
