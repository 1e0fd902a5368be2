#ifndef DHRL_QA_HPP
#define DHRL_QA_HPP

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dhrl/env.hpp"

namespace dhrl {

struct StateQuery {
  int state;
};

// PSR-style core test: alternating (action, observation) pairs.
struct CoreTest {
  std::vector<std::pair<int, int>> steps;
};

// "Does the user prefer item_a over item_b?"
struct PairwiseComparison {
  int item_a;
  int item_b;
};

using Question = std::variant<StateQuery, CoreTest, PairwiseComparison>;

struct ProbabilityAnswer {
  double p;
};

enum class Preference { First = 0, Second = 1 };

struct PreferenceAnswer {
  Preference choice;
};

using Answer = std::variant<ProbabilityAnswer, PreferenceAnswer>;

// Throws ContractError when the answer variant does not fit the question.
void check_compatible(const Question& q, const Answer& a);

struct QASample {
  Question question;
  Answer answer;
  int source_split_time = 0;
};

enum class QAKind { PairwiseHindsight, BeliefOracle, PsrOracle, Adversarial };
enum class TieRule { Random, Drop };

QAKind parse_qa_kind(const std::string& name);
std::string qa_kind_name(QAKind kind);
TieRule parse_tie_rule(const std::string& name);
std::string tie_rule_name(TieRule rule);

struct QAGeneratorSpec {
  QAKind kind = QAKind::PairwiseHindsight;
  int questions_per_split = 5;  // K
  TieRule tie_rule = TieRule::Random;
  std::optional<std::vector<int>> holdout_items;

  void validate() const;
};

// Realized rating of each item in the future: first (action, following
// observation) occurrence wins. The observation index is the rating.
std::map<int, int> realized_ratings(const FutureRealization& future);

// Hindsight QA generation from a (history, future) pair. Emits at most K
// samples and may emit fewer (or none) when the future is rating-sparse.
// The adversarial kind is driven separately by the trainer.
std::vector<QASample> generate_qa(const QAGeneratorSpec& spec, const EnvSpec& env,
                                  const HistoryState& history, const FutureRealization& future,
                                  int split_time, RandomStream& rng);

// Oracle answer functions for the belief-state and PSR QA-spaces.
ProbabilityAnswer belief_oracle_answer(const EnvSpec& env, const HistoryState& history,
                                       const StateQuery& q);
ProbabilityAnswer psr_oracle_answer(const EnvSpec& env, const HistoryState& history,
                                    const CoreTest& q);

// Exact P(First) for a pairwise question under the posterior over latent
// user types, with ties split evenly. Requires a static-latent environment.
double bayes_optimal_pairwise(const EnvSpec& env, const HistoryState& history,
                              const PairwiseComparison& q);

// JSON-lines serialization of QA samples ({"v":1,"t":...,"kind":...,"q":...,"y":...}).
std::string qa_samples_to_jsonl(const std::vector<QASample>& samples);

}  // namespace dhrl

#endif
