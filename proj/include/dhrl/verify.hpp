#ifndef DHRL_VERIFY_HPP
#define DHRL_VERIFY_HPP

#include <string>
#include <vector>

#include "dhrl/agents.hpp"
#include "dhrl/config.hpp"
#include "dhrl/divergence.hpp"
#include "dhrl/env.hpp"

namespace dhrl {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Brute-force posteriors by full latent-trace enumeration; independent of the
// recursive filter they are checked against.
BeliefVector brute_force_belief(const EnvSpec& env, const HistoryState& history);
double brute_force_future_probability(const EnvSpec& env, const HistoryState& history,
                                      const std::vector<std::pair<int, int>>& test);

// All (possible and impossible) histories of exactly the given length.
std::vector<HistoryState> enumerate_histories(const EnvSpec& env, int length);

// Max relative error between analytic and central-difference gradients over
// `points` random (parameters, input) draws for every default network shape.
double max_gradient_check_error(int points = 10);

// Criterion groups. Each returns one named pass/fail result per check.
std::vector<CheckResult> verify_oracle_equivalence();   // filter & PSR vs enumeration
std::vector<CheckResult> verify_conjugates();           // Fenchel-Young, biconjugation, convexity
std::vector<CheckResult> verify_gradients();            // finite-difference agreement
std::vector<CheckResult> verify_calibration();          // discriminator sanity on known cases
std::vector<CheckResult> verify_structural();           // softmax, split/join, featurization, clamps
std::vector<CheckResult> verify_determinism();          // bit-identical short runs

// The full gate; everything above, in order.
std::vector<CheckResult> run_verify_checks();

}  // namespace dhrl

#endif
