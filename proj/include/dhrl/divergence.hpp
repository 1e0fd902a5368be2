#ifndef DHRL_DIVERGENCE_HPP
#define DHRL_DIVERGENCE_HPP

#include <span>
#include <string>

#include "dhrl/common.hpp"

namespace dhrl {

enum class DivergenceKind { TotalVariation, ChiSquared, KL };

DivergenceKind parse_divergence(const std::string& name);
std::string divergence_name(DivergenceKind kind);

// The convex generator f with f(1) = 0.
//   TV:  f(t) = |t - 1| / 2
//   chi2: f(t) = (t - 1)^2
//   KL:  f(t) = t ln t, with 0 ln 0 = 0
double f_value(DivergenceKind kind, double t);

// Convex conjugate f*. Inputs must already lie in the kind's effective
// domain; TV throws outside [-1/2, 1/2] (callers clamp first).
double f_conjugate(DivergenceKind kind, double x);

// d f*/dx on the effective domain (subgradient choice at kinks).
double f_conjugate_prime(DivergenceKind kind, double x);

// Maps a raw critic output into the conjugate's effective domain.
//   TV:  tanh(raw) / 2, chi2: max(raw, -2), KL: identity
double clamp_critic(DivergenceKind kind, double raw);

// Derivative of clamp_critic w.r.t. the raw output.
double clamp_critic_grad(DivergenceKind kind, double raw);

// mean f*(g(agent samples)) - mean g(truth samples). The critic minimizes
// this; its negation is the divergence estimate.
double discriminator_objective(DivergenceKind kind, std::span<const double> g_on_agent,
                               std::span<const double> g_on_truth);

// Per-sample answer-agent reward f*(g(h, q, predicted answer)).
double answer_reward(DivergenceKind kind, double g_on_agent_sample);

}  // namespace dhrl

#endif
