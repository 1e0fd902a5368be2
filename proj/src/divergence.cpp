#include "dhrl/divergence.hpp"

#include <cmath>

namespace dhrl {

DivergenceKind parse_divergence(const std::string& name) {
  if (name == "tv") return DivergenceKind::TotalVariation;
  if (name == "chi2") return DivergenceKind::ChiSquared;
  if (name == "kl") return DivergenceKind::KL;
  throw ConfigError("divergence", "unknown divergence '" + name + "' (expected tv, chi2, or kl)");
}

std::string divergence_name(DivergenceKind kind) {
  switch (kind) {
    case DivergenceKind::TotalVariation: return "tv";
    case DivergenceKind::ChiSquared: return "chi2";
    case DivergenceKind::KL: return "kl";
  }
  return "?";
}

double f_value(DivergenceKind kind, double t) {
  if (t < 0.0) throw ContractError("f_value: argument must be nonnegative");
  switch (kind) {
    case DivergenceKind::TotalVariation:
      return 0.5 * std::abs(t - 1.0);
    case DivergenceKind::ChiSquared:
      return (t - 1.0) * (t - 1.0);
    case DivergenceKind::KL:
      return t == 0.0 ? 0.0 : t * std::log(t);
  }
  return 0.0;
}

double f_conjugate(DivergenceKind kind, double x) {
  switch (kind) {
    case DivergenceKind::TotalVariation:
      if (x < -0.5 - 1e-12 || x > 0.5 + 1e-12)
        throw ContractError("f_conjugate: TV conjugate domain is [-1/2, 1/2]");
      return x;
    case DivergenceKind::ChiSquared:
      return x >= -2.0 ? x + 0.25 * x * x : -1.0;
    case DivergenceKind::KL:
      return std::exp(x - 1.0);
  }
  return 0.0;
}

double f_conjugate_prime(DivergenceKind kind, double x) {
  switch (kind) {
    case DivergenceKind::TotalVariation:
      return 1.0;
    case DivergenceKind::ChiSquared:
      return x >= -2.0 ? 1.0 + 0.5 * x : 0.0;
    case DivergenceKind::KL:
      return std::exp(x - 1.0);
  }
  return 0.0;
}

double clamp_critic(DivergenceKind kind, double raw) {
  switch (kind) {
    case DivergenceKind::TotalVariation: return 0.5 * std::tanh(raw);
    case DivergenceKind::ChiSquared: return raw < -2.0 ? -2.0 : raw;
    case DivergenceKind::KL: return raw;
  }
  return raw;
}

double clamp_critic_grad(DivergenceKind kind, double raw) {
  switch (kind) {
    case DivergenceKind::TotalVariation: {
      const double th = std::tanh(raw);
      return 0.5 * (1.0 - th * th);
    }
    case DivergenceKind::ChiSquared:
      return raw < -2.0 ? 0.0 : 1.0;
    case DivergenceKind::KL:
      return 1.0;
  }
  return 1.0;
}

double discriminator_objective(DivergenceKind kind, std::span<const double> g_on_agent,
                               std::span<const double> g_on_truth) {
  if (g_on_agent.empty() || g_on_truth.empty())
    throw ContractError("discriminator_objective: empty sample batch");
  double agent_term = 0.0;
  for (double g : g_on_agent) agent_term += f_conjugate(kind, g);
  agent_term /= static_cast<double>(g_on_agent.size());
  double truth_term = 0.0;
  for (double g : g_on_truth) truth_term += g;
  truth_term /= static_cast<double>(g_on_truth.size());
  return agent_term - truth_term;
}

double answer_reward(DivergenceKind kind, double g_on_agent_sample) {
  return f_conjugate(kind, g_on_agent_sample);
}

}  // namespace dhrl
