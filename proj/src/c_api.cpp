#include "dhrl/dhrl_c.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "dhrl/agents.hpp"
#include "dhrl/config.hpp"
#include "dhrl/env.hpp"
#include "dhrl/eval.hpp"
#include "dhrl/train.hpp"
#include "dhrl/verify.hpp"

namespace {

thread_local std::string g_last_error = "no error";

dhrl_status fail(dhrl_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

dhrl_status translate(const std::exception& e) {
  if (dynamic_cast<const dhrl::ConfigError*>(&e) != nullptr)
    return fail(DHRL_ERR_CONFIG, e.what());
  if (dynamic_cast<const dhrl::ContractError*>(&e) != nullptr)
    return fail(DHRL_ERR_CONTRACT, e.what());
  return fail(DHRL_ERR_RUNTIME, e.what());
}

char* dup_string(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

bool parse_history(const dhrl::EnvSpec& env, const int32_t* symbols, size_t len,
                   dhrl::HistoryState& out) {
  if (len % 2 == 0 && len != 0) return false;
  for (size_t i = 0; i < len; ++i) {
    if (i % 2 == 0)
      out.observations.push_back(symbols[i]);
    else
      out.actions.push_back(symbols[i]);
  }
  try {
    out.validate(env);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

}  // namespace

extern "C" {

struct dhrl_env {
  dhrl::EnvSpec spec;
};

const char* dhrl_version(void) { return "1.0.0"; }

const char* dhrl_last_error(void) { return g_last_error.c_str(); }

void dhrl_string_free(char* text) { std::free(text); }

dhrl_status dhrl_env_create_from_file(const char* config_path, dhrl_env** out_env) {
  if (config_path == nullptr || out_env == nullptr)
    return fail(DHRL_ERR_INVALID_ARGUMENT, "null argument");
  if (!std::filesystem::exists(config_path))
    return fail(DHRL_ERR_IO, std::string("no such file: ") + config_path);
  try {
    auto cfg = dhrl::FullConfig::from_file(config_path);
    *out_env = new dhrl_env{cfg.build_env()};
    return DHRL_OK;
  } catch (const std::exception& e) {
    return translate(e);
  }
}

dhrl_status dhrl_env_create_from_string(const char* config_text, dhrl_env** out_env) {
  if (config_text == nullptr || out_env == nullptr)
    return fail(DHRL_ERR_INVALID_ARGUMENT, "null argument");
  try {
    auto cfg = dhrl::FullConfig::from_string(config_text);
    *out_env = new dhrl_env{cfg.build_env()};
    return DHRL_OK;
  } catch (const std::exception& e) {
    return translate(e);
  }
}

void dhrl_env_destroy(dhrl_env* env) { delete env; }

int dhrl_env_num_states(const dhrl_env* env) { return env == nullptr ? -1 : env->spec.num_states; }
int dhrl_env_num_actions(const dhrl_env* env) {
  return env == nullptr ? -1 : env->spec.num_actions;
}
int dhrl_env_num_observations(const dhrl_env* env) {
  return env == nullptr ? -1 : env->spec.num_observations;
}
int dhrl_env_horizon(const dhrl_env* env) { return env == nullptr ? -1 : env->spec.horizon; }

dhrl_status dhrl_env_exact_belief(const dhrl_env* env, const int32_t* history,
                                  size_t history_len, double* out_belief) {
  if (env == nullptr || out_belief == nullptr || (history == nullptr && history_len > 0))
    return fail(DHRL_ERR_INVALID_ARGUMENT, "null argument");
  dhrl::HistoryState h;
  if (!parse_history(env->spec, history, history_len, h))
    return fail(DHRL_ERR_CONTRACT, "malformed history symbol sequence");
  try {
    const dhrl::BeliefVector belief = dhrl::exact_belief(env->spec, h);
    for (int s = 0; s < env->spec.num_states; ++s) out_belief[s] = belief[s];
    return DHRL_OK;
  } catch (const std::exception& e) {
    return translate(e);
  }
}

dhrl_status dhrl_env_future_probability(const dhrl_env* env, const int32_t* history,
                                        size_t history_len, const int32_t* test,
                                        size_t test_len, double* out_probability) {
  if (env == nullptr || out_probability == nullptr || (history == nullptr && history_len > 0) ||
      (test == nullptr && test_len > 0))
    return fail(DHRL_ERR_INVALID_ARGUMENT, "null argument");
  if (test_len % 2 != 0)
    return fail(DHRL_ERR_CONTRACT, "test must alternate (action, observation) pairs");
  dhrl::HistoryState h;
  if (!parse_history(env->spec, history, history_len, h))
    return fail(DHRL_ERR_CONTRACT, "malformed history symbol sequence");
  std::vector<std::pair<int, int>> steps;
  for (size_t i = 0; i < test_len; i += 2) steps.emplace_back(test[i], test[i + 1]);
  try {
    *out_probability = dhrl::future_probability(env->spec, h, steps);
    return DHRL_OK;
  } catch (const std::exception& e) {
    return translate(e);
  }
}

dhrl_status dhrl_train_run(const char* config_path, const char* out_dir, int64_t seed_override,
                           char** out_summary) {
  if (config_path == nullptr || out_dir == nullptr)
    return fail(DHRL_ERR_INVALID_ARGUMENT, "null argument");
  if (!std::filesystem::exists(config_path))
    return fail(DHRL_ERR_IO, std::string("no such file: ") + config_path);
  try {
    dhrl::FullConfig cfg = dhrl::FullConfig::from_file(config_path);
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    const std::string summary = dhrl::run_training(cfg, out_dir);
    if (out_summary != nullptr) *out_summary = dup_string(summary);
    return DHRL_OK;
  } catch (const std::exception& e) {
    return translate(e);
  }
}

dhrl_status dhrl_eval_checkpoint(const char* checkpoint_path, int episodes,
                                 int64_t seed_override, char** out_report) {
  if (checkpoint_path == nullptr || out_report == nullptr)
    return fail(DHRL_ERR_INVALID_ARGUMENT, "null argument");
  if (episodes < 1) return fail(DHRL_ERR_INVALID_ARGUMENT, "episodes must be positive");
  if (!std::filesystem::exists(checkpoint_path))
    return fail(DHRL_ERR_IO, std::string("no such file: ") + checkpoint_path);
  try {
    const dhrl::Checkpoint ckpt = dhrl::load_checkpoint(checkpoint_path);
    const dhrl::EnvSpec env = ckpt.config.build_env();
    const std::uint64_t seed =
        seed_override >= 0 ? static_cast<std::uint64_t>(seed_override) : ckpt.config.seed;
    dhrl::RandomStream rng = dhrl::RandomStream(seed).split(0xE7A1);
    const dhrl::EvalReport report =
        dhrl::make_eval_report(env, ckpt.bundle, ckpt.config, episodes, rng);
    *out_report = dup_string(report.to_json());
    return DHRL_OK;
  } catch (const std::exception& e) {
    return translate(e);
  }
}

dhrl_status dhrl_ablate(const char* spec_path, const char* out_dir, int64_t seed_override,
                        int threads) {
  if (spec_path == nullptr || out_dir == nullptr)
    return fail(DHRL_ERR_INVALID_ARGUMENT, "null argument");
  if (!std::filesystem::exists(spec_path))
    return fail(DHRL_ERR_IO, std::string("no such file: ") + spec_path);
  try {
    dhrl::AblationSpec spec = dhrl::AblationSpec::from_file(spec_path);
    if (seed_override >= 0) spec.base.seed = static_cast<std::uint64_t>(seed_override);
    const auto rows = dhrl::run_ablation(spec, threads <= 0 ? 1 : threads);
    std::filesystem::create_directories(out_dir);
    std::ofstream out(std::string(out_dir) + "/ablation.csv");
    if (!out) return fail(DHRL_ERR_IO, "cannot write ablation.csv");
    out << dhrl::ablation_csv(rows);
    return DHRL_OK;
  } catch (const std::exception& e) {
    return translate(e);
  }
}

dhrl_status dhrl_verify(int verbose, int* out_failures) {
  try {
    const auto results = dhrl::run_verify_checks();
    int failures = 0;
    for (const auto& r : results) {
      if (!r.pass) ++failures;
      if (verbose != 0) {
        std::printf("[%s] %s%s%s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.empty() ? "" : ": ", r.detail.c_str());
        std::fflush(stdout);
      }
    }
    if (out_failures != nullptr) *out_failures = failures;
    return DHRL_OK;
  } catch (const std::exception& e) {
    return translate(e);
  }
}

dhrl_status dhrl_plot_data(const char* run_dir, char** out_csv) {
  if (run_dir == nullptr || out_csv == nullptr)
    return fail(DHRL_ERR_INVALID_ARGUMENT, "null argument");
  try {
    *out_csv = dup_string(dhrl::plot_data_csv(run_dir));
    return DHRL_OK;
  } catch (const std::exception& e) {
    return translate(e);
  }
}

}  // extern "C"
