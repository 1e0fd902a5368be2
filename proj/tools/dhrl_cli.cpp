// Command-line front end; talks to the core exclusively through the shared
// C API in dhrl/dhrl_c.h.
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "dhrl/dhrl_c.h"

namespace {

int exit_code_for(dhrl_status status) {
  switch (status) {
    case DHRL_OK: return 0;
    case DHRL_ERR_IO: return 2;
    default: return 1;
  }
}

int report_failure(dhrl_status status) {
  std::fprintf(stderr, "error: %s\n", dhrl_last_error());
  return exit_code_for(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Descriptive history representation laboratory"};
  app.require_subcommand(1);

  long long seed = -1;
  int threads = 1;
  app.add_option("--seed", seed, "Override the config seed (global)");
  app.add_option("--threads", threads, "Worker threads for ablation cells (global)");

  std::string config_path, out_dir = "out";
  auto* run = app.add_subcommand("run", "Train per a config file, then evaluate");
  run->add_option("--config", config_path, "Config file path")->required();
  run->add_option("--out", out_dir, "Output directory");

  std::string checkpoint_path;
  int episodes = 2000;
  auto* eval = app.add_subcommand("eval", "Evaluate a saved checkpoint");
  eval->add_option("--checkpoint", checkpoint_path, "Checkpoint file path")->required();
  eval->add_option("--episodes", episodes, "Evaluation episodes");

  std::string spec_path, ablate_out = "out";
  auto* ablate = app.add_subcommand("ablate", "Run an ablation grid from a spec file");
  ablate->add_option("--spec", spec_path, "Ablation spec file path")->required();
  ablate->add_option("--out", ablate_out, "Output directory");

  auto* verify = app.add_subcommand("verify", "Run the oracle and invariant suite");

  std::string run_dir, plot_out;
  auto* plot = app.add_subcommand("plot-data", "Emit tidy CSV from a run directory");
  plot->add_option("--run", run_dir, "Run directory (with metrics.jsonl)")->required();
  plot->add_option("--out", plot_out, "Write CSV here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    char* summary = nullptr;
    const dhrl_status status = dhrl_train_run(config_path.c_str(), out_dir.c_str(), seed, &summary);
    if (status != DHRL_OK) return report_failure(status);
    std::printf("%s\n", summary);
    dhrl_string_free(summary);
    return 0;
  }
  if (eval->parsed()) {
    char* report = nullptr;
    const dhrl_status status =
        dhrl_eval_checkpoint(checkpoint_path.c_str(), episodes, seed, &report);
    if (status != DHRL_OK) return report_failure(status);
    std::printf("%s\n", report);
    dhrl_string_free(report);
    return 0;
  }
  if (ablate->parsed()) {
    const dhrl_status status = dhrl_ablate(spec_path.c_str(), ablate_out.c_str(), seed, threads);
    if (status != DHRL_OK) return report_failure(status);
    std::printf("wrote %s/ablation.csv\n", ablate_out.c_str());
    return 0;
  }
  if (verify->parsed()) {
    int failures = 0;
    const dhrl_status status = dhrl_verify(/*verbose=*/1, &failures);
    if (status != DHRL_OK) return report_failure(status);
    if (failures > 0) {
      std::fprintf(stderr, "%d check(s) failed\n", failures);
      return 1;
    }
    std::printf("all checks passed\n");
    return 0;
  }
  if (plot->parsed()) {
    char* csv = nullptr;
    const dhrl_status status = dhrl_plot_data(run_dir.c_str(), &csv);
    if (status != DHRL_OK) return report_failure(status);
    if (plot_out.empty()) {
      std::printf("%s", csv);
    } else {
      FILE* f = std::fopen(plot_out.c_str(), "w");
      if (f == nullptr) {
        std::fprintf(stderr, "error: cannot write %s\n", plot_out.c_str());
        dhrl_string_free(csv);
        return 1;
      }
      std::fputs(csv, f);
      std::fclose(f);
    }
    dhrl_string_free(csv);
    return 0;
  }
  return 1;
}
