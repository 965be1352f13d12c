#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "camo/experiment.hpp"

namespace {

void apply_overrides(camo::ExperimentConfig& cfg, const std::string& out_override,
                     bool have_seed, std::uint64_t seed, bool have_episodes,
                     std::uint64_t episodes) {
  if (const char* env_out = std::getenv("CAMO_OUT_DIR"); env_out != nullptr && *env_out != '\0')
    cfg.output_dir = env_out;
  if (!out_override.empty()) cfg.output_dir = out_override;
  if (have_seed) cfg.seed = seed;
  if (have_episodes) cfg.episodes = episodes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optimal camouflage / state-perception attack planning on tabular multi-agent MDPs"};
  app.require_subcommand(1);

  std::string run_config, run_out;
  std::uint64_t run_seed = 0, run_episodes = 0;
  auto* run_cmd = app.add_subcommand("run", "run a config-driven experiment and emit CSV artifacts");
  run_cmd->add_option("config", run_config, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  auto* run_out_opt = run_cmd->add_option("--out", run_out, "output directory override");
  auto* run_seed_opt = run_cmd->add_option("--seed", run_seed, "seed override");
  auto* run_episodes_opt =
      run_cmd->add_option("--episodes", run_episodes, "Monte Carlo episodes override");

  std::string certify_config, certify_out;
  std::uint64_t certify_seed = 0, certify_episodes = 0;
  auto* certify_cmd =
      app.add_subcommand("certify", "run the reduced oracle/invariant certification suite");
  certify_cmd->add_option("config", certify_config, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  auto* certify_out_opt = certify_cmd->add_option("--out", certify_out, "output directory override");
  auto* certify_seed_opt = certify_cmd->add_option("--seed", certify_seed, "seed override");
  auto* certify_episodes_opt =
      certify_cmd->add_option("--episodes", certify_episodes, "Monte Carlo episodes override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      camo::ExperimentConfig cfg = camo::load_config(run_config);
      apply_overrides(cfg, run_out_opt->count() ? run_out : "", run_seed_opt->count() > 0, run_seed,
                      run_episodes_opt->count() > 0, run_episodes);
      const camo::RunResult result = camo::run_experiment(cfg);
      std::cout << result.summary_csv;
      std::cout << "artifacts written to " << cfg.output_dir << '\n';
      if (!result.invariants_ok) {
        std::cerr << "invariant check failed; see run_manifest.json\n";
        return 1;
      }
      return 0;
    }

    camo::ExperimentConfig cfg = camo::load_config(certify_config);
    apply_overrides(cfg, certify_out_opt->count() ? certify_out : "", certify_seed_opt->count() > 0,
                    certify_seed, certify_episodes_opt->count() > 0, certify_episodes);
    const camo::CertifyReport report = camo::certify(cfg);
    for (const auto& property : report.properties) {
      std::cout << (property.passed ? "PASS " : "FAIL ") << property.name;
      if (!property.passed) std::cout << " [" << property.witness << "]";
      std::cout << '\n';
    }
    return report.all_passed() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
