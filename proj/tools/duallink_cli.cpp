#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "duallink/commands.hpp"
#include "duallink/config.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> realizations;
  std::optional<std::string> out;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON run configuration")->required();
  cmd->add_option("--seed", o.seed, "master seed (overrides ensemble.seed)");
  cmd->add_option("--realizations", o.realizations, "ensemble size (overrides ensemble.realizations)");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  cmd->add_option("--out", o.out, "output directory (overrides output_dir)");
}

duallink::RunConfig resolve(const Overrides& o) {
  duallink::RunConfig config = duallink::load_config(o.config_path);
  if (o.seed) config.ensemble.seed = *o.seed;
  if (o.realizations) config.ensemble.realizations = *o.realizations;
  if (o.out) config.output_dir = *o.out;
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Satellite downlink channel simulation and dual-encoding key-rate analysis"};
  app.set_version_flag("--version", std::string(DUALLINK_VERSION));
  app.require_subcommand(1);

  Overrides o;
  std::vector<std::filesystem::path> ensembles;
  bool sabotage = false;

  auto* sim = app.add_subcommand("simulate-channel", "run channel ensembles for every zenith/aperture");
  add_common(sim, o);
  auto* rate = app.add_subcommand("key-rate", "key rates from ensemble files");
  add_common(rate, o);
  rate->add_option("--ensemble", ensembles, "ensemble file (repeatable; default: files in the output dir)");
  auto* verify = app.add_subcommand("protocol-verify", "shot-level Monte Carlo against closed forms");
  add_common(verify, o);
  verify->add_flag("--sabotage", sabotage, "use the non-zero-leakage tap from verification.sabotage_tap");
  auto* budget = app.add_subcommand("link-budget", "classical-layer SNR and BER per realization");
  add_common(budget, o);
  budget->add_option("--ensemble", ensembles, "ensemble file (repeatable; default: files in the output dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const duallink::RunConfig config = resolve(o);
    if (sim->parsed()) return duallink::cmd_simulate_channel(config, o.threads, std::cout);
    if (rate->parsed()) return duallink::cmd_key_rate(config, ensembles, std::cout);
    if (verify->parsed()) return duallink::cmd_protocol_verify(config, sabotage, o.threads, std::cout);
    if (budget->parsed()) return duallink::cmd_link_budget(config, ensembles, std::cout);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return duallink::exit_status_for(e);
  }
  return 1;
}
