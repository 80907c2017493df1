#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cli/commands.hpp"

using namespace coopnav;

namespace {

struct Flags {
  std::string config;
  std::optional<int> runs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_flags(CLI::App* sub, Flags& f, bool config_required) {
  auto* c = sub->add_option("--config", f.config, "key = value config file");
  if (config_required) c->required();
  sub->add_option("--runs", f.runs, "Monte-Carlo runs (overrides the config)");
  sub->add_option("--seed", f.seed, "base seed (overrides the config)");
  sub->add_option("--out", f.out, "output directory (overrides the config)");
}

cli::RunConfig resolve(const Flags& f) {
  cli::RunConfig cfg;
  if (!f.config.empty()) cfg = cli::load_config(f.config);
  if (f.runs) {
    if (*f.runs < 1) throw cli::ConfigError("--runs", "must be >= 1");
    cfg.runs = *f.runs;
  }
  if (f.seed) cfg.pipeline.scenario.seed = *f.seed;
  if (f.out) cfg.out = *f.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coopnav: cooperative foot-mounted inertial navigation simulator"};
  app.require_subcommand(1);
  Flags flags;
  auto* run = app.add_subcommand("run", "run one scenario end-to-end");
  auto* mc = app.add_subcommand("montecarlo", "Monte-Carlo runs, optionally an agent-count sweep");
  auto* self = app.add_subcommand("selfcheck", "oracle comparisons at desk scale");
  auto* infl = app.add_subcommand("influence", "influence curve of the range update as CSV");
  auto* aud = app.add_subcommand("audit", "communication audit of one run");
  add_flags(run, flags, true);
  add_flags(mc, flags, true);
  add_flags(self, flags, false);
  add_flags(infl, flags, false);
  add_flags(aud, flags, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kOk : cli::kConfigError;
  }

  try {
    const cli::RunConfig cfg = resolve(flags);
    if (run->parsed()) return cli::cmd_run(cfg, std::cout);
    if (mc->parsed()) return cli::cmd_montecarlo(cfg, std::cout);
    if (self->parsed()) return cli::cmd_selfcheck(flags.seed.value_or(1), std::cout);
    if (infl->parsed()) return cli::cmd_influence(cfg, std::cout);
    if (aud->parsed()) return cli::cmd_audit(cfg, std::cout);
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kRuntimeFailure;
  }
  return cli::kRuntimeFailure;
}
