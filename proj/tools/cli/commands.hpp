#pragma once

#include <iosfwd>
#include <vector>

#include "checks.hpp"
#include "run_config.hpp"

namespace coopnav::cli {

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kConfigError = 2, kSelfcheckFailure = 3 };

/// One scenario end-to-end. Writes truth.csv, trajectory.csv, run.json,
/// audit.json, trace.jsonl and the effective config into cfg.out.
int cmd_run(const RunConfig& cfg, std::ostream& log);

/// cfg.runs replicas; curves.csv, correlation.csv, summary.json. With a
/// non-empty cfg.sweep, one set per agent count plus sweep.csv/sweep.json.
int cmd_montecarlo(const RunConfig& cfg, std::ostream& log);

/// Every oracle comparison at desk scale. Exit 3 on any failure.
int cmd_selfcheck(std::uint64_t seed, std::ostream& log,
                  const oracle::ConditionFn& condition = {});
std::vector<CheckResult> selfcheck_results(std::uint64_t seed,
                                           const oracle::ConditionFn& condition = {});

/// influence.csv for every prior variance in cfg.influence_p.
int cmd_influence(const RunConfig& cfg, std::ostream& log);

/// One run, audit.json only, and a per-tier table on the log.
int cmd_audit(const RunConfig& cfg, std::ostream& log);

}  // namespace coopnav::cli
