#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace coopnav::cli {

namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream f(dir / name);
  if (!f) throw Error("cannot write " + (dir / name).string());
  f << std::setprecision(10);
  return f;
}

void write_effective_config(const RunConfig& cfg) {
  auto f = open_out(cfg.out, "config.txt");
  f << "# effective configuration, schema " << scen::kSchemaVersion << '\n';
  write_config(f, cfg);
}

void write_report(const fs::path& dir, const std::string& suffix, const scen::MetricsReport& r,
                  const scen::PipelineConfig& pc) {
  {
    auto f = open_out(dir, "curves" + suffix + ".csv");
    scen::write_curves_csv(f, r);
  }
  {
    auto f = open_out(dir, "correlation" + suffix + ".csv");
    scen::write_correlation_csv(f, r);
  }
  auto f = open_out(dir, "summary" + suffix + ".json");
  scen::write_summary_json(f, r, pc);
}

scen::MonteCarloOptions mc_options(const RunConfig& cfg) {
  scen::MonteCarloOptions o;
  o.runs = cfg.runs;
  o.threads = cfg.threads;
  return o;
}

}  // namespace

int cmd_run(const RunConfig& cfg, std::ostream& log) {
  scen::PipelineConfig pc = cfg.pipeline;
  pc.keep_trace = true;
  const scen::TruthTrace truth = scen::gen_truth(pc.scenario);
  const scen::RunResult r = scen::run_pipeline(pc, truth, 0);

  write_effective_config(cfg);
  {
    auto f = open_out(cfg.out, "truth.csv");
    scen::write_truth_csv(f, truth);
  }
  {
    auto f = open_out(cfg.out, "trajectory.csv");
    scen::write_trajectory_csv(f, truth, r);
  }
  {
    auto f = open_out(cfg.out, "run.json");
    scen::write_run_json(f, r, pc);
  }
  {
    auto f = open_out(cfg.out, "audit.json");
    scen::write_audit_json(f, r.audit);
  }
  {
    auto f = open_out(cfg.out, "trace.jsonl");
    scen::write_trace_jsonl(f, r.trace);
  }

  if (r.failed) {
    log << "run failed: " << r.error << '\n';
    return kRuntimeFailure;
  }
  log << "agents " << r.agents << ", samples " << r.samples << ", comm-audit ratio "
      << r.audit.ratio << '\n';
  for (std::size_t a = 0; a < r.errors.size(); ++a)
    if (!r.errors[a].empty())
      log << "agent " << a << " final error " << r.errors[a].back().norm() << " m\n";
  log << "outputs in " << cfg.out.string() << '\n';
  return kOk;
}

int cmd_montecarlo(const RunConfig& cfg, std::ostream& log) {
  write_effective_config(cfg);
  const auto opt = mc_options(cfg);
  int failed = 0;
  if (cfg.sweep.empty()) {
    const auto r = scen::run_monte_carlo(cfg.pipeline, opt);
    write_report(cfg.out, "", r, cfg.pipeline);
    log << r.runs << " runs, " << r.failed_runs << " failed, final abs RMSE " << r.final_abs_rmse
        << " m\n";
    failed = r.failed_runs;
  } else {
    const auto s = scen::run_agent_sweep(cfg.pipeline, cfg.sweep, opt);
    for (std::size_t i = 0; i < s.n.size(); ++i) {
      scen::PipelineConfig pc = cfg.pipeline;
      pc.scenario.agents = s.n[i];
      write_report(cfg.out, "_n" + std::to_string(s.n[i]), s.reports[i], pc);
      failed += s.reports[i].failed_runs;
      log << "N=" << s.n[i] << " final abs RMSE " << s.final_rmse[i] << " m\n";
    }
    {
      auto f = open_out(cfg.out, "sweep.csv");
      scen::write_sweep_csv(f, s);
    }
    auto f = open_out(cfg.out, "sweep.json");
    scen::write_sweep_json(f, s);
    log << "fit c/sqrt(N): c = " << s.fit.c << " m, max relative residual "
        << s.fit.max_relative_residual << '\n';
  }
  log << "outputs in " << cfg.out.string() << '\n';
  return failed > 0 ? kRuntimeFailure : kOk;
}

std::vector<CheckResult> selfcheck_results(std::uint64_t seed, const oracle::ConditionFn& condition) {
  std::vector<CheckResult> out;
  out.push_back(check_marginalization(200, 32, seed, condition));

  const fusion::ConstraintParams cp;
  // Gate on priors whose mass outside the ball is negligible; the
  // sigma-point update cannot see tail truncation, so heavily truncated
  // priors are only reported (see README).
  ConstraintCheckOptions light;
  light.priors = 20;
  light.draws = 200'000;
  light.seed = seed + 1;
  light.family = {0.02, 0.08, 0.5};
  for (auto& r : check_constraint(cp, light)) {
    r.name += ", light truncation";
    out.push_back(r);
  }
  ConstraintCheckOptions heavy = light;
  heavy.priors = 10;
  heavy.family = {};
  for (auto& r : check_constraint(cp, heavy)) {
    r.name += ", heavy truncation";
    r.informational = true;
    out.push_back(r);
  }

  const fusion::RangeParams rp;
  RangeCheckOptions ro;
  ro.priors = 20;
  ro.seed = seed + 2;
  for (auto& r : check_range(rp, ro)) out.push_back(r);
  for (auto& r : check_influence(rp)) out.push_back(r);

  oracle::ConsistencyReport rep;
  for (auto& r : check_consistency(50, seed + 3, &rep)) out.push_back(r);
  double max_dev = 0.0;
  for (const auto& row : rep.rows) max_dev = std::max(max_dev, row.mean_dev);
  out[out.size() - 2].detail += ", max position-mean deviation " + std::to_string(max_dev) + " m";
  return out;
}

int cmd_selfcheck(std::uint64_t seed, std::ostream& log, const oracle::ConditionFn& condition) {
  const auto results = selfcheck_results(seed, condition);
  int failed = 0;
  for (const auto& r : results) {
    print_check(log, r);
    if (!r.informational && !r.passed) ++failed;
  }
  if (failed) {
    log << failed << " check(s) failed:";
    for (const auto& r : results)
      if (!r.informational && !r.passed) log << " [" << r.name << "]";
    log << '\n';
    return kSelfcheckFailure;
  }
  log << "all checks passed\n";
  return kOk;
}

int cmd_influence(const RunConfig& cfg, std::ostream& log) {
  const auto& rp = cfg.pipeline.fusion.range;
  auto f = open_out(cfg.out, "influence.csv");
  f << "# coopnav influence schema " << scen::kSchemaVersion << '\n';
  f << "p_z1_m2,residual_m,robust_m,kalman_m\n";
  for (double p : cfg.influence_p) {
    // Each foot carries half of the difference variance.
    const auto curve = oracle::influence_curve(0.5 * p, rp, rp.sigma_r * rp.sigma_r, 10.0, 10.0, 401);
    for (const auto& q : curve) f << p << ',' << q.residual << ',' << q.robust << ',' << q.kalman << '\n';
  }
  log << "influence curves for " << cfg.influence_p.size() << " prior(s) in "
      << (cfg.out / "influence.csv").string() << '\n';
  return kOk;
}

int cmd_audit(const RunConfig& cfg, std::ostream& log) {
  const scen::TruthTrace truth = scen::gen_truth(cfg.pipeline.scenario);
  const scen::RunResult r = scen::run_pipeline(cfg.pipeline, truth, 0);
  if (r.failed) {
    log << "run failed: " << r.error << '\n';
    return kRuntimeFailure;
  }
  {
    auto f = open_out(cfg.out, "audit.json");
    scen::write_audit_json(f, r.audit);
  }
  log << std::left << std::setw(16) << "tier" << std::setw(12) << "messages" << std::setw(14)
      << "payload B" << std::setw(12) << "header B" << "retransmitted B\n";
  for (const auto& [tier, c] : r.audit.tiers)
    log << std::setw(16) << msg::to_string(tier) << std::setw(12) << c.messages << std::setw(14)
        << c.payload_bytes << std::setw(12) << c.header_bytes << c.retransmitted_bytes << '\n';
  log << "baseline (raw IMU) bytes " << r.audit.baseline_bytes << ", step + correction payload bytes "
      << r.audit.decentralized_bytes << ", ratio " << r.audit.ratio << '\n';
  return kOk;
}

}  // namespace coopnav::cli
