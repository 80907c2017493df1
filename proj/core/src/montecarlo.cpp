#include <algorithm>
#include <atomic>
#include <thread>

#include "coopnav/scenarios.hpp"

namespace coopnav::scen {

MetricsReport run_monte_carlo(const PipelineConfig& cfg, const MonteCarloOptions& opt) {
  if (opt.runs < 1) throw InvalidInputError("runs must be >= 1");
  cfg.fusion.validate();
  cfg.network.validate();
  const TruthTrace truth = gen_truth(cfg.scenario);

  std::vector<RunResult> results(static_cast<std::size_t>(opt.runs));
  int threads = opt.threads > 0 ? opt.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, opt.runs);

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r; (r = next.fetch_add(1)) < opt.runs;)
      results[static_cast<std::size_t>(r)] = run_pipeline(cfg, truth, static_cast<std::uint64_t>(r));
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Reduce in run order so the report does not depend on the thread count.
  MetricsAccumulator acc(truth);
  for (const auto& r : results) acc.add(r);
  return acc.report();
}

SweepReport run_agent_sweep(const PipelineConfig& cfg, const std::vector<int>& n,
                            const MonteCarloOptions& opt) {
  SweepReport s;
  for (int agents : n) {
    PipelineConfig c = cfg;
    c.scenario.agents = agents;
    MetricsReport r = run_monte_carlo(c, opt);
    s.n.push_back(agents);
    s.final_rmse.push_back(r.final_abs_rmse);
    s.reports.push_back(std::move(r));
  }
  if (s.n.size() >= 2) s.fit = fit_inverse_sqrt(s.n, s.final_rmse);
  return s;
}

}  // namespace coopnav::scen
