#include <cmath>
#include <iomanip>
#include <ostream>

#include "coopnav/scenarios.hpp"
#include "json.hpp"

namespace coopnav::scen {
namespace {

using nlohmann::json;

json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

json audit_json(const msg::AuditReport& a) {
  json j;
  j["ratio"] = finite_or_string(a.ratio);
  j["baseline_bytes"] = a.baseline_bytes;
  j["decentralized_bytes"] = a.decentralized_bytes;
  j["step_payload_bytes"] = a.step_payload_bytes;
  j["correction_payload_bytes"] = a.correction_payload_bytes;
  for (const auto& [tier, c] : a.tiers) {
    json t;
    t["messages"] = c.messages;
    t["payload_bytes"] = c.payload_bytes;
    t["header_bytes"] = c.header_bytes;
    t["retransmitted_bytes"] = c.retransmitted_bytes;
    j["tiers"][msg::to_string(tier)] = t;
  }
  return j;
}

}  // namespace

void write_curves_csv(std::ostream& os, const MetricsReport& r) {
  os << "# coopnav curves schema " << kSchemaVersion << "\n";
  os << "distance_m,time_s,abs_rmse_m,rel_rmse_m,mobile_rmse_m\n";
  os << std::setprecision(10);
  for (std::size_t l = 0; l < r.distance.size(); ++l)
    os << r.distance[l] << ',' << r.time[l] << ',' << r.abs_rmse[l] << ',' << r.rel_rmse[l] << ','
       << r.mobile_rmse[l] << '\n';
}

void write_correlation_csv(std::ostream& os, const MetricsReport& r) {
  os << "# coopnav correlation schema " << kSchemaVersion << "\n";
  os << "distance_m,corr_x,corr_y,corr_z\n";
  os << std::setprecision(10);
  for (std::size_t l = 0; l < r.distance.size(); ++l)
    os << r.distance[l] << ',' << r.correlation[0][l] << ',' << r.correlation[1][l] << ','
       << r.correlation[2][l] << '\n';
}

void write_sweep_csv(std::ostream& os, const SweepReport& s) {
  os << "# coopnav final-rmse schema " << kSchemaVersion << "\n";
  os << "agents,final_rmse_m,fit_m\n";
  os << std::setprecision(10);
  for (std::size_t i = 0; i < s.n.size(); ++i)
    os << s.n[i] << ',' << s.final_rmse[i] << ',' << s.fit.c / std::sqrt(static_cast<double>(s.n[i]))
       << '\n';
}

void write_summary_json(std::ostream& os, const MetricsReport& r, const PipelineConfig& cfg) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["scenario"] = to_string(cfg.scenario.kind);
  j["agents"] = r.agents;
  j["runs"] = r.runs;
  j["failed_runs"] = r.failed_runs;
  j["failures"] = r.failures;
  j["seed"] = cfg.scenario.seed;
  j["final_abs_rmse_m"] = r.final_abs_rmse;
  j["final_rel_rmse_m"] = r.rel_rmse.empty() ? 0.0 : r.rel_rmse.back();
  j["final_mobile_rmse_m"] = r.mobile_rmse.empty() ? 0.0 : r.mobile_rmse.back();
  j["audit_ratio"] = finite_or_string(r.audit_ratio);
  j["distance_m"] = r.distance.empty() ? 0.0 : r.distance.back();
  if (!r.correlation[0].empty())
    j["final_correlation"] = {r.correlation[0].back(), r.correlation[1].back(),
                              r.correlation[2].back()};
  os << std::setw(2) << j << '\n';
}

void write_sweep_json(std::ostream& os, const SweepReport& s) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["agents"] = s.n;
  j["final_rmse_m"] = s.final_rmse;
  j["fit_c"] = s.fit.c;
  j["fit_max_relative_residual"] = s.fit.max_relative_residual;
  os << std::setw(2) << j << '\n';
}

void write_run_json(std::ostream& os, const RunResult& r, const PipelineConfig& cfg) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["scenario"] = to_string(cfg.scenario.kind);
  j["agents"] = r.agents;
  j["run"] = r.run;
  j["failed"] = r.failed;
  if (r.failed) j["error"] = r.error;
  j["audit"] = audit_json(r.audit);
  j["fusion"] = {{"steps", r.stats.steps},
                 {"constraints_active", r.stats.constraints_active},
                 {"ranges", r.stats.ranges},
                 {"ranges_rejected", r.stats.ranges_rejected}};
  if (!r.errors.empty() && !r.errors[0].empty()) {
    json fin = json::array();
    for (const auto& e : r.errors) fin.push_back({e.back().x(), e.back().y(), e.back().z()});
    j["final_errors_m"] = fin;
  }
  os << std::setw(2) << j << '\n';
}

void write_truth_csv(std::ostream& os, const TruthTrace& t) {
  os << "# coopnav truth schema " << kSchemaVersion << "\n";
  os << "agent,side,step,t_s,x_m,y_m,z_m,chi_rad\n";
  os << std::setprecision(12);
  for (const auto& f : t.feet)
    for (std::size_t k = 0; k < f.x.size(); ++k)
      os << f.id.agent << ',' << (f.id.side == FootId::kLeft ? "left" : "right") << ',' << k << ','
         << f.t[k] << ',' << f.x[k].x() << ',' << f.x[k].y() << ',' << f.x[k].z() << ','
         << f.chi[k] << '\n';
}

void write_audit_json(std::ostream& os, const msg::AuditReport& a) {
  json j = audit_json(a);
  j["schema_version"] = kSchemaVersion;
  os << std::setw(2) << j << '\n';
}

void write_trace_jsonl(std::ostream& os, const std::vector<msg::TraceEntry>& trace) {
  static constexpr const char* kEvent[] = {"sent", "dropped", "delivered", "stalled"};
  for (const auto& e : trace) {
    json j;
    j["event"] = kEvent[static_cast<int>(e.event)];
    j["t"] = e.t;
    j["id"] = e.id;
    j["agent"] = e.link.agent;
    j["dir"] = msg::to_string(e.link.dir);
    j["bytes"] = e.bytes;
    os << j.dump() << '\n';
  }
}

void write_trajectory_csv(std::ostream& os, const TruthTrace& t, const RunResult& r) {
  os << "# coopnav trajectory schema " << kSchemaVersion << "\n";
  os << "agent,step,t_s,true_x_m,true_y_m,true_z_m,err_x_m,err_y_m,err_z_m,local_err_x_m,"
        "local_err_y_m,local_err_z_m\n";
  os << std::setprecision(10);
  for (std::size_t a = 0; a < r.errors.size(); ++a) {
    for (std::size_t l = 0; l < r.errors[a].size(); ++l) {
      const double ts = t.sample_time(static_cast<int>(l));
      const Vec3 p = t.device_position(static_cast<std::uint16_t>(a), ts);
      const Vec3& e = r.errors[a][l];
      const Vec3& le = r.local_errors[a][l];
      os << a << ',' << l << ',' << ts << ',' << p.x() << ',' << p.y() << ',' << p.z() << ','
         << e.x() << ',' << e.y() << ',' << e.z() << ',' << le.x() << ',' << le.y() << ','
         << le.z() << '\n';
    }
  }
}

}  // namespace coopnav::scen
