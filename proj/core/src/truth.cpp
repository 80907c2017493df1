#include <algorithm>
#include <cmath>

#include "coopnav/deadreck.hpp"
#include "coopnav/scenarios.hpp"

namespace coopnav::scen {

void ScenarioConfig::validate() const {
  if (agents < 1) throw InvalidInputError("scenario needs at least one agent");
  if (kind == ScenarioKind::kStaticTriangle && agents < 4)
    throw InvalidInputError("static-triangle needs at least 4 agents");
  if (!(spacing > 0.0) || !(step_length > 0.0) || !(step_rate > 0.0))
    throw InvalidInputError("spacing, step_length and step_rate must be > 0");
  if (steps < 1) throw InvalidInputError("steps must be >= 1");
  if (!(foot_half_width >= 0.0)) throw InvalidInputError("foot_half_width must be >= 0");
  if (!(triangle_side > 0.0) || !(circle_radius > 0.0) || laps < 1)
    throw InvalidInputError("triangle_side, circle_radius and laps must be positive");
  if (!(noise.sigma_dp >= 0.0) || !(noise.sigma_dpsi >= 0.0) || !(noise.range_scale >= 0.0))
    throw InvalidInputError("noise magnitudes must be >= 0");
  if (!(noise.range_rate > 0.0)) throw InvalidInputError("range_rate must be > 0");
  if (!(noise.range_phase >= 0.0)) throw InvalidInputError("range_phase must be >= 0");
}

int ScenarioConfig::steps_per_lap() const {
  const double n = std::round(2.0 * std::numbers::pi * circle_radius / step_length);
  return std::max(3, static_cast<int>(n));
}

int ScenarioConfig::total_steps() const {
  return kind == ScenarioKind::kStaticTriangle ? laps * steps_per_lap() : steps;
}

std::string to_string(ScenarioKind k) {
  return k == ScenarioKind::kStraightMarch ? "straight-march" : "static-triangle";
}

ScenarioKind parse_scenario_kind(const std::string& s) {
  if (s == "straight-march" || s == "march") return ScenarioKind::kStraightMarch;
  if (s == "static-triangle" || s == "triangle") return ScenarioKind::kStaticTriangle;
  throw InvalidInputError("unknown scenario kind '" + s + "'");
}

const FootTruth& TruthTrace::foot(const FootId& id) const {
  for (const auto& f : feet)
    if (f.id == id) return f;
  throw LookupError("no truth for " + to_string(id));
}

Vec3 TruthTrace::foot_position(const FootId& id, double t) const {
  const FootTruth& f = foot(id);
  const auto it = std::upper_bound(f.t.begin(), f.t.end(), t);
  const auto k = std::max<std::ptrdiff_t>(0, (it - f.t.begin()) - 1);
  return f.x[static_cast<std::size_t>(k)];
}

Vec3 TruthTrace::device_position(std::uint16_t agent, double t) const {
  return 0.5 * (foot_position({agent, FootId::kLeft}, t) +
                foot_position({agent, FootId::kRight}, t));
}

double TruthTrace::sample_time(int l) const { return (l + 0.5) / cfg.step_rate; }

namespace {

// Left foot steps at k / rate, right foot half a period later.
double step_time(const ScenarioConfig& cfg, std::uint8_t side, int k) {
  return (k + (side == FootId::kRight ? 0.5 : 0.0)) / cfg.step_rate;
}

void add_ranges(TruthTrace& tr) {
  const auto& cfg = tr.cfg;
  if (cfg.agents < 2) return;
  const double t_end = tr.sample_time(cfg.total_steps());
  const auto slots =
      msg::ranging_schedule(cfg.agents, cfg.noise.range_rate, 0.0, t_end, cfg.noise.range_phase);
  tr.ranges.reserve(slots.size());
  for (const auto& s : slots) {
    const double r = (tr.device_position(s.a, s.t) - tr.device_position(s.b, s.t)).norm();
    tr.ranges.push_back({s, r});
  }
}

}  // namespace

TruthTrace gen_straight_march(const ScenarioConfig& cfg) {
  cfg.validate();
  if (cfg.kind != ScenarioKind::kStraightMarch)
    throw InvalidInputError("gen_straight_march needs a straight-march config");
  TruthTrace tr;
  tr.cfg = cfg;
  const int n = cfg.total_steps();
  for (int a = 0; a < cfg.agents; ++a) {
    const double lane = a * cfg.spacing;
    for (std::uint8_t side : {FootId::kLeft, FootId::kRight}) {
      FootTruth f;
      f.id = {static_cast<std::uint16_t>(a), side};
      const double y = lane + (side == FootId::kLeft ? cfg.foot_half_width : -cfg.foot_half_width);
      const double x0 = side == FootId::kRight ? 0.5 * cfg.step_length : 0.0;
      for (int k = 0; k <= n; ++k) {
        f.t.push_back(step_time(cfg, side, k));
        f.x.emplace_back(x0 + k * cfg.step_length, y, 0.0);
        f.chi.push_back(0.0);
      }
      tr.feet.push_back(std::move(f));
    }
  }
  add_ranges(tr);
  return tr;
}

TruthTrace gen_static_triangle(const ScenarioConfig& cfg) {
  cfg.validate();
  if (cfg.kind != ScenarioKind::kStaticTriangle)
    throw InvalidInputError("gen_static_triangle needs a static-triangle config");
  TruthTrace tr;
  tr.cfg = cfg;
  const int n = cfg.total_steps();
  const double rho = cfg.triangle_side / std::sqrt(3.0);
  const double w = cfg.foot_half_width;
  const int per_lap = cfg.steps_per_lap();
  const double dtheta = 2.0 * std::numbers::pi / per_lap;
  const int walkers = cfg.agents - 3;

  for (int a = 0; a < cfg.agents; ++a) {
    for (std::uint8_t side : {FootId::kLeft, FootId::kRight}) {
      FootTruth f;
      f.id = {static_cast<std::uint16_t>(a), side};
      const double lat = side == FootId::kLeft ? w : -w;
      if (a < 3) {
        f.stationary = true;
        const double ang = std::numbers::pi / 2.0 + a * 2.0 * std::numbers::pi / 3.0;
        const Vec3 c(rho * std::cos(ang), rho * std::sin(ang), 0.0);
        for (int k = 0; k <= n; ++k) {
          f.t.push_back(step_time(cfg, side, k));
          f.x.push_back(c + Vec3(0.0, lat, 0.0));
          f.chi.push_back(0.0);
        }
      } else {
        // Counter-clockwise walk; the left foot is on the inner side.
        const double phase = 2.0 * std::numbers::pi * (a - 3) / walkers;
        const double half = side == FootId::kRight ? 0.5 : 0.0;
        for (int k = 0; k <= n; ++k) {
          const double th = phase + (k + half) * dtheta;
          const double r = cfg.circle_radius - lat;
          f.t.push_back(step_time(cfg, side, k));
          f.x.emplace_back(r * std::cos(th), r * std::sin(th), 0.0);
          f.chi.push_back(wrap_angle(th + std::numbers::pi / 2.0));
        }
      }
      tr.feet.push_back(std::move(f));
    }
  }
  add_ranges(tr);
  return tr;
}

TruthTrace gen_truth(const ScenarioConfig& cfg) {
  return cfg.kind == ScenarioKind::kStraightMarch ? gen_straight_march(cfg)
                                                  : gen_static_triangle(cfg);
}

}  // namespace coopnav::scen
