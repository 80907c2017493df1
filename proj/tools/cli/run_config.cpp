#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <type_traits>

namespace coopnav::cli {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x))
    throw ConfigError(key, "expected a finite number, got '" + v + "'");
  return x;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(key, "expected an integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

std::string fmt(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

// Range checks; each names the key in its message.
double positive(const std::string& k, double x) {
  if (!(x > 0.0)) throw ConfigError(k, "must be > 0");
  return x;
}
double non_negative(const std::string& k, double x) {
  if (!(x >= 0.0)) throw ConfigError(k, "must be >= 0");
  return x;
}
double probability(const std::string& k, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw ConfigError(k, "must lie in [0, 1]");
  return x;
}
constexpr long long kMaxCount = 1'000'000'000;

long long bounded(const std::string& k, long long x, long long lo, long long hi = kMaxCount) {
  if (x < lo) throw ConfigError(k, "must be >= " + std::to_string(lo));
  if (x > hi) throw ConfigError(k, "must be <= " + std::to_string(hi));
  return x;
}
int at_least(const std::string& k, long long x, long long lo) {
  return static_cast<int>(bounded(k, x, lo));
}

struct Entry {
  ConfigKey info;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

template <typename Ref>
Entry real(std::string key, std::string doc, Ref ref,
           double (*check)(const std::string&, double) = nullptr, double scale = 1.0) {
  Setter set = [ref, check, scale](RunConfig& c, const std::string& k, const std::string& v) {
    double x = to_double(k, v);
    if (check) x = check(k, x);
    ref(c) = x * scale;
  };
  Getter get = [ref, scale](const RunConfig& c) { return fmt(ref(const_cast<RunConfig&>(c)) / scale); };
  return {{std::move(key), std::move(doc), false}, set, get};
}

template <typename Ref>
Entry integer(std::string key, std::string doc, Ref ref, long long lo, long long hi = kMaxCount) {
  Setter set = [ref, lo, hi](RunConfig& c, const std::string& k, const std::string& v) {
    using T = std::remove_reference_t<decltype(ref(c))>;
    ref(c) = static_cast<T>(bounded(k, to_integer(k, v), lo, hi));
  };
  Getter get = [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); };
  return {{std::move(key), std::move(doc), false}, set, get};
}

template <typename Ref>
Entry boolean(std::string key, std::string doc, Ref ref) {
  Setter set = [ref](RunConfig& c, const std::string& k, const std::string& v) {
    ref(c) = to_bool(k, v);
  };
  Getter get = [ref](const RunConfig& c) {
    return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false");
  };
  return {{std::move(key), std::move(doc), false}, set, get};
}

std::vector<Entry> make_table() {
  std::vector<Entry> t;
  auto sc = [](RunConfig& c) -> scen::ScenarioConfig& { return c.pipeline.scenario; };

  t.push_back({{"scenario", "straight-march or static-triangle", true},
               [sc](RunConfig& c, const std::string& k, const std::string& v) {
                 try {
                   sc(c).kind = scen::parse_scenario_kind(v);
                 } catch (const InvalidInputError&) {
                   throw ConfigError(k, "expected straight-march or static-triangle, got '" + v + "'");
                 }
               },
               [sc](const RunConfig& c) { return scen::to_string(sc(const_cast<RunConfig&>(c)).kind); }});
  t.push_back(integer("agents", "number of agents (static-triangle: >= 4, agents 0-2 stand, the rest walk)",
                      [sc](RunConfig& c) -> int& { return sc(c).agents; }, 1));
  t.push_back(integer("steps", "steps per foot (straight-march)",
                      [sc](RunConfig& c) -> int& { return sc(c).steps; }, 1));
  t.push_back(integer("laps", "laps of the walker (static-triangle)",
                      [sc](RunConfig& c) -> int& { return sc(c).laps; }, 1));
  t.push_back(real("spacing", "m between march lanes",
                   [sc](RunConfig& c) -> double& { return sc(c).spacing; }, positive));
  t.push_back(real("step_length", "m per foot step",
                   [sc](RunConfig& c) -> double& { return sc(c).step_length; }, positive));
  t.push_back(real("step_rate", "Hz, steps per foot",
                   [sc](RunConfig& c) -> double& { return sc(c).step_rate; }, positive));
  t.push_back(real("foot_half_width", "m, lateral offset of each foot",
                   [sc](RunConfig& c) -> double& { return sc(c).foot_half_width; }, non_negative));
  t.push_back(real("triangle_side", "m, side of the static triangle",
                   [sc](RunConfig& c) -> double& { return sc(c).triangle_side; }, positive));
  t.push_back(real("circle_radius", "m, radius of the walker's circle",
                   [sc](RunConfig& c) -> double& { return sc(c).circle_radius; }, positive));
  t.push_back(integer("seed", "base seed; every run derives its own streams",
                      [sc](RunConfig& c) -> std::uint64_t& { return sc(c).seed; }, 0,
                      std::numeric_limits<long long>::max()));

  t.push_back(real("noise.sigma_dp", "m, step position noise per axis",
                   [sc](RunConfig& c) -> double& { return sc(c).noise.sigma_dp; }, non_negative));
  t.push_back(real("noise.sigma_dpsi_deg", "deg, step heading noise",
                   [sc](RunConfig& c) -> double& { return sc(c).noise.sigma_dpsi; }, non_negative,
                   kDeg));
  t.push_back(real("noise.range_scale", "m, Cauchy scale of the range errors",
                   [sc](RunConfig& c) -> double& { return sc(c).noise.range_scale; }, non_negative));
  t.push_back(real("noise.range_rate", "Hz, ranging slots over all pairs",
                   [sc](RunConfig& c) -> double& { return sc(c).noise.range_rate; }, positive));
  t.push_back(real("noise.range_phase", "s, offset of the first ranging slot",
                   [sc](RunConfig& c) -> double& { return sc(c).noise.range_phase; }, non_negative));

  auto fu = [](RunConfig& c) -> fusion::FusionConfig& { return c.pipeline.fusion; };
  t.push_back(boolean("constraint.enabled", "apply the inter-foot separation constraint",
                      [fu](RunConfig& c) -> bool& { return fu(c).apply_constraint; }));
  t.push_back(real("constraint.gamma_xy", "m, horizontal foot separation bound",
                   [fu](RunConfig& c) -> double& { return fu(c).constraint.gamma_xy; }, positive));
  t.push_back(real("constraint.gamma_z", "m, vertical foot separation bound",
                   [fu](RunConfig& c) -> double& { return fu(c).constraint.gamma_z; }, positive));
  t.push_back(real("constraint.eta", "sigma-point scaling",
                   [fu](RunConfig& c) -> double& { return fu(c).constraint.eta; }, positive));
  t.push_back(real("constraint.v_max", "m/s, asynchrony inflation of gamma_xy",
                   [fu](RunConfig& c) -> double& { return fu(c).constraint.v_max; }, non_negative));
  t.push_back(real("range.gamma_r", "m, half-width of the uniform part of the range likelihood",
                   [fu](RunConfig& c) -> double& { return fu(c).range.gamma_r; }, positive));
  t.push_back(real("range.sigma_r", "m, Cauchy scale of the range likelihood",
                   [fu](RunConfig& c) -> double& { return fu(c).range.sigma_r; }, positive));
  t.push_back(real("range.v_max", "m/s, asynchrony inflation of gamma_r",
                   [fu](RunConfig& c) -> double& { return fu(c).range.v_max; }, non_negative));
  t.push_back({{"range.lattice", "points per axis of the range lattice (odd, >= 3)", false},
               [fu](RunConfig& c, const std::string& k, const std::string& v) {
                 const int n = at_least(k, to_integer(k, v), 3);
                 if (n % 2 == 0) throw ConfigError(k, "must be odd");
                 if (n > 41) throw ConfigError(k, "must be <= 41");
                 fu(c).range.lattice = fusion::SampleLattice::cubic(3, n);
               },
               [](const RunConfig& c) {
                 const int pts = c.pipeline.fusion.range.lattice.points();
                 int n = 1;
                 while (n * n * n < pts) ++n;
                 return std::to_string(n);
               }});
  t.push_back(boolean("corrections.covariance", "send the replacement covariance downlink",
                      [fu](RunConfig& c) -> bool& { return fu(c).send_covariance; }));

  auto nw = [](RunConfig& c) -> msg::NetworkConfig& { return c.pipeline.network; };
  t.push_back(real("network.drop_prob", "per-transmission drop probability, all links",
                   [nw](RunConfig& c) -> double& { return nw(c).drop_prob; }, probability));
  t.push_back(real("network.latency", "s, fixed link latency",
                   [nw](RunConfig& c) -> double& { return nw(c).latency; }, non_negative));
  t.push_back(real("network.latency_jitter", "s, mean exponential extra delay",
                   [nw](RunConfig& c) -> double& { return nw(c).latency_jitter; }, non_negative));
  t.push_back(real("network.retry_interval", "s between retransmissions",
                   [nw](RunConfig& c) -> double& { return nw(c).retry_interval; }, positive));
  t.push_back({{"network.disconnects", "agent:t_begin:t_end, comma separated", false},
               [nw](RunConfig& c, const std::string& k, const std::string& v) {
                 nw(c).disconnects.clear();
                 if (v.empty()) return;
                 for (const auto& item : split(v, ',')) {
                   const auto f = split(item, ':');
                   if (f.size() != 3) throw ConfigError(k, "expected agent:t_begin:t_end, got '" + item + "'");
                   msg::Disconnect d;
                   d.agent = static_cast<std::uint16_t>(at_least(k, to_integer(k, f[0]), 0));
                   d.t_begin = to_double(k, f[1]);
                   d.t_end = to_double(k, f[2]);
                   if (!(d.t_end >= d.t_begin)) throw ConfigError(k, "interval ends before it begins");
                   nw(c).disconnects.push_back(d);
                 }
               },
               [](const RunConfig& c) {
                 std::string s;
                 for (const auto& d : c.pipeline.network.disconnects) {
                   if (!s.empty()) s += ',';
                   s += std::to_string(d.agent) + ':' + fmt(d.t_begin) + ':' + fmt(d.t_end);
                 }
                 return s;
               }});
  t.push_back({{"network.link_drops", "agent:up|down:p overrides, comma separated", false},
               [nw](RunConfig& c, const std::string& k, const std::string& v) {
                 nw(c).link_drop_prob.clear();
                 if (v.empty()) return;
                 for (const auto& item : split(v, ',')) {
                   const auto f = split(item, ':');
                   if (f.size() != 3 || (f[1] != "up" && f[1] != "down"))
                     throw ConfigError(k, "expected agent:up|down:p, got '" + item + "'");
                   msg::LinkId l{static_cast<std::uint16_t>(at_least(k, to_integer(k, f[0]), 0)),
                                 f[1] == "up" ? msg::Direction::kUplink : msg::Direction::kDownlink};
                   nw(c).link_drop_prob[l] = probability(k, to_double(k, f[2]));
                 }
               },
               [](const RunConfig& c) {
                 std::string s;
                 for (const auto& [l, p] : c.pipeline.network.link_drop_prob) {
                   if (!s.empty()) s += ',';
                   s += std::to_string(l.agent) + (l.dir == msg::Direction::kUplink ? ":up:" : ":down:") +
                        fmt(p);
                 }
                 return s;
               }});
  t.push_back(integer("network.seed", "seed of the drop and jitter draws",
                      [nw](RunConfig& c) -> std::uint64_t& { return nw(c).seed; }, 0,
                      std::numeric_limits<long long>::max()));

  t.push_back(boolean("quantize", "send packets through the 16-bit codecs",
                      [](RunConfig& c) -> bool& { return c.pipeline.quantize; }));
  t.push_back(real("f_imu", "Hz, IMU rate of the centralized audit baseline",
                   [](RunConfig& c) -> double& { return c.pipeline.f_imu; }, positive));

  t.push_back(integer("runs", "Monte-Carlo runs",
                      [](RunConfig& c) -> int& { return c.runs; }, 1));
  t.push_back(integer("threads", "worker threads, 0 for all cores",
                      [](RunConfig& c) -> int& { return c.threads; }, 0));
  t.push_back({{"sweep", "agent counts for the montecarlo N-sweep, comma separated", false},
               [](RunConfig& c, const std::string& k, const std::string& v) {
                 c.sweep.clear();
                 if (v.empty()) return;
                 for (const auto& item : split(v, ',')) c.sweep.push_back(at_least(k, to_integer(k, item), 1));
               },
               [](const RunConfig& c) {
                 std::string s;
                 for (int n : c.sweep) s += (s.empty() ? "" : ",") + std::to_string(n);
                 return s;
               }});
  t.push_back({{"influence.p", "m^2, prior variances of the ranged difference per axis, comma separated", false},
               [](RunConfig& c, const std::string& k, const std::string& v) {
                 c.influence_p.clear();
                 for (const auto& item : split(v, ',')) c.influence_p.push_back(positive(k, to_double(k, item)));
                 if (c.influence_p.empty()) throw ConfigError(k, "needs at least one value");
               },
               [](const RunConfig& c) {
                 std::string s;
                 for (double p : c.influence_p) s += (s.empty() ? "" : ",") + fmt(p);
                 return s;
               }});
  t.push_back({{"out", "output directory", false},
               [](RunConfig& c, const std::string& k, const std::string& v) {
                 if (v.empty()) throw ConfigError(k, "must not be empty");
                 c.out = v;
               },
               [](const RunConfig& c) { return c.out.string(); }});
  return t;
}

const std::vector<Entry>& table() {
  static const std::vector<Entry> t = make_table();
  return t;
}

// Cross-field checks the per-key ones cannot see.
void check_consistency(const RunConfig& c) {
  const auto& s = c.pipeline.scenario;
  if (s.kind == scen::ScenarioKind::kStaticTriangle && s.agents < 4)
    throw ConfigError("agents", "static-triangle needs at least 4 agents");
  for (const auto& d : c.pipeline.network.disconnects)
    if (d.agent >= s.agents) throw ConfigError("network.disconnects", "agent out of range");
  for (const auto& [l, p] : c.pipeline.network.link_drop_prob)
    if (l.agent >= s.agents) throw ConfigError("network.link_drops", "agent out of range");
  try {
    s.validate();
    c.pipeline.fusion.validate();
    c.pipeline.network.validate();
  } catch (const InvalidInputError& e) {
    throw ConfigError("config", e.what());
  }
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& e : table()) k.push_back(e.info);
    return k;
  }();
  return keys;
}

RunConfig parse_config(std::istream& is, const std::string& source) {
  RunConfig cfg;
  std::map<std::string, int> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno), "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& t = table();
    const auto it = std::find_if(t.begin(), t.end(), [&](const Entry& e) { return e.info.key == key; });
    if (it == t.end()) throw ConfigError(key, "unknown key");
    if (seen.count(key))
      throw ConfigError(key, "duplicate key (first on line " + std::to_string(seen[key]) + ")");
    seen[key] = lineno;
    it->set(cfg, key, value);
  }
  for (const auto& e : table())
    if (e.info.required && !seen.count(e.info.key)) throw ConfigError(e.info.key, "missing required key");
  check_consistency(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("--config", "cannot read '" + path.string() + "'");
  return parse_config(f, path.string());
}

void write_config(std::ostream& os, const RunConfig& cfg) {
  for (const auto& e : table()) os << e.info.key << " = " << e.get(cfg) << '\n';
}

}  // namespace coopnav::cli
