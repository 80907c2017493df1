#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "coopnav/common.hpp"
#include "coopnav/fusion_center.hpp"
#include "coopnav/ins.hpp"
#include "coopnav/messaging.hpp"

/// Ground truth, synthetic measurements, the end-to-end pipeline and the
/// Monte-Carlo harness.
namespace coopnav::scen {

enum class ScenarioKind { kStraightMarch, kStaticTriangle };

struct NoiseConfig {
  double sigma_dp = 0.01;                                  // m, per axis per step
  double sigma_dpsi = 0.2 * std::numbers::pi / 180.0;      // rad per step
  double range_scale = 1.0;                                // m, Cauchy scale
  double range_rate = 1.0;                                 // Hz, all pairs together
  double range_phase = 0.25;                               // s into each period
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::kStraightMarch;
  int agents = 2;
  double spacing = 10.0;          // m between march lanes
  double step_length = 1.0;       // m per foot step
  double step_rate = 1.0;         // Hz, steps per foot
  int steps = 2000;               // per foot (march)
  double foot_half_width = 0.15;  // m, lateral offset of each foot
  double triangle_side = 20.0;    // m
  double circle_radius = 20.0;    // m
  int laps = 10;
  NoiseConfig noise;
  std::uint64_t seed = 1;

  void validate() const;
  /// Steps per foot actually generated (laps are converted for the triangle).
  int total_steps() const;
  int steps_per_lap() const;
};

std::string to_string(ScenarioKind k);
ScenarioKind parse_scenario_kind(const std::string& s);

/// Poses of one foot at its step instants; index 0 is the initial pose.
struct FootTruth {
  FootId id;
  bool stationary = false;
  std::vector<double> t;
  std::vector<Vec3> x;
  std::vector<double> chi;
};

struct RangeTruth {
  msg::RangingSlot slot;
  double range = 0.0;   // between device positions
};

struct TruthTrace {
  ScenarioConfig cfg;
  std::vector<FootTruth> feet;   // agent-major: a0.left, a0.right, a1.left, ...
  std::vector<RangeTruth> ranges;

  const FootTruth& foot(const FootId& id) const;
  /// Position of a foot at time t: the pose of its latest step at or before t.
  Vec3 foot_position(const FootId& id, double t) const;
  /// Device position: the midpoint of the two feet.
  Vec3 device_position(std::uint16_t agent, double t) const;
  /// Sample instants of the metric axis: after both feet completed step l.
  double sample_time(int l) const;
};

TruthTrace gen_straight_march(const ScenarioConfig& cfg);
TruthTrace gen_static_triangle(const ScenarioConfig& cfg);
TruthTrace gen_truth(const ScenarioConfig& cfg);

/// Deterministic sub-seed for (seed, run, stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t run, std::uint64_t stream);

/// Per-foot step streams: truth increments plus Gaussian noise, reported
/// covariances equal to the generating ones. Stationary feet report exact
/// zero steps with zero covariance.
std::vector<std::vector<ins::StepUpdate>> synth_step_updates(const TruthTrace& truth,
                                                             std::uint64_t seed);

struct TimedRange {
  fusion::RangeMeasurement m;
  double truth = 0.0;
};

/// Cauchy-perturbed device-to-device ranges on the round-robin slots,
/// clamped at zero.
std::vector<TimedRange> synth_ranges(const TruthTrace& truth, std::uint64_t seed);

// ---- IMU gait ---------------------------------------------------------------

struct GaitParams {
  double f_imu = 200.0;            // Hz
  int strides = 10;
  double stride_length = 1.0;      // m
  double stance = 0.4;             // s
  double swing = 0.6;              // s
  double initial_stance = 0.5;     // s, longer than the minimum reset spacing
  double final_stance = 1.0;       // s
  double swing_height = 0.1;       // m
  double pitch_amplitude = 0.3;    // rad, foot pitch during swing
  double turn_per_stride = 0.0;    // rad
  double initial_yaw = 0.0;        // rad
  Vec3 initial_position = Vec3::Zero();
  double accel_noise = 0.0;        // m/s^2
  double gyro_noise = 0.0;         // rad/s
  double gravity = kStandardGravity;
  std::uint64_t seed = 1;

  void validate() const;
};

struct GaitTruth {
  std::vector<double> t;
  std::vector<Vec3> p;
  std::vector<Vec3> v;
  std::vector<Quat> q;
  std::vector<bool> stance;
  /// Foot position at the end of each stride.
  std::vector<Vec3> stride_end;
};

struct GaitData {
  std::vector<ins::ImuSample> imu;
  GaitTruth truth;
};

/// Samples a smooth gait and derives IMU readings by inverting the discrete
/// mechanization, so noise-free replay from the true initial state
/// reproduces the sampled trajectory to rounding.
GaitData synth_imu_gait(const GaitParams& gp);

// ---- pipeline ---------------------------------------------------------------

struct PipelineConfig {
  ScenarioConfig scenario;
  fusion::FusionConfig fusion;
  msg::NetworkConfig network;
  bool quantize = true;         // packets go through the 16-bit codecs
  double f_imu = 200.0;         // for the centralized audit baseline
  bool keep_trace = false;      // keep the network trace in the result
};

struct RunResult {
  std::uint64_t run = 0;
  int agents = 0;
  int samples = 0;
  /// errors[agent][l]: central estimate minus truth of the agent position.
  std::vector<std::vector<Vec3>> errors;
  /// local_errors[agent][l]: the agent's own dead-reckoned midpoint.
  std::vector<std::vector<Vec3>> local_errors;
  msg::AuditReport audit;
  fusion::FusionStats stats;
  std::vector<msg::TraceEntry> trace;
  std::vector<std::vector<dr::TrackState>> local_tracks;   // per foot, per step
  bool failed = false;
  std::string error;
};

/// One end-to-end run: synthetic steps and ranges, agents dead reckoning,
/// messages over the simulated network, central fusion and corrections.
RunResult run_pipeline(const PipelineConfig& cfg, const TruthTrace& truth, std::uint64_t run);

// ---- metrics -------------------------------------------------------------------

struct MetricsReport {
  int runs = 0;
  int failed_runs = 0;
  std::vector<std::string> failures;
  int agents = 0;
  std::vector<double> distance;       // m
  std::vector<double> time;           // s
  std::vector<double> abs_rmse;       // over agents and runs
  std::vector<double> rel_rmse;       // pairwise differences, averaged over pairs
  std::array<std::vector<double>, 3> correlation;   // per axis, averaged over pairs
  std::vector<double> mobile_rmse;    // agents that move (triangle: the walker)
  double final_abs_rmse = 0.0;
  double audit_ratio = 0.0;
};

/// Accumulates RunResults in the order they are added.
class MetricsAccumulator {
 public:
  MetricsAccumulator(const TruthTrace& truth);
  void add(const RunResult& r);
  MetricsReport report() const;

 private:
  const TruthTrace* truth_;
  int agents_ = 0;
  int samples_ = 0;
  int runs_ = 0;
  int failed_ = 0;
  std::vector<std::string> failures_;
  std::vector<bool> mobile_;
  std::vector<double> sq_abs_, sq_rel_, sq_mobile_;
  // Per pair, per axis, per sample: sums of a, b, a^2, b^2, ab.
  std::vector<std::array<double, 5>> corr_;
  double audit_ratio_ = 0.0;
};

struct InverseSqrtFit {
  double c = 0.0;
  double max_relative_residual = 0.0;
};

/// Least-squares fit y(N) = c / sqrt(N).
InverseSqrtFit fit_inverse_sqrt(const std::vector<int>& n, const std::vector<double>& y);

/// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

// ---- Monte Carlo -----------------------------------------------------------------

struct MonteCarloOptions {
  int runs = 100;
  int threads = 0;   // 0: hardware concurrency
};

MetricsReport run_monte_carlo(const PipelineConfig& cfg, const MonteCarloOptions& opt);

struct SweepReport {
  std::vector<int> n;
  std::vector<double> final_rmse;
  std::vector<MetricsReport> reports;
  InverseSqrtFit fit;
};

SweepReport run_agent_sweep(const PipelineConfig& cfg, const std::vector<int>& n,
                            const MonteCarloOptions& opt);

// ---- report I/O ------------------------------------------------------------------

inline constexpr int kSchemaVersion = 1;

void write_curves_csv(std::ostream& os, const MetricsReport& r);
void write_correlation_csv(std::ostream& os, const MetricsReport& r);
void write_sweep_csv(std::ostream& os, const SweepReport& s);
void write_summary_json(std::ostream& os, const MetricsReport& r, const PipelineConfig& cfg);
void write_sweep_json(std::ostream& os, const SweepReport& s);
void write_run_json(std::ostream& os, const RunResult& r, const PipelineConfig& cfg);
void write_audit_json(std::ostream& os, const msg::AuditReport& a);
/// One JSON object per network event, in event order.
void write_trace_jsonl(std::ostream& os, const std::vector<msg::TraceEntry>& trace);
void write_truth_csv(std::ostream& os, const TruthTrace& t);
void write_trajectory_csv(std::ostream& os, const TruthTrace& t, const RunResult& r);

}  // namespace coopnav::scen
