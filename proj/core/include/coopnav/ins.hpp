#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "coopnav/common.hpp"

/// Per-foot ZUPT-aided strapdown inertial navigation with recursive step
/// segmentation. The navigation frame is z-up; gravity is [0, 0, g] and a
/// foot at rest measures a specific force of +g along the local vertical.
///
/// Error states are ordered [dp, dv, dtheta] where dtheta is a small rotation
/// of the navigation frame: q_true = exp(dtheta) * q_est. Its third component
/// is therefore the heading error.
namespace coopnav::ins {

inline constexpr int kPos = 0;
inline constexpr int kVel = 3;
inline constexpr int kAtt = 6;
inline constexpr int kYaw = 8;

struct ImuSample {
  double t = 0.0;            // s
  Vec3 f = Vec3::Zero();     // specific force, body frame, m/s^2
  Vec3 w = Vec3::Zero();     // angular rate, body frame, rad/s
};

struct NavState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Quat q = Quat::Identity();  // body -> navigation
};

using NavCov = Mat9;

struct DetectorConfig {
  int window_len = 5;
  double gamma_z = 3.0e4;
  double sigma_f = 0.01;    // m/s^2
  double sigma_w = 0.1 * std::numbers::pi / 180.0;  // rad/s
  double gravity = kStandardGravity;

  void validate() const;
};

struct SegmenterConfig {
  double gamma_p = 2.0e-5;  // m^2/s^2, threshold on the first velocity variance
  int c_min = 40;
  int c_max = 120;

  void validate() const;
};

/// How the local filter is restarted once a step has been emitted.
enum class ResetPolicy {
  // Zero the full 9x9 covariance, then re-seed the velocity, roll and pitch
  // variances with `cov_floor`.
  kZeroWithFloor,
  // Zero only the position and heading rows/columns and rotate the retained
  // velocity/attitude block into the new local frame.
  kDecoupled,
};

struct StepUpdate {
  std::uint32_t seq = 0;
  Vec3 dp = Vec3::Zero();           // m, in the local frame of the previous reset
  double dpsi = 0.0;                // rad
  Mat3 P_p = Mat3::Zero();          // m^2
  Vec3 P_ppsi = Vec3::Zero();       // m rad
  double P_psipsi = 0.0;            // rad^2
  double t_step = 0.0;              // s, time of the reset

  /// The 4x4 covariance of [dp, dpsi].
  Mat4 covariance() const;
};

struct DetectionResult {
  bool stationary = false;
  double statistic = 0.0;
};

/// Exact quaternion exponential of a rotation vector.
Quat rotation_vector_to_quat(const Vec3& rv);

/// Yaw (ZYX Euler) of a body->navigation rotation, in (-pi, pi].
double yaw_of(const Quat& q);

/// Roll and pitch from an averaged stationary specific force, with the
/// supplied yaw. Used for coarse self-initialization.
Quat coarse_align(std::span<const ImuSample> samples, double yaw);

/// One step of strapdown integration.
NavState mechanize(const NavState& s, const ImuSample& m, double dt,
                   double gravity = kStandardGravity);

/// First-order error-state transition matrix for one sample.
Mat9 error_transition(const NavState& s, const ImuSample& m, double dt);

/// Diagonal process noise from per-sample accelerometer and gyro noise
/// standard deviations.
Mat9 process_noise(double accel_std, double gyro_std, double dt);

/// P := F P F^T + Q, symmetrized.
NavCov propagate_error_cov(const NavCov& P, const NavState& s, const ImuSample& m,
                           double dt, const Mat9& Q);

/// Zero-velocity test over a window of exactly cfg.window_len samples.
/// The statistic is the SHOE generalized likelihood ratio: accelerometer
/// deviation from a gravity vector aligned with the window mean, plus gyro
/// energy, each normalized by its noise variance and averaged over the window.
DetectionResult zupt_detect(std::span<const ImuSample> window, const DetectorConfig& cfg);

struct ZuptResult {
  NavState state;
  NavCov cov;
};

/// Zero-velocity pseudo-measurement update with H = [0 I 0], followed by
/// immediate feedback of the estimated errors into the navigation state.
ZuptResult zupt_update(const NavState& s, const NavCov& P, const Mat3& R);

/// Sample-by-sample recursive step segmentation. On a reset the state and
/// covariance passed in are restarted in place.
class StepSegmenter {
 public:
  StepSegmenter(SegmenterConfig cfg, ResetPolicy policy, double cov_floor = 1e-6);

  std::optional<StepUpdate> process(bool stationary, NavState& s, NavCov& P, double t);

  int pending_counter() const { return c_p_; }
  int reset_counter() const { return c_d_; }
  std::uint32_t steps() const { return seq_; }

 private:
  void reset(NavState& s, NavCov& P) const;

  SegmenterConfig cfg_;
  ResetPolicy policy_;
  double cov_floor_;
  int c_p_ = 0;
  int c_d_ = 0;
  std::uint32_t seq_ = 0;
};

struct InsConfig {
  DetectorConfig detector;
  SegmenterConfig segmenter;
  ResetPolicy reset_policy = ResetPolicy::kDecoupled;
  double cov_floor = 1e-6;
  double accel_noise = 0.2;                        // m/s^2 per sample, inflated
  double gyro_noise = 5.0 * std::numbers::pi / 180.0;  // rad/s, inflated; see README
  double zupt_noise = 0.01;                        // m/s
  double init_vel_std = 0.01;                      // m/s
  double init_tilt_std = 0.1 * std::numbers::pi / 180.0;  // rad, roll and pitch
  double initial_yaw = 0.0;
  bool segment = true;  // false runs the indefinite (never reset) filter

  void validate() const;
};

/// Per-sample snapshot handed to an observer after the sample is processed.
struct SampleRecord {
  std::size_t index = 0;
  double t = 0.0;
  bool stationary = false;
  double statistic = 0.0;
  const NavState* state = nullptr;
  const NavCov* cov = nullptr;
};

/// Streaming composition of mechanization, covariance propagation, zero-
/// velocity detection, ZUPT and step segmentation. The detector window is
/// centered on the processed sample, so output lags input by window_len / 2
/// samples.
class StepWiseIns {
 public:
  explicit StepWiseIns(InsConfig cfg);
  StepWiseIns(InsConfig cfg, const NavState& initial, const NavCov& initial_cov);

  /// Feeds one sample; returns any steps completed as a result.
  std::vector<StepUpdate> push(const ImuSample& m);
  /// Processes the samples still waiting for a full detector window.
  std::vector<StepUpdate> finish();

  void set_observer(std::function<void(const SampleRecord&)> observer) {
    observer_ = std::move(observer);
  }

  const NavState& state() const { return state_; }
  const NavCov& cov() const { return cov_; }
  std::size_t processed() const { return processed_; }

  /// Initial covariance from the configured velocity and tilt uncertainty.
  static NavCov initial_covariance(const InsConfig& cfg);

 private:
  std::optional<StepUpdate> process_next(std::size_t window_begin);

  InsConfig cfg_;
  bool initialized_ = false;
  NavState state_;
  NavCov cov_ = NavCov::Zero();
  StepSegmenter segmenter_;
  std::deque<ImuSample> buffer_;   // samples[buffer_base_ ...]
  std::size_t buffer_base_ = 0;
  std::size_t received_ = 0;
  std::size_t processed_ = 0;      // samples consumed by the filter
  double last_t_ = 0.0;
  std::function<void(const SampleRecord&)> observer_;
};

/// Runs the step-wise INS over a complete stream. The initial attitude is
/// coarse-aligned from the first detector window with cfg.initial_yaw.
std::vector<StepUpdate> run_step_wise_ins(std::span<const ImuSample> samples,
                                          const InsConfig& cfg);

/// Reads an IMU log (CSV columns t, fx, fy, fz, wx, wy, wz; header optional).
std::vector<ImuSample> read_imu_csv(const std::string& path);

}  // namespace coopnav::ins
