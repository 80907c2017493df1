#pragma once

#include <cstdint>
#include <deque>
#include <optional>

#include "coopnav/common.hpp"
#include "coopnav/ins.hpp"

/// Step-wise dead reckoning of one foot: global position and heading driven
/// by the per-step displacement and heading change from the foot's INS.
namespace coopnav::dr {

struct TrackState {
  Vec3 x = Vec3::Zero();    // m, navigation frame
  double chi = 0.0;         // rad, wrapped to (-pi, pi]
  Mat4 P = Mat4::Zero();    // covariance of [x, chi]
  std::uint32_t seq = 0;    // last applied step index
  double t = 0.0;           // time of the last applied step

  Vec4 mean() const { return Vec4(x.x(), x.y(), x.z(), chi); }
};

/// A fusion-center correction: the difference between the central and the
/// local estimate of one foot at step `seq`, in the navigation frame.
struct Correction {
  std::uint32_t seq = 0;
  Vec3 dx = Vec3::Zero();
  double dchi = 0.0;
  std::optional<Mat4> P;   // replacement covariance, if sent

  bool is_zero() const { return dx.isZero(0.0) && dchi == 0.0 && !P; }
};

/// Planar rotation about the vertical axis.
Mat3 heading_rotation(double chi);

/// Jacobian of [x + R(chi) dp, chi + dpsi] with respect to [x, chi].
Mat4 step_jacobian(double chi, const Vec3& dp);

/// Covariance of the step noise [R(chi) dp, dpsi] in the navigation frame.
Mat4 step_noise(double chi, const ins::StepUpdate& u);

/// Applies one step. Requires u.seq == s.seq + 1.
TrackState dr_propagate(const TrackState& s, const ins::StepUpdate& u);

/// Applies a correction additively. Throws SequencingError when c.seq is
/// ahead of the track. For c.seq == s.seq this makes the local mean equal the
/// central one and replaces the covariance if one was sent. For an older
/// correction only the mean is shifted; DeadReckoner::apply also rotates the
/// displacement walked since c.seq.
TrackState apply_correction(const TrackState& s, const Correction& c);

/// Dead reckoning of one foot with the pose history needed to apply
/// corrections that arrive after further steps were taken locally.
class DeadReckoner {
 public:
  explicit DeadReckoner(TrackState initial);

  const TrackState& state() const { return state_; }

  void propagate(const ins::StepUpdate& u);

  /// Applies a correction for step c.seq <= state().seq. For an older step
  /// the displacement accumulated since then is rotated by c.dchi about the
  /// corrected pose, which equals re-propagating the later steps from the
  /// corrected state. A replacement covariance is only used when the
  /// correction is for the current step.
  void apply(const Correction& c);

  /// Drops history up to and including `seq`.
  void acknowledge(std::uint32_t seq);

  std::size_t history_size() const { return history_.size(); }

 private:
  struct Pose {
    std::uint32_t seq;
    Vec3 x;
    double chi;
  };

  TrackState state_;
  std::deque<Pose> history_;   // one pose per unacknowledged step, oldest first
};

}  // namespace coopnav::dr
