#include "coopnav/deadreck.hpp"

#include <string>

namespace coopnav::dr {

Mat3 heading_rotation(double chi) {
  const double c = std::cos(chi), s = std::sin(chi);
  Mat3 r;
  r << c, -s, 0.0,
       s, c, 0.0,
       0.0, 0.0, 1.0;
  return r;
}

Mat4 step_jacobian(double chi, const Vec3& dp) {
  const double c = std::cos(chi), s = std::sin(chi);
  Mat4 F = Mat4::Identity();
  F(0, 3) = -s * dp.x() - c * dp.y();
  F(1, 3) = c * dp.x() - s * dp.y();
  return F;
}

Mat4 step_noise(double chi, const ins::StepUpdate& u) {
  const Mat3 R = heading_rotation(chi);
  Mat4 Q = Mat4::Zero();
  Q.topLeftCorner<3, 3>() = R * u.P_p * R.transpose();
  Q.topRightCorner<3, 1>() = R * u.P_ppsi;
  Q.bottomLeftCorner<1, 3>() = Q.topRightCorner<3, 1>().transpose();
  Q(3, 3) = u.P_psipsi;
  return Q;
}

namespace {

void check_step(const ins::StepUpdate& u) {
  if (!all_finite(u.dp) || !std::isfinite(u.dpsi) || !all_finite(u.P_p) ||
      !all_finite(u.P_ppsi) || !std::isfinite(u.P_psipsi) || !std::isfinite(u.t_step))
    throw InvalidInputError("step update has non-finite components");
}

}  // namespace

TrackState dr_propagate(const TrackState& s, const ins::StepUpdate& u) {
  check_step(u);
  if (u.seq != s.seq + 1)
    throw SequencingError("step " + std::to_string(u.seq) + " does not follow step " +
                          std::to_string(s.seq));
  TrackState out;
  const Mat4 F = step_jacobian(s.chi, u.dp);
  out.x = s.x + heading_rotation(s.chi) * u.dp;
  out.chi = wrap_angle(s.chi + u.dpsi);
  out.P = F * s.P * F.transpose() + step_noise(s.chi, u);
  symmetrize(out.P);
  out.seq = u.seq;
  out.t = u.t_step;
  return out;
}

TrackState apply_correction(const TrackState& s, const Correction& c) {
  if (c.seq > s.seq)
    throw SequencingError("correction for step " + std::to_string(c.seq) +
                          " is ahead of the track at step " + std::to_string(s.seq));
  if (!all_finite(c.dx) || !std::isfinite(c.dchi) || (c.P && !all_finite(*c.P)))
    throw InvalidInputError("correction has non-finite components");
  TrackState out = s;
  out.x += c.dx;
  out.chi = wrap_angle(s.chi + c.dchi);
  if (c.P && c.seq == s.seq) {
    out.P = *c.P;
    symmetrize(out.P);
  }
  return out;
}

DeadReckoner::DeadReckoner(TrackState initial) : state_(std::move(initial)) {
  history_.push_back({state_.seq, state_.x, state_.chi});
}

void DeadReckoner::propagate(const ins::StepUpdate& u) {
  state_ = dr_propagate(state_, u);
  history_.push_back({state_.seq, state_.x, state_.chi});
}

void DeadReckoner::apply(const Correction& c) {
  if (c.seq > state_.seq)
    throw SequencingError("correction for step " + std::to_string(c.seq) +
                          " is ahead of the track at step " + std::to_string(state_.seq));
  auto it = history_.begin();
  while (it != history_.end() && it->seq < c.seq) ++it;
  if (it == history_.end() || it->seq != c.seq)
    throw SequencingError("correction for acknowledged step " + std::to_string(c.seq));

  // Re-anchor every later pose on the corrected one. The displacement walked
  // since step c.seq turns with the heading correction.
  const Vec3 anchor = it->x;
  const Mat3 R = heading_rotation(c.dchi);
  for (auto jt = it; jt != history_.end(); ++jt) {
    jt->x = anchor + c.dx + R * (jt->x - anchor);
    jt->chi = wrap_angle(jt->chi + c.dchi);
  }
  const Pose& now = history_.back();
  TrackState next = state_;
  next.x = now.x;
  next.chi = now.chi;
  if (c.P && c.seq == state_.seq) {
    if (!all_finite(*c.P)) throw InvalidInputError("correction has non-finite covariance");
    next.P = *c.P;
    symmetrize(next.P);
  }
  state_ = next;
}

void DeadReckoner::acknowledge(std::uint32_t seq) {
  // The current pose always stays so that a correction at the head applies.
  while (history_.size() > 1 && history_.front().seq <= seq) history_.pop_front();
}

}  // namespace coopnav::dr
