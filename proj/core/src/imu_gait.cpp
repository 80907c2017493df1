#include <cmath>
#include <random>

#include "coopnav/scenarios.hpp"

namespace coopnav::scen {

void GaitParams::validate() const {
  if (!(f_imu > 0.0)) throw InvalidInputError("gait f_imu must be > 0");
  if (strides < 0) throw InvalidInputError("gait strides must be >= 0");
  if (!(stance > 0.0) || !(swing > 0.0) || !(initial_stance > 0.0) || !(final_stance > 0.0))
    throw InvalidInputError("gait phase durations must be > 0");
  if (!(accel_noise >= 0.0) || !(gyro_noise >= 0.0))
    throw InvalidInputError("gait noise must be >= 0");
}

namespace {

struct Pose {
  Vec3 p;
  Quat q;
  bool stance;
};

class GaitProfile {
 public:
  explicit GaitProfile(const GaitParams& gp) : gp_(gp) {
    Vec3 p = gp.initial_position;
    double yaw = gp.initial_yaw;
    double t = gp.initial_stance;
    for (int j = 0; j < gp.strides; ++j) {
      swings_.push_back({t, p, yaw});
      p += Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Vec3(gp.stride_length, 0.0, 0.0);
      yaw += gp.turn_per_stride;
      ends_.push_back(p);
      t += gp.swing + (j + 1 < gp.strides ? gp.stance : gp.final_stance);
    }
    duration_ = gp.strides > 0 ? t : gp.initial_stance + gp.final_stance;
  }

  double duration() const { return duration_; }
  const std::vector<Vec3>& ends() const { return ends_; }

  Pose at(double t) const {
    Vec3 p = gp_.initial_position;
    double yaw = gp_.initial_yaw;
    for (const auto& s : swings_) {
      if (t < s.t0) break;
      const double tau = (t - s.t0) / gp_.swing;
      const Mat3 rz = Eigen::AngleAxisd(s.yaw, Vec3::UnitZ()).toRotationMatrix();
      if (tau >= 1.0) {
        p = s.p0 + rz * Vec3(gp_.stride_length, 0.0, 0.0);
        yaw = s.yaw + gp_.turn_per_stride;
        continue;
      }
      const double two_pi = 2.0 * std::numbers::pi;
      const double c = std::cos(two_pi * tau);
      const double fwd = gp_.stride_length * (tau - std::sin(two_pi * tau) / two_pi);
      const double up = gp_.swing_height * 0.5 * (1.0 - c);
      const double pitch = gp_.pitch_amplitude * std::sin(two_pi * tau) * 0.5 * (1.0 - c);
      const double frac = fwd / gp_.stride_length;
      Pose out;
      out.p = s.p0 + rz * Vec3(fwd, 0.0, up);
      out.q = Quat(Eigen::AngleAxisd(s.yaw + gp_.turn_per_stride * frac, Vec3::UnitZ()) *
                   Eigen::AngleAxisd(pitch, Vec3::UnitY()));
      out.stance = false;
      return out;
    }
    return {p, Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())), true};
  }

 private:
  struct Swing {
    double t0;
    Vec3 p0;
    double yaw;
  };
  GaitParams gp_;
  std::vector<Swing> swings_;
  std::vector<Vec3> ends_;
  double duration_ = 0.0;
};

}  // namespace

GaitData synth_imu_gait(const GaitParams& gp) {
  gp.validate();
  const GaitProfile profile(gp);
  const double dt = 1.0 / gp.f_imu;
  const auto n = static_cast<std::size_t>(std::floor(profile.duration() * gp.f_imu)) + 1;

  GaitData out;
  GaitTruth& tr = out.truth;
  tr.stride_end = profile.ends();
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Pose ps = profile.at(t);
    tr.t.push_back(t);
    tr.p.push_back(ps.p);
    tr.q.push_back(ps.q.normalized());
    tr.stance.push_back(ps.stance);
  }
  // Velocity state consistent with p_{k+1} = p_k + v_k dt.
  tr.v.resize(n, Vec3::Zero());
  for (std::size_t k = 0; k + 1 < n; ++k) tr.v[k] = (tr.p[k + 1] - tr.p[k]) / dt;

  const Vec3 g(0.0, 0.0, gp.gravity);
  std::mt19937_64 rng(gp.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto noisy = [&](Vec3 v, double s) {
    if (s > 0.0)
      for (int i = 0; i < 3; ++i) v[i] += s * gauss(rng);
    return v;
  };

  out.imu.reserve(n);
  out.imu.push_back({0.0, noisy(tr.q[0].conjugate() * g, gp.accel_noise),
                     noisy(Vec3::Zero(), gp.gyro_noise)});
  for (std::size_t k = 0; k + 1 < n; ++k) {
    // Invert v_{k+1} = v_k + (q_k f - g) dt and q_{k+1} = q_k exp(w dt).
    const Vec3 f = tr.q[k].conjugate() * ((tr.v[k + 1] - tr.v[k]) / dt + g);
    const Eigen::AngleAxisd aa(tr.q[k].conjugate() * tr.q[k + 1]);
    const Vec3 w = aa.angle() * aa.axis() / dt;
    out.imu.push_back({tr.t[k + 1], noisy(f, gp.accel_noise), noisy(w, gp.gyro_noise)});
  }
  return out;
}

}  // namespace coopnav::scen
