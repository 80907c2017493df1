#include "coopnav/ins.hpp"

#include <Eigen/Eigenvalues>
#include <fstream>
#include <sstream>
#include <string>

namespace coopnav::ins {

Mat4 StepUpdate::covariance() const {
  Mat4 c = Mat4::Zero();
  c.topLeftCorner<3, 3>() = P_p;
  c.topRightCorner<3, 1>() = P_ppsi;
  c.bottomLeftCorner<1, 3>() = P_ppsi.transpose();
  c(3, 3) = P_psipsi;
  return c;
}

void DetectorConfig::validate() const {
  if (window_len < 2) throw InvalidInputError("detector window_len must be >= 2");
  if (!(gamma_z > 0.0)) throw InvalidInputError("detector gamma_z must be > 0");
  if (!(sigma_f > 0.0) || !(sigma_w > 0.0))
    throw InvalidInputError("detector sigma_f and sigma_w must be > 0");
}

void SegmenterConfig::validate() const {
  if (!(gamma_p > 0.0)) throw InvalidInputError("segmenter gamma_p must be > 0");
  if (c_min < 0 || c_min >= c_max)
    throw InvalidInputError("segmenter requires 0 <= c_min < c_max");
}

void InsConfig::validate() const {
  detector.validate();
  segmenter.validate();
  if (!(accel_noise >= 0.0) || !(gyro_noise >= 0.0) || !(zupt_noise > 0.0))
    throw InvalidInputError("ins noise parameters must be non-negative (zupt_noise > 0)");
}

Quat rotation_vector_to_quat(const Vec3& rv) {
  const double angle = rv.norm();
  if (angle < 1e-12) {
    // Second-order series keeps the small-angle case exact to rounding.
    Quat q(1.0 - angle * angle / 8.0, 0.5 * rv.x(), 0.5 * rv.y(), 0.5 * rv.z());
    return q.normalized();
  }
  return Quat(Eigen::AngleAxisd(angle, rv / angle));
}

double yaw_of(const Quat& q) {
  const Mat3 r = q.toRotationMatrix();
  return std::atan2(r(1, 0), r(0, 0));
}

Quat coarse_align(std::span<const ImuSample> samples, double yaw) {
  if (samples.empty()) throw InvalidInputError("coarse_align needs at least one sample");
  Vec3 f = Vec3::Zero();
  for (const auto& s : samples) f += s.f;
  f /= static_cast<double>(samples.size());
  const double roll = std::atan2(f.y(), f.z());
  const double pitch = std::atan2(-f.x(), std::hypot(f.y(), f.z()));
  return Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
              Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
              Eigen::AngleAxisd(roll, Vec3::UnitX()));
}

namespace {

void check_sample(const ImuSample& m) {
  if (!std::isfinite(m.t) || !all_finite(m.f) || !all_finite(m.w))
    throw InvalidInputError("IMU sample has non-finite components");
}

}  // namespace

NavState mechanize(const NavState& s, const ImuSample& m, double dt, double gravity) {
  check_sample(m);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInputError("mechanize requires dt > 0");
  if (!all_finite(s.p) || !all_finite(s.v) || !all_finite(s.q.coeffs()))
    throw InvalidInputError("navigation state has non-finite components");

  NavState out;
  out.p = s.p + s.v * dt;
  out.v = s.v + (s.q * m.f - Vec3(0.0, 0.0, gravity)) * dt;
  out.q = (s.q * rotation_vector_to_quat(m.w * dt)).normalized();
  return out;
}

Mat9 error_transition(const NavState& s, const ImuSample& m, double dt) {
  Mat9 F = Mat9::Identity();
  F.block<3, 3>(kPos, kVel) = Mat3::Identity() * dt;
  F.block<3, 3>(kVel, kAtt) = -skew(s.q * m.f) * dt;
  return F;
}

Mat9 process_noise(double accel_std, double gyro_std, double dt) {
  Mat9 Q = Mat9::Zero();
  const double qa = accel_std * accel_std * dt * dt;
  const double qg = gyro_std * gyro_std * dt * dt;
  for (int i = 0; i < 3; ++i) {
    Q(kVel + i, kVel + i) = qa;
    Q(kAtt + i, kAtt + i) = qg;
  }
  return Q;
}

NavCov propagate_error_cov(const NavCov& P, const NavState& s, const ImuSample& m,
                           double dt, const Mat9& Q) {
  check_sample(m);
  if (!all_finite(P) || !all_finite(Q)) throw InvalidInputError("non-finite covariance");
  const Mat9 F = error_transition(s, m, dt);
  NavCov out = F * P * F.transpose() + Q;
  symmetrize(out);
  return out;
}

DetectionResult zupt_detect(std::span<const ImuSample> window, const DetectorConfig& cfg) {
  if (static_cast<int>(window.size()) != cfg.window_len)
    throw InvalidInputError("zupt_detect window length differs from window_len");
  Vec3 mean_f = Vec3::Zero();
  for (const auto& s : window) {
    check_sample(s);
    mean_f += s.f;
  }
  mean_f /= static_cast<double>(window.size());
  const double n = mean_f.norm();
  const Vec3 g_dir = n > 0.0 ? Vec3(mean_f / n) : Vec3::UnitZ();

  const double inv_f = 1.0 / (cfg.sigma_f * cfg.sigma_f);
  const double inv_w = 1.0 / (cfg.sigma_w * cfg.sigma_w);
  double z = 0.0;
  for (const auto& s : window) {
    z += (s.f - cfg.gravity * g_dir).squaredNorm() * inv_f + s.w.squaredNorm() * inv_w;
  }
  z /= static_cast<double>(window.size());
  return {z < cfg.gamma_z, z};
}

ZuptResult zupt_update(const NavState& s, const NavCov& P, const Mat3& R) {
  if (!all_finite(P) || !all_finite(R) || !all_finite(s.v))
    throw InvalidInputError("zupt_update inputs must be finite");

  Mat3 S = P.block<3, 3>(kVel, kVel) + R;
  symmetrize(S);
  S.diagonal().array() += 1e-12;
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(S);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmin > 0.0) || lmax / lmin > 1e12)
    throw DegeneracyError("ZUPT innovation covariance is singular");

  // K = P H^T S^-1 with H = [0 I 0].
  const Eigen::Matrix<double, 9, 3> PHt = P.block<9, 3>(0, kVel);
  const Mat3 S_inv = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                     eig.eigenvectors().transpose();
  const Eigen::Matrix<double, 9, 3> K = PHt * S_inv;
  const Vec9 dx = K * (-s.v);

  Mat9 IKH = Mat9::Identity();
  IKH.block<9, 3>(0, kVel) -= K;
  NavCov Pn = IKH * P * IKH.transpose() + K * R * K.transpose();
  symmetrize(Pn);

  ZuptResult out;
  out.state.p = s.p + dx.segment<3>(kPos);
  out.state.v = s.v + dx.segment<3>(kVel);
  out.state.q = (rotation_vector_to_quat(dx.segment<3>(kAtt)) * s.q).normalized();
  out.cov = Pn;
  return out;
}

std::vector<ImuSample> read_imu_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open IMU log: " + path);
  std::vector<ImuSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string cell;
    double v[7];
    int n = 0;
    bool numeric = true;
    while (n < 7 && std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        v[n] = std::stod(cell, &used);
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
      ++n;
    }
    if (!numeric && lineno == 1) continue;  // header
    if (!numeric || n != 7)
      throw InvalidInputError("malformed IMU log line " + std::to_string(lineno));
    ImuSample s{v[0], Vec3(v[1], v[2], v[3]), Vec3(v[4], v[5], v[6])};
    check_sample(s);
    if (!out.empty() && !(s.t > out.back().t))
      throw InvalidInputError("IMU timestamps must be strictly increasing (line " +
                              std::to_string(lineno) + ")");
    out.push_back(s);
  }
  return out;
}

}  // namespace coopnav::ins
