#include <algorithm>

#include "coopnav/ins.hpp"

namespace coopnav::ins {

StepSegmenter::StepSegmenter(SegmenterConfig cfg, ResetPolicy policy, double cov_floor)
    : cfg_(cfg), policy_(policy), cov_floor_(cov_floor) {
  cfg_.validate();
}

std::optional<StepUpdate> StepSegmenter::process(bool stationary, NavState& s, NavCov& P,
                                                 double t) {
  ++c_p_;
  if (!(P(kVel, kVel) < cfg_.gamma_p && c_p_ > cfg_.c_min)) return std::nullopt;

  // Pending reset: perform it when the stance ends or has lasted too long.
  ++c_d_;
  if (stationary && c_d_ <= cfg_.c_max) return std::nullopt;

  StepUpdate u;
  u.seq = ++seq_;
  u.dp = s.p;
  u.dpsi = yaw_of(s.q);
  u.P_p = P.block<3, 3>(kPos, kPos);
  u.P_ppsi = P.block<3, 1>(kPos, kYaw);
  u.P_psipsi = P(kYaw, kYaw);
  u.t_step = t;

  reset(s, P);
  c_p_ = 0;
  c_d_ = 0;
  return u;
}

void StepSegmenter::reset(NavState& s, NavCov& P) const {
  const double yaw = yaw_of(s.q);
  const Mat3 rz = Eigen::AngleAxisd(-yaw, Vec3::UnitZ()).toRotationMatrix();
  s.q = (Quat(rz) * s.q).normalized();
  s.p.setZero();
  s.v.setZero();

  switch (policy_) {
    case ResetPolicy::kZeroWithFloor:
      P.setZero();
      for (int i = 0; i < 3; ++i) P(kVel + i, kVel + i) = cov_floor_;
      P(kAtt, kAtt) = cov_floor_;
      P(kAtt + 1, kAtt + 1) = cov_floor_;
      break;
    case ResetPolicy::kDecoupled: {
      P.block<3, 9>(kPos, 0).setZero();
      P.block<9, 3>(0, kPos).setZero();
      P.row(kYaw).setZero();
      P.col(kYaw).setZero();
      Eigen::Matrix<double, 6, 6> G = Eigen::Matrix<double, 6, 6>::Zero();
      G.topLeftCorner<3, 3>() = rz;
      G.bottomRightCorner<3, 3>() = rz;
      const Eigen::Matrix<double, 6, 6> sub = P.block<6, 6>(kVel, kVel);
      P.block<6, 6>(kVel, kVel) = G * sub * G.transpose();
      symmetrize(P);
      break;
    }
  }
}

NavCov StepWiseIns::initial_covariance(const InsConfig& cfg) {
  NavCov P = NavCov::Zero();
  const double vv = cfg.init_vel_std * cfg.init_vel_std;
  const double tt = cfg.init_tilt_std * cfg.init_tilt_std;
  for (int i = 0; i < 3; ++i) P(kVel + i, kVel + i) = vv;
  P(kAtt, kAtt) = tt;
  P(kAtt + 1, kAtt + 1) = tt;
  return P;
}

StepWiseIns::StepWiseIns(InsConfig cfg)
    : cfg_(cfg), segmenter_(cfg.segmenter, cfg.reset_policy, cfg.cov_floor) {
  cfg_.validate();
}

StepWiseIns::StepWiseIns(InsConfig cfg, const NavState& initial, const NavCov& initial_cov)
    : StepWiseIns(cfg) {
  state_ = initial;
  cov_ = initial_cov;
  initialized_ = true;
}

std::vector<StepUpdate> StepWiseIns::push(const ImuSample& m) {
  if (!std::isfinite(m.t) || !all_finite(m.f) || !all_finite(m.w))
    throw InvalidInputError("IMU sample has non-finite components");
  if (received_ > 0 && !(m.t > buffer_.back().t))
    throw InvalidInputError("IMU timestamps must be strictly increasing");
  buffer_.push_back(m);
  ++received_;

  const auto w = static_cast<std::size_t>(cfg_.detector.window_len);
  if (!initialized_) {
    if (received_ < w) return {};
    std::vector<ImuSample> first(buffer_.begin(), buffer_.begin() + static_cast<long>(w));
    state_ = NavState{};
    state_.q = coarse_align(first, cfg_.initial_yaw);
    cov_ = initial_covariance(cfg_);
    initialized_ = true;
  }

  std::vector<StepUpdate> out;
  const std::size_t lookahead = w / 2;
  while (received_ >= w && processed_ + lookahead < received_) {
    const std::size_t back = (w - 1) / 2;
    std::size_t begin = processed_ > back ? processed_ - back : 0;
    begin = std::min(begin, received_ - w);
    if (auto u = process_next(begin)) out.push_back(*u);
  }
  return out;
}

std::vector<StepUpdate> StepWiseIns::finish() {
  std::vector<StepUpdate> out;
  const auto w = static_cast<std::size_t>(cfg_.detector.window_len);
  if (!initialized_ || received_ < w) return out;
  while (processed_ < received_) {
    if (auto u = process_next(received_ - w)) out.push_back(*u);
  }
  return out;
}

std::optional<StepUpdate> StepWiseIns::process_next(std::size_t window_begin) {
  const auto w = static_cast<std::size_t>(cfg_.detector.window_len);
  const std::size_t k = processed_;
  const ImuSample& m = buffer_[k - buffer_base_];

  std::vector<ImuSample> window(buffer_.begin() + static_cast<long>(window_begin - buffer_base_),
                                buffer_.begin() + static_cast<long>(window_begin - buffer_base_ + w));
  const DetectionResult det = zupt_detect(window, cfg_.detector);

  std::optional<StepUpdate> step;
  if (k > 0) {
    const double dt = m.t - last_t_;
    const Mat9 Q = process_noise(cfg_.accel_noise, cfg_.gyro_noise, dt);
    cov_ = propagate_error_cov(cov_, state_, m, dt, Q);
    state_ = mechanize(state_, m, dt, cfg_.detector.gravity);
    if (det.stationary) {
      const Mat3 R = Mat3::Identity() * (cfg_.zupt_noise * cfg_.zupt_noise);
      auto z = zupt_update(state_, cov_, R);
      state_ = z.state;
      cov_ = z.cov;
    }
    if (cfg_.segment) step = segmenter_.process(det.stationary, state_, cov_, m.t);
  }
  last_t_ = m.t;
  ++processed_;

  if (observer_) {
    SampleRecord rec{k, m.t, det.stationary, det.statistic, &state_, &cov_};
    observer_(rec);
  }

  // Keep only what the next windows can still reach.
  const std::size_t keep_from = processed_ > w ? processed_ - w : 0;
  while (buffer_base_ < keep_from) {
    buffer_.pop_front();
    ++buffer_base_;
  }
  return step;
}

std::vector<StepUpdate> run_step_wise_ins(std::span<const ImuSample> samples,
                                          const InsConfig& cfg) {
  StepWiseIns ins(cfg);
  std::vector<StepUpdate> out;
  for (const auto& m : samples) {
    auto steps = ins.push(m);
    out.insert(out.end(), steps.begin(), steps.end());
  }
  auto tail = ins.finish();
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

}  // namespace coopnav::ins
