#include "coopnav/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Eigenvalues>

#include "coopnav/deadreck.hpp"

namespace coopnav::oracle {

namespace {

MatX random_spd(std::mt19937_64& rng, int n, double ridge) {
  std::normal_distribution<double> g(0.0, 1.0);
  MatX A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = g(rng) / std::sqrt(static_cast<double>(n));
  return A * A.transpose() + ridge * MatX::Identity(n, n);
}

MatX chol_lower(const MatX& P) {
  Eigen::LLT<MatX> llt(P);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // Semi-definite prior: fall back to the symmetric square root.
  Eigen::SelfAdjointEigenSolver<MatX> eig(0.5 * (P + P.transpose()));
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace

JointKalmanCase joint_kalman_case(std::mt19937_64& rng, int dim, int z1_dim,
                                  const ConditionFn& condition) {
  if (dim < 1 || z1_dim < 1 || z1_dim > dim) throw InvalidInputError("bad joint Kalman case");
  std::normal_distribution<double> g(0.0, 1.0);
  const MatX P = random_spd(rng, dim, 0.5);
  VecX mu(dim);
  for (int i = 0; i < dim; ++i) mu[i] = g(rng);
  const MatX R = random_spd(rng, z1_dim, 0.2);
  VecX y(z1_dim);
  for (int i = 0; i < z1_dim; ++i) y[i] = mu[i] + 2.0 * g(rng);

  // Full-state Kalman update with H = [I 0].
  const MatX H = MatX::Identity(z1_dim, dim);
  const MatX S = H * P * H.transpose() + R;
  const MatX K = P * H.transpose() * S.ldlt().solve(MatX::Identity(z1_dim, z1_dim));
  const VecX x_kf = mu + K * (y - H * mu);
  const MatX P_kf = P - K * S * K.transpose();

  // Posterior moments of z1 alone, then the marginalization update.
  const MatX P11 = P.topLeftCorner(z1_dim, z1_dim);
  const MatX G = P11 * S.ldlt().solve(MatX::Identity(z1_dim, z1_dim));
  const VecX m1 = mu.head(z1_dim) + G * (y - mu.head(z1_dim));
  const MatX C1 = P11 - G * P11;
  const MatX M1 = C1 + m1 * m1.transpose();
  const fusion::Conditioned c = condition ? condition(mu, P, z1_dim, m1, M1)
                                          : fusion::marginal_condition(mu, P, z1_dim, m1, M1);

  JointKalmanCase out;
  out.dim = dim;
  out.z1_dim = z1_dim;
  out.max_abs_diff = std::max((c.mean - x_kf).cwiseAbs().maxCoeff(),
                              (c.P - P_kf).cwiseAbs().maxCoeff());
  return out;
}

Moments rejection_constraint(const fusion::GlobalEstimate& g, const FootId& a,
                             const FootId& b, const fusion::ConstraintParams& cp,
                             double dt_ab, std::size_t draws, std::uint64_t seed) {
  const int n = g.dim();
  const int oa = g.offset(a), ob = g.offset(b);
  const Vec3 d(1.0, 1.0, cp.gamma_xy / cp.gamma_z);
  const double radius = cp.gamma_xy + cp.v_max * dt_ab;
  const MatX L = chol_lower(g.P);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VecX u(n);
  // Shifted sums keep the two-pass variance numerically tame.
  VecX s1 = VecX::Zero(n);
  MatX s2 = MatX::Zero(n, n);
  Moments m;
  for (std::size_t k = 0; k < draws; ++k) {
    for (int i = 0; i < n; ++i) u[i] = gauss(rng);
    const VecX e = L * u;
    const Vec3 sep = d.cwiseProduct(g.mean.segment<3>(oa) + e.segment<3>(oa) -
                                    g.mean.segment<3>(ob) - e.segment<3>(ob));
    if (sep.norm() > radius) continue;
    s1 += e;
    s2.selfadjointView<Eigen::Lower>().rankUpdate(e);
    ++m.accepted;
  }
  if (m.accepted < 2) throw DegeneracyError("rejection oracle accepted fewer than two draws");
  const double cnt = static_cast<double>(m.accepted);
  const VecX me = s1 / cnt;
  MatX second = s2.selfadjointView<Eigen::Lower>();
  m.mean = g.mean + me;
  m.cov = second / cnt - me * me.transpose();
  return m;
}

fusion::GlobalEstimate random_two_foot_prior(std::mt19937_64& rng,
                                             const fusion::ConstraintParams& cp,
                                             const PriorFamily& family) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  fusion::GlobalEstimate g;
  const FootId fa{0, FootId::kLeft}, fb{0, FootId::kRight};
  g.add_foot(fa, Vec4::Zero(), Mat4::Identity());
  g.add_foot(fb, Vec4::Zero(), Mat4::Identity());

  Vec3 dir(gauss(rng), gauss(rng), 0.3 * gauss(rng));
  dir.normalize();
  const double sep = family.max_separation * cp.gamma_xy * uni(rng);
  const Vec3 xa(4.0 * uni(rng) - 2.0, 4.0 * uni(rng) - 2.0, 0.2 * gauss(rng));
  g.mean.segment<3>(0) = xa;
  g.mean[3] = 0.5 * gauss(rng);
  g.mean.segment<3>(4) = xa - sep * dir;
  g.mean[7] = g.mean[3] + 0.05 * gauss(rng);

  // Isotropic per-foot position spread with a mild random correlation
  // structure across all eight entries.
  const double span = family.sigma_max - family.sigma_min;
  const double sa = family.sigma_min + span * uni(rng);
  const double sb = family.sigma_min + span * uni(rng);
  const double sc = 0.05 + 0.1 * uni(rng);
  MatX C = random_spd(rng, 8, 0.0);
  const VecX dc = C.diagonal().cwiseSqrt().cwiseInverse();
  C = dc.asDiagonal() * C * dc.asDiagonal();
  C = 0.7 * MatX::Identity(8, 8) + 0.3 * C;
  VecX s(8);
  s << sa, sa, sa, sc, sb, sb, sb, sc;
  g.P = s.asDiagonal() * C * s.asDiagonal();
  return g;
}

void gauss_hermite(int n, std::vector<double>& x, std::vector<double>& w) {
  if (n < 1) throw InvalidInputError("Gauss-Hermite order must be >= 1");
  // Golub-Welsch for the probabilists' Hermite recurrence.
  MatX J = MatX::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<MatX> eig(J);
  x.resize(static_cast<std::size_t>(n));
  w.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    x[static_cast<std::size_t>(i)] = eig.eigenvalues()[i];
    const double v = eig.eigenvectors()(0, i);
    w[static_cast<std::size_t>(i)] = v * v;
  }
}

Moments quadrature_range(const Vec3& z1_hat, const Mat3& P_z1, double r_tilde, double gamma,
                         double sigma, int per_axis) {
  std::vector<double> x, w;
  gauss_hermite(per_axis, x, w);
  Eigen::SelfAdjointEigenSolver<Mat3> eig(0.5 * (P_z1 + P_z1.transpose()));
  const Mat3 A = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  double s0 = 0.0;
  Vec3 s1 = Vec3::Zero();
  Mat3 s2 = Mat3::Zero();
  const auto n = static_cast<std::size_t>(per_axis);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        const Vec3 e = A * Vec3(x[i], x[j], x[k]);
        const Vec3 s = z1_hat + e;
        const double wt = w[i] * w[j] * w[k] * fusion::range_likelihood(r_tilde, s.norm(), gamma, sigma);
        s0 += wt;
        s1 += wt * e;
        s2 += wt * e * e.transpose();
      }
  if (!(s0 > 0.0)) throw DegeneracyError("quadrature oracle: zero likelihood mass");
  Moments m;
  const Vec3 me = s1 / s0;
  m.mean = z1_hat + me;
  m.cov = s2 / s0 - me * me.transpose();
  m.accepted = n * n * n;
  return m;
}

std::vector<InfluencePoint> influence_curve(double p_var, const fusion::RangeParams& rp,
                                            double kalman_var, double range,
                                            double max_residual, int points) {
  if (!(p_var > 0.0) || !(kalman_var > 0.0) || points < 2)
    throw InvalidInputError("influence curve needs positive variances and >= 2 points");
  fusion::GlobalEstimate g;
  const FootId a{0, FootId::kLeft}, b{1, FootId::kLeft};
  Mat4 P = Mat4::Zero();
  P.topLeftCorner<3, 3>() = p_var * Mat3::Identity();
  P(3, 3) = 1e-4;
  g.add_foot(a, Vec4::Zero(), P);
  g.add_foot(b, Vec4(range, 0.0, 0.0, 0.0), P);

  std::vector<InfluencePoint> out;
  out.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    InfluencePoint ip;
    ip.residual = -max_residual + 2.0 * max_residual * i / (points - 1);
    fusion::RangeMeasurement m{a, b, std::max(0.0, range + ip.residual), 0.0};
    const auto r = fusion::range_update(g, m, rp);
    ip.robust = (r.estimate.position(b) - r.estimate.position(a)).norm() - range;
    // Linearized Kalman on the range along the x axis.
    const double s = 2.0 * p_var + kalman_var;
    ip.kalman = 2.0 * p_var / s * (m.r_tilde - range);
    out.push_back(ip);
  }
  return out;
}

ConsistencyReport split_filter_consistency(const scen::GaitParams& gait,
                                           const ins::InsConfig& cfg) {
  const scen::GaitData data = scen::synth_imu_gait(gait);
  ins::NavState init;
  init.p = data.truth.p.front();
  init.v = data.truth.v.front();
  init.q = data.truth.q.front();
  const ins::NavCov P0 = ins::StepWiseIns::initial_covariance(cfg);

  // Indefinite filter, recorded at every sample.
  ins::InsConfig indef_cfg = cfg;
  indef_cfg.segment = false;
  ins::StepWiseIns indef(indef_cfg, init, P0);
  std::map<double, std::pair<Vec3, Mat9>> record;
  indef.set_observer([&](const ins::SampleRecord& r) {
    record[r.t] = {r.state->p, *r.cov};
  });
  for (const auto& m : data.imu) indef.push(m);
  indef.finish();

  ins::InsConfig split_cfg = cfg;
  split_cfg.segment = true;
  ins::StepWiseIns split(split_cfg, init, P0);
  std::vector<ins::StepUpdate> steps;
  for (const auto& m : data.imu) {
    auto s = split.push(m);
    steps.insert(steps.end(), s.begin(), s.end());
  }
  auto tail = split.finish();
  steps.insert(steps.end(), tail.begin(), tail.end());

  dr::TrackState track;
  track.x = init.p;
  track.chi = ins::yaw_of(init.q);
  ConsistencyReport rep;
  rep.steps = steps.size();
  for (const auto& u : steps) {
    track = dr::dr_propagate(track, u);
    const auto it = record.find(u.t_step);
    if (it == record.end()) throw LookupError("no indefinite-filter sample at a step instant");
    const Vec3& p = it->second.first;
    const Mat9& Pi = it->second.second;

    ConsistencyRow row;
    row.seq = u.seq;
    row.t = u.t_step;
    const Vec3 dev = track.x - p;
    row.mean_dev = dev.norm();
    row.filter_std = std::sqrt(Pi.diagonal().head<3>().minCoeff());
    for (int i = 0; i < 3; ++i) {
      const double sd = std::sqrt(Pi(i, i));
      row.mean_ratio = std::max(row.mean_ratio, std::abs(dev[i]) / sd);
    }
    // Position block and position-heading column of the 4x4 [x, chi] cov.
    Mat4 Pi4;
    Pi4.topLeftCorner<3, 3>() = Pi.topLeftCorner<3, 3>();
    Pi4.topRightCorner<3, 1>() = Pi.block<3, 1>(ins::kPos, ins::kYaw);
    Pi4.bottomLeftCorner<1, 3>() = Pi4.topRightCorner<3, 1>().transpose();
    Pi4(3, 3) = Pi(ins::kYaw, ins::kYaw);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        if (i == 3 && j == 3) continue;
        const double scale = std::sqrt(Pi4(i, i) * Pi4(j, j));
        if (scale > 0.0)
          row.cov_dev = std::max(row.cov_dev, std::abs(track.P(i, j) - Pi4(i, j)) / scale);
      }
    rep.max_mean_ratio = std::max(rep.max_mean_ratio, row.mean_ratio);
    rep.max_cov_dev = std::max(rep.max_cov_dev, row.cov_dev);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace coopnav::oracle
