#include <Eigen/Cholesky>

#include "coopnav/fusion.hpp"
#include "coopnav/log.hpp"

namespace coopnav::fusion {

bool GlobalEstimate::contains(const FootId& id) const {
  for (const auto& i : ids)
    if (i == id) return true;
  return false;
}

int GlobalEstimate::offset(const FootId& id) const {
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return kFootDim * static_cast<int>(i);
  throw LookupError("unknown foot " + to_string(id));
}

void GlobalEstimate::add_foot(const FootId& id, const Vec4& m, const Mat4& cov) {
  if (id.is_device()) throw InvalidInputError("a device id cannot be tracked as a foot");
  if (contains(id)) throw InvalidInputError("foot already tracked: " + to_string(id));
  if (!all_finite(m) || !all_finite(cov)) throw InvalidInputError("non-finite foot prior");
  const int n = dim();
  ids.push_back(id);
  mean.conservativeResize(n + kFootDim);
  mean.tail<kFootDim>() = m;
  mean[n + 3] = wrap_angle(m[3]);
  MatX grown = MatX::Zero(n + kFootDim, n + kFootDim);
  grown.topLeftCorner(n, n) = P;
  grown.bottomRightCorner<kFootDim, kFootDim>() = 0.5 * (cov + cov.transpose());
  P = std::move(grown);
}

Vec4 GlobalEstimate::foot_mean(const FootId& id) const {
  return mean.segment<kFootDim>(offset(id));
}

Mat4 GlobalEstimate::foot_cov(const FootId& id) const {
  const int o = offset(id);
  return P.block<kFootDim, kFootDim>(o, o);
}

Vec3 GlobalEstimate::position(const FootId& id) const { return mean.segment<3>(offset(id)); }

void GlobalEstimate::validate() const {
  if (mean.size() != dim() || P.rows() != dim() || P.cols() != dim())
    throw InvalidInputError("global estimate dimensions are inconsistent");
  if (!all_finite(mean) || !all_finite(P)) throw InvalidInputError("global estimate is not finite");
}

void ConstraintParams::validate() const {
  if (!(gamma_xy > 0.0) || !(gamma_z > 0.0))
    throw InvalidInputError("constraint gamma_xy and gamma_z must be > 0");
  if (!(eta > 0.0)) throw InvalidInputError("constraint eta must be > 0");
  if (!(v_max >= 0.0)) throw InvalidInputError("constraint v_max must be >= 0");
}

void RangeParams::validate() const {
  if (!(gamma_r > 0.0) || !(sigma_r > 0.0))
    throw InvalidInputError("range gamma_r and sigma_r must be > 0");
  if (!(v_max >= 0.0)) throw InvalidInputError("range v_max must be >= 0");
  lattice.validate();
}

SigmaPoints sigma_points(const Vec3& mean, const Mat3& P, double eta) {
  if (!(eta > 0.0)) throw InvalidInputError("eta must be > 0");
  Mat3 S = 0.5 * (P + P.transpose());
  Eigen::LLT<Mat3> llt(S);
  if (llt.info() != Eigen::Success) {
    S.diagonal().array() += 1e-10;
    llt.compute(S);
    if (llt.info() != Eigen::Success)
      throw DegeneracyError("constraint update: Cholesky of the separation covariance failed");
  }
  const Mat3 L = llt.matrixL();
  const double k = std::sqrt(eta);
  SigmaPoints sp;
  sp.s.col(0) = mean;
  sp.w[0] = 1.0 - 3.0 / eta;
  for (int i = 0; i < 3; ++i) {
    sp.s.col(1 + i) = mean + k * L.col(i);
    sp.s.col(4 + i) = mean - k * L.col(i);
    sp.w[1 + i] = sp.w[4 + i] = 1.0 / (2.0 * eta);
  }
  return sp;
}

namespace {

// Mean and covariance of z1 = [B1 | B2] [x_a; x_b] read straight from the
// joint estimate, without forming the full transformed covariance.
void pair_moments(const GlobalEstimate& g, const FootId& a, const FootId& b, const Vec3& diag,
                  Vec3& z1, Mat3& P1) {
  const int oa = g.offset(a);
  const int ob = g.offset(b);
  const Mat3 D = diag.asDiagonal();
  z1 = D * (g.mean.segment<3>(oa) - g.mean.segment<3>(ob));
  const Mat3 Paa = g.P.block<3, 3>(oa, oa);
  const Mat3 Pbb = g.P.block<3, 3>(ob, ob);
  const Mat3 Pab = g.P.block<3, 3>(oa, ob);
  P1 = D * (Paa + Pbb - Pab - Pab.transpose()) * D;
}

}  // namespace

ConstraintOutcome constraint_update(const GlobalEstimate& g, const FootId& a,
                                    const FootId& b, const ConstraintParams& cp,
                                    double dt_ab) {
  cp.validate();
  if (!(dt_ab >= 0.0) || !std::isfinite(dt_ab))
    throw InvalidInputError("constraint update: dt must be finite and >= 0");
  const Vec3 diag(1.0, 1.0, cp.gamma_xy / cp.gamma_z);
  Vec3 z1;
  Mat3 P1;
  pair_moments(g, a, b, diag, z1, P1);

  ConstraintOutcome out;
  out.radius = cp.gamma_xy + cp.v_max * dt_ab;
  const SigmaPoints sp = sigma_points(z1, P1, cp.eta);

  Eigen::Matrix<double, 3, 7> d;
  for (int i = 0; i < 7; ++i) {
    const Vec3 s = sp.s.col(i);
    const double n = s.norm();
    Vec3 p = s;
    if (n > out.radius) {
      p = (out.radius / n) * s;
      ++out.projected;
    }
    d.col(i) = p - z1;
  }
  if (out.projected == 0) {
    out.estimate = g;
    return out;
  }
  Z1Moments m;
  m.mean = d * sp.w;
  m.second = d * sp.w.asDiagonal() * d.transpose();
  out.estimate = condition_transformed(g, StateTransform::gamma(g, a, b, cp), m);
  return out;
}

RangeOutcome range_update(const GlobalEstimate& g, const RangeMeasurement& m,
                          const RangeParams& rp, double age) {
  if (m.a == m.b) throw InvalidInputError("range update needs two distinct feet");
  if (!std::isfinite(m.r_tilde) || m.r_tilde < 0.0)
    throw InvalidInputError("range must be finite and non-negative");
  if (!(age >= 0.0) || !std::isfinite(age)) throw InvalidInputError("range age must be >= 0");
  Vec3 z1;
  Mat3 P1;
  pair_moments(g, m.a, m.b, Vec3::Ones(), z1, P1);
  const double gamma = rp.gamma_r + rp.v_max * age;

  RangeOutcome out;
  const auto rm = range_moments(z1, P1, m.r_tilde, gamma, rp.sigma_r, rp.lattice);
  if (!rm) {
    log(LogLevel::kWarning, "range " + to_string(m.a) + " - " + to_string(m.b) +
                                " rejected: all sample weights underflow");
    out.estimate = g;
    out.rejected = true;
    return out;
  }
  out.weight_sum = rm->weight_sum;
  out.estimate = condition_transformed(g, StateTransform::one(g, m.a, m.b), rm->moments);
  return out;
}

RangeOutcome aux_update(const GlobalEstimate& g, AuxKind kind, const FootId& a,
                        const AuxDatum& datum, const RangeParams& rp) {
  if (!all_finite(datum.point) || !std::isfinite(datum.r_tilde) || datum.r_tilde < 0.0)
    throw InvalidInputError("auxiliary datum must be finite with a non-negative range");
  const int oa = g.offset(a);

  VecX z1;
  MatX P1;
  std::vector<int> comps;
  double r = 0.0;
  const SampleLattice* lattice = &rp.lattice;
  static const SampleLattice vertical = SampleLattice::cubic(1);
  switch (kind) {
    case AuxKind::kAnchor:
    case AuxKind::kPositionFix:
      comps = {0, 1, 2};
      z1 = g.mean.segment<3>(oa) - datum.point;
      P1 = g.P.block<3, 3>(oa, oa);
      r = kind == AuxKind::kAnchor ? datum.r_tilde : 0.0;
      break;
    case AuxKind::kPressure:
      comps = {2};
      z1 = VecX::Constant(1, g.mean[oa + 2] - datum.point.z());
      P1 = g.P.block(oa + 2, oa + 2, 1, 1);
      lattice = &vertical;
      break;
  }

  RangeOutcome out;
  const auto rm = range_moments(z1, P1, r, rp.gamma_r, rp.sigma_r, *lattice);
  if (!rm) {
    log(LogLevel::kWarning, "auxiliary update for " + to_string(a) + " rejected");
    out.estimate = g;
    out.rejected = true;
    return out;
  }
  out.weight_sum = rm->weight_sum;
  out.estimate = condition_transformed(g, StateTransform::select(g, a, comps), rm->moments);
  return out;
}

void propagate_foot(GlobalEstimate& g, const FootId& id, const ins::StepUpdate& u) {
  const int o = g.offset(id);
  const double chi = g.mean[o + 3];
  const Mat4 F = dr::step_jacobian(chi, u.dp);
  const Mat4 Q = dr::step_noise(chi, u);

  g.mean.segment<3>(o) += dr::heading_rotation(chi) * u.dp;
  g.mean[o + 3] = wrap_angle(chi + u.dpsi);

  g.P.middleRows<kFootDim>(o) = (F * g.P.middleRows<kFootDim>(o)).eval();
  g.P.middleCols<kFootDim>(o) = (g.P.middleCols<kFootDim>(o) * F.transpose()).eval();
  g.P.block<kFootDim, kFootDim>(o, o) += Q;
  Mat4 blk = g.P.block<kFootDim, kFootDim>(o, o);
  symmetrize(blk);
  g.P.block<kFootDim, kFootDim>(o, o) = blk;
  // Keep the strips exact transposes of each other.
  g.P.middleCols<kFootDim>(o) = g.P.middleRows<kFootDim>(o).transpose();
}

}  // namespace coopnav::fusion
