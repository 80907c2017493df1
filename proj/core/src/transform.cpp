#include <algorithm>

#include "coopnav/fusion.hpp"

namespace coopnav::fusion {
namespace {

std::vector<int> complement(int m, const std::vector<int>& lead) {
  std::vector<bool> used(static_cast<std::size_t>(m), false);
  for (int i : lead) used[static_cast<std::size_t>(i)] = true;
  std::vector<int> rest;
  rest.reserve(static_cast<std::size_t>(m) - lead.size());
  for (int i = 0; i < m; ++i)
    if (!used[static_cast<std::size_t>(i)]) rest.push_back(i);
  return rest;
}

}  // namespace

StateTransform StateTransform::pair(const GlobalEstimate& g, const FootId& a, const FootId& b,
                                    const Vec3& gamma_diag) {
  if (a == b) throw InvalidInputError("transform needs two distinct feet");
  if (!(gamma_diag.array() > 0.0).all() || !all_finite(gamma_diag))
    throw InvalidInputError("transform scaling must be positive");
  const int oa = g.offset(a);
  const int ob = g.offset(b);

  StateTransform t;
  t.m_ = g.dim();
  t.z1_dim_ = 3;
  t.lead_ = {oa, oa + 1, oa + 2, ob, ob + 1, ob + 2};
  t.rest_ = complement(t.m_, t.lead_);

  const Mat3 D = gamma_diag.asDiagonal();
  const Mat3 Dinv = gamma_diag.cwiseInverse().asDiagonal();
  t.B_.resize(6, 6);
  t.B_ << D, -D, D, D;
  // Closed form of the block inverse.
  t.B_inv_.resize(6, 6);
  t.B_inv_ << Dinv, Dinv, -Dinv, Dinv;
  t.B_inv_ *= 0.5;
  return t;
}

StateTransform StateTransform::gamma(const GlobalEstimate& g, const FootId& a,
                                     const FootId& b, const ConstraintParams& cp) {
  cp.validate();
  StateTransform t = pair(g, a, b, Vec3(1.0, 1.0, cp.gamma_xy / cp.gamma_z));
  t.kind_ = Kind::kGamma;
  return t;
}

StateTransform StateTransform::one(const GlobalEstimate& g, const FootId& a, const FootId& b) {
  StateTransform t = pair(g, a, b, Vec3::Ones());
  t.kind_ = Kind::kOne;
  return t;
}

StateTransform StateTransform::select(const GlobalEstimate& g, const FootId& a,
                                      const std::vector<int>& components) {
  if (components.empty() || components.size() > static_cast<std::size_t>(kFootDim))
    throw InvalidInputError("select transform needs 1..4 components");
  const int oa = g.offset(a);
  StateTransform t;
  t.kind_ = Kind::kSelect;
  t.m_ = g.dim();
  t.z1_dim_ = static_cast<int>(components.size());
  for (int c : components) {
    if (c < 0 || c >= kFootDim) throw InvalidInputError("select component out of range");
    if (std::find(t.lead_.begin(), t.lead_.end(), oa + c) != t.lead_.end())
      throw InvalidInputError("select components must be distinct");
    t.lead_.push_back(oa + c);
  }
  t.rest_ = complement(t.m_, t.lead_);
  t.B_ = MatX::Identity(t.z1_dim_, t.z1_dim_);
  t.B_inv_ = t.B_;
  return t;
}

VecX StateTransform::apply(const VecX& x) const {
  if (x.size() != m_) throw InvalidInputError("transform: dimension mismatch");
  const int k = static_cast<int>(lead_.size());
  VecX z(m_);
  z.head(k) = B_ * x(lead_);
  z.tail(m_ - k) = x(rest_);
  return z;
}

MatX StateTransform::apply_cov(const MatX& P) const {
  if (P.rows() != m_ || P.cols() != m_) throw InvalidInputError("transform: dimension mismatch");
  std::vector<int> perm = lead_;
  perm.insert(perm.end(), rest_.begin(), rest_.end());
  const int k = static_cast<int>(lead_.size());
  MatX Pz = P(perm, perm);
  Pz.topRows(k) = (B_ * Pz.topRows(k)).eval();
  Pz.leftCols(k) = (Pz.leftCols(k) * B_.transpose()).eval();
  return Pz;
}

VecX StateTransform::apply_inverse(const VecX& z) const {
  if (z.size() != m_) throw InvalidInputError("transform: dimension mismatch");
  const int k = static_cast<int>(lead_.size());
  VecX x(m_);
  x(lead_) = B_inv_ * z.head(k);
  x(rest_) = z.tail(m_ - k);
  return x;
}

MatX StateTransform::apply_inverse_cov(const MatX& Pz) const {
  if (Pz.rows() != m_ || Pz.cols() != m_) throw InvalidInputError("transform: dimension mismatch");
  const int k = static_cast<int>(lead_.size());
  MatX Q = Pz;
  Q.topRows(k) = (B_inv_ * Q.topRows(k)).eval();
  Q.leftCols(k) = (Q.leftCols(k) * B_inv_.transpose()).eval();
  std::vector<int> perm = lead_;
  perm.insert(perm.end(), rest_.begin(), rest_.end());
  MatX P(m_, m_);
  P(perm, perm) = Q;
  return P;
}

MatX StateTransform::dense() const {
  const int k = static_cast<int>(lead_.size());
  MatX Pi = MatX::Zero(m_, m_);
  for (int i = 0; i < k; ++i) Pi(i, lead_[static_cast<std::size_t>(i)]) = 1.0;
  for (int i = 0; i < m_ - k; ++i) Pi(k + i, rest_[static_cast<std::size_t>(i)]) = 1.0;
  MatX Bd = MatX::Identity(m_, m_);
  Bd.topLeftCorner(k, k) = B_;
  return Bd * Pi;
}

MatX StateTransform::dense_inverse() const {
  const int k = static_cast<int>(lead_.size());
  MatX PiT = MatX::Zero(m_, m_);
  for (int i = 0; i < k; ++i) PiT(lead_[static_cast<std::size_t>(i)], i) = 1.0;
  for (int i = 0; i < m_ - k; ++i) PiT(rest_[static_cast<std::size_t>(i)], k + i) = 1.0;
  MatX Bd = MatX::Identity(m_, m_);
  Bd.topLeftCorner(k, k) = B_inv_;
  return PiT * Bd;
}

}  // namespace coopnav::fusion
