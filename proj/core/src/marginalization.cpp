#include <Eigen/Eigenvalues>

#include "coopnav/fusion.hpp"

namespace coopnav::fusion {
namespace {

constexpr double kJitter = 1e-10;
constexpr double kMaxCondition = 1e12;

// Inverse of a symmetric PSD block. Jitter is only added when the plain
// decomposition is too ill-conditioned, so well-posed inputs stay exact.
MatX spd_inverse(const MatX& A) {
  auto try_inverse = [](const MatX& S, MatX& out) {
    const Eigen::SelfAdjointEigenSolver<MatX> eig(S);
    if (eig.info() != Eigen::Success) return false;
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    if (!(lmin > 0.0) || lmax / lmin > kMaxCondition) return false;
    out = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
          eig.eigenvectors().transpose();
    return true;
  };
  MatX S = 0.5 * (A + A.transpose());
  MatX inv;
  if (try_inverse(S, inv)) return inv;
  S.diagonal().array() += kJitter;
  if (try_inverse(S, inv)) return inv;
  throw DegeneracyError("marginalization: z1 covariance is singular or ill-conditioned");
}

}  // namespace

Conditioned marginal_condition(const VecX& mean_z, const MatX& P_z, int z1_dim,
                               const VecX& cond_mean_z1, const MatX& cond_second_moment_z1) {
  const int n = static_cast<int>(mean_z.size());
  const int d = z1_dim;
  if (d <= 0 || d > n || P_z.rows() != n || P_z.cols() != n ||
      cond_mean_z1.size() != d || cond_second_moment_z1.rows() != d ||
      cond_second_moment_z1.cols() != d)
    throw InvalidInputError("marginal_condition: inconsistent dimensions");
  if (!all_finite(mean_z) || !all_finite(P_z) || !all_finite(cond_mean_z1) ||
      !all_finite(cond_second_moment_z1))
    throw InvalidInputError("marginal_condition: non-finite input");

  const int r = n - d;
  const VecX z1 = mean_z.head(d);
  const VecX z2 = mean_z.tail(r);
  const MatX P1 = P_z.topLeftCorner(d, d);
  const MatX P12 = P_z.topRightCorner(d, r);
  const MatX P2 = P_z.bottomRightCorner(r, r);
  const VecX& m = cond_mean_z1;
  const MatX& C = cond_second_moment_z1;

  const MatX U = P12.transpose() * spd_inverse(P1);
  const VecX V = z2 - U * z1;
  const VecX z2c = V + U * m;
  const VecX Um = U * m;
  const MatX Z = Um * V.transpose() + V * Um.transpose();

  Conditioned out;
  out.mean.resize(n);
  out.mean.head(d) = m;
  out.mean.tail(r) = z2c;

  out.P.resize(n, n);
  out.P.topLeftCorner(d, d) = C - m * m.transpose();
  out.P.bottomRightCorner(r, r) = P2 - U * P12 + V * V.transpose() + Z +
                                  U * C * U.transpose() - z2c * z2c.transpose();
  out.P.topRightCorner(d, r) = m * V.transpose() + C * U.transpose() - m * z2c.transpose();
  out.P.bottomLeftCorner(r, d) = out.P.topRightCorner(d, r).transpose();
  symmetrize(out.P);
  return out;
}

GlobalEstimate condition_transformed(const GlobalEstimate& g, const StateTransform& T,
                                     const Z1Moments& moments) {
  if (T.dim() != g.dim()) throw InvalidInputError("transform does not match the estimate");
  const VecX z = T.apply(g.mean);
  const MatX Pz = T.apply_cov(g.P);
  const Conditioned c =
      marginal_condition(VecX::Zero(z.size()), Pz, T.z1_dim(), moments.mean, moments.second);

  GlobalEstimate out;
  out.ids = g.ids;
  out.mean = T.apply_inverse(z + c.mean);
  out.P = T.apply_inverse_cov(c.P);
  symmetrize(out.P);
  for (int i = kFootDim - 1; i < out.dim(); i += kFootDim) out.mean[i] = wrap_angle(out.mean[i]);
  return out;
}

double min_eigenvalue(const MatX& P) {
  if (P.size() == 0) return 0.0;
  const MatX S = 0.5 * (P + P.transpose());
  const Eigen::SelfAdjointEigenSolver<MatX> eig(S, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

}  // namespace coopnav::fusion
