#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "coopnav/fusion.hpp"

namespace coopnav::fusion {

SampleLattice SampleLattice::cubic(int dim, int per_axis, double span) {
  if (dim < 1 || dim > 3) throw InvalidInputError("lattice dimension must be 1..3");
  if (per_axis < 2 || !(span > 0.0)) throw InvalidInputError("lattice needs >= 2 points per axis");
  int n = 1;
  for (int i = 0; i < dim; ++i) n *= per_axis;

  VecX axis(per_axis);
  for (int i = 0; i < per_axis; ++i)
    axis[i] = -span + 2.0 * span * i / static_cast<double>(per_axis - 1);

  SampleLattice l;
  l.u.resize(dim, n);
  l.w.resize(n);
  for (int j = 0; j < n; ++j) {
    int rem = j;
    for (int k = 0; k < dim; ++k) {
      l.u(k, j) = axis[rem % per_axis];
      rem /= per_axis;
    }
    l.w[j] = std::exp(-0.5 * l.u.col(j).squaredNorm());
  }
  l.w /= l.w.sum();

  // The lattice is symmetric, so the weighted mean and cross moments vanish;
  // rescale each axis to a unit second moment.
  for (int k = 0; k < dim; ++k) {
    const double m2 = (l.u.row(k).array().square() * l.w.transpose().array()).sum();
    l.u.row(k) /= std::sqrt(m2);
  }
  return l;
}

void SampleLattice::validate() const {
  if (u.cols() != w.size() || u.cols() == 0 || u.rows() < 1)
    throw InvalidInputError("lattice points and weights disagree");
  if (!(w.array() > 0.0).all()) throw InvalidInputError("lattice weights must be positive");
  if (std::abs(w.sum() - 1.0) > 1e-9) throw InvalidInputError("lattice weights must sum to 1");
  const VecX mean = u * w;
  const MatX second = u * w.asDiagonal() * u.transpose();
  const MatX I = MatX::Identity(u.rows(), u.rows());
  if (mean.cwiseAbs().maxCoeff() > 1e-3 || (second - I).cwiseAbs().maxCoeff() > 1e-3)
    throw InvalidInputError("lattice is not moment-matched to a standard normal");
}

double range_likelihood(double r_tilde, double norm_s, double gamma, double sigma) {
  const double a = (r_tilde - norm_s + gamma) / sigma;
  const double b = (r_tilde - norm_s - gamma) / sigma;
  // atan(a) - atan(b) cancels badly in the tails; use the difference formula.
  const double ab = a * b;
  if (ab > -1.0) return std::atan((a - b) / (1.0 + ab));
  if (ab < -1.0) return std::atan((a - b) / (1.0 + ab)) + std::numbers::pi;
  return 0.5 * std::numbers::pi;
}

std::optional<RangeMoments> range_moments(const VecX& z1_hat, const MatX& P_z1,
                                          double r_tilde, double gamma, double sigma,
                                          const SampleLattice& lattice) {
  const int d = static_cast<int>(z1_hat.size());
  if (lattice.dim() != d || P_z1.rows() != d || P_z1.cols() != d)
    throw InvalidInputError("range update: lattice and prior dimensions differ");
  if (!std::isfinite(r_tilde) || !all_finite(z1_hat) || !all_finite(P_z1))
    throw InvalidInputError("range update: non-finite input");
  if (!(gamma > 0.0) || !(sigma > 0.0))
    throw InvalidInputError("range update: gamma and sigma must be positive");

  MatX S = 0.5 * (P_z1 + P_z1.transpose());
  S.diagonal().array() += 1e-10;
  const Eigen::SelfAdjointEigenSolver<MatX> eig(S);
  if (eig.info() != Eigen::Success) throw DegeneracyError("range update: eigen decomposition failed");
  const VecX lambda = eig.eigenvalues().cwiseMax(0.0);
  const MatX A = eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal();

  const MatX offsets = A * lattice.u;
  VecX w(lattice.points());
  for (int i = 0; i < lattice.points(); ++i) {
    const double n = (z1_hat + offsets.col(i)).norm();
    w[i] = lattice.w[i] * range_likelihood(r_tilde, n, gamma, sigma);
  }
  const double total = w.sum();
  if (!(total >= 1e-300)) return std::nullopt;
  w /= total;

  RangeMoments out;
  out.weight_sum = total;
  out.moments.mean = offsets * w;
  out.moments.second = offsets * w.asDiagonal() * offsets.transpose();
  symmetrize(out.moments.second);
  return out;
}

}  // namespace coopnav::fusion
