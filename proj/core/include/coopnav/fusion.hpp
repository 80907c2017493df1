#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "coopnav/common.hpp"
#include "coopnav/deadreck.hpp"

/// Central estimation over the stacked [x, chi] state of every tracked foot.
namespace coopnav::fusion {

inline constexpr int kFootDim = 4;

/// Stacked per-foot [x, chi] means with the full joint covariance.
struct GlobalEstimate {
  std::vector<FootId> ids;
  VecX mean;
  MatX P;

  int size() const { return static_cast<int>(ids.size()); }
  int dim() const { return kFootDim * size(); }
  bool contains(const FootId& id) const;
  /// Offset of the foot's 4-block in mean/P. Throws LookupError.
  int offset(const FootId& id) const;

  /// Appends a foot, uncorrelated with the feet already present.
  void add_foot(const FootId& id, const Vec4& mean, const Mat4& cov);

  Vec4 foot_mean(const FootId& id) const;
  Mat4 foot_cov(const FootId& id) const;
  Vec3 position(const FootId& id) const;

  /// Throws InvalidInputError on a dimension mismatch or non-finite entries.
  void validate() const;
};

struct ConstraintParams {
  double gamma_xy = 1.0;   // m
  double gamma_z = 0.5;    // m
  double eta = 3.0;
  double v_max = 3.0;      // m/s

  void validate() const;
};

/// Standard-normal abscissas with precomputed prior weights. Columns of `u`
/// are points; weights sum to one.
struct SampleLattice {
  MatX u;
  VecX w;

  int dim() const { return static_cast<int>(u.rows()); }
  int points() const { return static_cast<int>(u.cols()); }

  /// Centered cubic lattice with `per_axis` points per axis over +-span,
  /// weights proportional to exp(-|u|^2/2), abscissas rescaled per axis so
  /// that the weighted second moment is the identity.
  static SampleLattice cubic(int dim, int per_axis = 9, double span = 3.0);

  void validate() const;
};

struct RangeParams {
  double gamma_r = 2.0;   // m
  double sigma_r = 0.5;   // m, Cauchy scale
  double v_max = 3.0;     // m/s
  SampleLattice lattice = SampleLattice::cubic(3);

  void validate() const;
};

/// A range between two feet, or between a foot and a device (FootId with
/// side kDevice, resolved by the fusion center).
struct RangeMeasurement {
  FootId a;
  FootId b;
  double r_tilde = 0.0;   // m
  double t = 0.0;         // s
};

struct Conditioned {
  VecX mean;
  MatX P;
};

/// Conditions a joint Gaussian over z = [z1, z2] on new first and second
/// (non-central) moments of the leading z1_dim entries. Throws
/// DegeneracyError when P_z1 is ill-conditioned beyond 1e12.
Conditioned marginal_condition(const VecX& mean_z, const MatX& P_z, int z1_dim,
                               const VecX& cond_mean_z1, const MatX& cond_second_moment_z1);

/// z = T x where T = (B + I) Pi: the selected coordinates are permuted to the
/// front and mixed by the small block B; all other coordinates keep their
/// relative order.
class StateTransform {
 public:
  enum class Kind { kGamma, kOne, kSelect };

  /// z1 = D_gamma (x_a - x_b), z1 = (x_a - x_b) for kOne.
  static StateTransform pair(const GlobalEstimate& g, const FootId& a, const FootId& b,
                             const Vec3& gamma_diag);
  static StateTransform gamma(const GlobalEstimate& g, const FootId& a, const FootId& b,
                              const ConstraintParams& cp);
  static StateTransform one(const GlobalEstimate& g, const FootId& a, const FootId& b);
  /// z1 = the listed components (0..3 of the foot block) of foot a.
  static StateTransform select(const GlobalEstimate& g, const FootId& a,
                               const std::vector<int>& components);

  Kind kind() const { return kind_; }
  int dim() const { return m_; }
  /// Dimension of z1.
  int z1_dim() const { return z1_dim_; }

  VecX apply(const VecX& x) const;
  MatX apply_cov(const MatX& P) const;
  VecX apply_inverse(const VecX& z) const;
  MatX apply_inverse_cov(const MatX& Pz) const;

  /// Dense T and T^-1, for tests and diagnostics.
  MatX dense() const;
  MatX dense_inverse() const;

 private:
  StateTransform() = default;

  Kind kind_ = Kind::kSelect;
  int m_ = 0;
  int z1_dim_ = 0;
  std::vector<int> lead_;   // original indices moved to the front, in z order
  std::vector<int> rest_;   // remaining indices in original order
  MatX B_;                  // mixes the lead block
  MatX B_inv_;
};

/// Moments of z1 relative to its prior mean: E[z1 - z1_hat] and
/// E[(z1 - z1_hat)(z1 - z1_hat)^T].
struct Z1Moments {
  VecX mean;
  MatX second;
};

/// Applies T, conditions on the supplied z1 moments and transforms back.
/// The marginalization runs on coordinates centered at the prior mean.
GlobalEstimate condition_transformed(const GlobalEstimate& g, const StateTransform& T,
                                     const Z1Moments& moments);

/// Sigma points of the constraint update for a 3-D prior: columns 0..6 and weights.
struct SigmaPoints {
  Eigen::Matrix<double, 3, 7> s;
  Eigen::Matrix<double, 7, 1> w;
};
SigmaPoints sigma_points(const Vec3& mean, const Mat3& P, double eta);

struct ConstraintOutcome {
  GlobalEstimate estimate;
  int projected = 0;   // sigma points that fell outside the ball
  double radius = 0.0;
};

/// Separation constraint between two feet of one agent. dt_ab is the time
/// between the two feet's latest updates.
ConstraintOutcome constraint_update(const GlobalEstimate& g, const FootId& a,
                                    const FootId& b, const ConstraintParams& cp,
                                    double dt_ab);

/// The conditional z1 moments of the robust range update for a Gaussian prior
/// N(z1_hat, P_z1) and a range r_tilde with half-width gamma. Returns nullopt
/// when every weight underflows.
struct RangeMoments {
  Z1Moments moments;
  double weight_sum = 0.0;
};
std::optional<RangeMoments> range_moments(const VecX& z1_hat, const MatX& P_z1,
                                          double r_tilde, double gamma, double sigma,
                                          const SampleLattice& lattice);

/// Cauchy-uniform range likelihood up to a constant.
double range_likelihood(double r_tilde, double norm_s, double gamma, double sigma);

struct RangeOutcome {
  GlobalEstimate estimate;
  bool rejected = false;
  double weight_sum = 0.0;
};

/// Range update between two tracked feet. age is the combined staleness (s)
/// of the two feet relative to the measurement; gamma_r grows by v_max * age.
RangeOutcome range_update(const GlobalEstimate& g, const RangeMeasurement& m,
                          const RangeParams& rp, double age = 0.0);

enum class AuxKind { kAnchor, kPositionFix, kPressure };

/// Datum for auxiliary updates. kAnchor: range r_tilde to the fixed point.
/// kPositionFix: zero range to the fixed point. kPressure: height point.z()
/// from a barometric or similar vertical reference.
struct AuxDatum {
  Vec3 point = Vec3::Zero();
  double r_tilde = 0.0;
};

RangeOutcome aux_update(const GlobalEstimate& g, AuxKind kind, const FootId& a,
                        const AuxDatum& datum, const RangeParams& rp);

/// Dead-reckoning propagation of one foot block inside the joint estimate;
/// cross-covariances with other feet go through the same Jacobian.
void propagate_foot(GlobalEstimate& g, const FootId& id, const ins::StepUpdate& u);

/// Smallest eigenvalue of the symmetric part of P.
double min_eigenvalue(const MatX& P);

}  // namespace coopnav::fusion
