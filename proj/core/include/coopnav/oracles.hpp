#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "coopnav/fusion.hpp"
#include "coopnav/ins.hpp"
#include "coopnav/scenarios.hpp"

/// Independent reference computations used by the self-check command and the
/// acceptance tests. Each one solves the same problem as the production code
/// by a different route.
namespace coopnav::oracle {

// ---- marginalization vs a joint Kalman filter --------------------------------

struct JointKalmanCase {
  int dim = 0;
  int z1_dim = 0;
  double max_abs_diff = 0.0;
};

/// Random joint Gaussian of dimension dim, a linear-Gaussian observation of
/// its leading z1_dim entries, solved once by a full Kalman update and once
/// by `condition` (marginal_condition when empty) on the exact posterior
/// moments of z1.
using ConditionFn = std::function<fusion::Conditioned(const VecX&, const MatX&, int,
                                                      const VecX&, const MatX&)>;
JointKalmanCase joint_kalman_case(std::mt19937_64& rng, int dim, int z1_dim,
                                  const ConditionFn& condition = {});

// ---- constraint update vs rejection sampling ------------------------------------

struct Moments {
  VecX mean;
  MatX cov;
  std::size_t accepted = 0;
};

/// Draws from N(g.mean, g.P) and keeps the draws inside the scaled ball.
Moments rejection_constraint(const fusion::GlobalEstimate& g, const FootId& a,
                             const FootId& b, const fusion::ConstraintParams& cp,
                             double dt_ab, std::size_t draws, std::uint64_t seed);

/// Per-foot position standard deviation range and the largest mean
/// separation, in units of gamma_xy.
struct PriorFamily {
  double sigma_min = 0.3;
  double sigma_max = 1.5;
  double max_separation = 2.0;
};

/// Two-foot prior with a mild random correlation over all eight entries.
fusion::GlobalEstimate random_two_foot_prior(std::mt19937_64& rng,
                                             const fusion::ConstraintParams& cp,
                                             const PriorFamily& family = {});

// ---- range update vs dense quadrature --------------------------------------------

/// Posterior mean and covariance of z1 under the range likelihood, by a
/// Gauss-Hermite product rule with `per_axis` nodes in the prior's
/// eigen-coordinates.
Moments quadrature_range(const Vec3& z1_hat, const Mat3& P_z1, double r_tilde, double gamma,
                         double sigma, int per_axis = 48);

/// Gauss-Hermite nodes and weights for the standard normal density.
void gauss_hermite(int n, std::vector<double>& x, std::vector<double>& w);

// ---- influence curve ------------------------------------------------------------------

struct InfluencePoint {
  double residual = 0.0;   // r_tilde - prior range, m
  double robust = 0.0;     // change of the range estimate, robust update
  double kalman = 0.0;     // same for a linearized Kalman update
};

/// Two points on the x axis with isotropic position covariance p_var each,
/// true separation `range`, range residuals swept over [-max, max].
std::vector<InfluencePoint> influence_curve(double p_var, const fusion::RangeParams& rp,
                                            double kalman_var, double range = 10.0,
                                            double max_residual = 10.0, int points = 201);

// ---- split filter vs indefinite filter ------------------------------------------------

struct ConsistencyRow {
  std::uint32_t seq = 0;
  double t = 0.0;
  double mean_dev = 0.0;        // |p_split - p_indef|, m
  double filter_std = 0.0;      // smallest std of the indefinite position, m
  double mean_ratio = 0.0;      // per-axis max of |dev| / std
  double cov_dev = 0.0;         // max |dP_ij| / sqrt(P_ii P_jj) over position and
                                // position-heading entries
};

struct ConsistencyReport {
  std::vector<ConsistencyRow> rows;
  double max_mean_ratio = 0.0;
  double max_cov_dev = 0.0;
  std::size_t steps = 0;
};

/// Runs the step-wise INS with dead reckoning and the indefinite ZUPT-aided
/// filter on the same IMU data and compares them at every step instant.
ConsistencyReport split_filter_consistency(const scen::GaitParams& gait,
                                           const ins::InsConfig& cfg);

}  // namespace coopnav::oracle
