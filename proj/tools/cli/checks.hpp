#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "coopnav/oracles.hpp"

namespace coopnav::cli {

/// One oracle comparison: observed deviation against its pinned tolerance.
/// Informational results are reported but never fail a run.
struct CheckResult {
  std::string name;
  bool passed = false;
  double observed = 0.0;
  double tolerance = 0.0;
  std::string detail;
  bool informational = false;
};

void print_check(std::ostream& os, const CheckResult& r);
bool all_passed(const std::vector<CheckResult>& rs);

/// Marginalization against the full-state Kalman update on random joint
/// Gaussians of dimension 2..max_dim.
CheckResult check_marginalization(int cases, int max_dim, std::uint64_t seed,
                                  const oracle::ConditionFn& condition = {});

struct ConstraintCheckOptions {
  int priors = 100;
  std::size_t draws = 1'000'000;
  std::uint64_t seed = 6;
  oracle::PriorFamily family;
  double mean_tol = 0.05;   // in posterior standard deviations
  double cov_tol = 0.10;    // relative, diagonal entries
};

/// Constraint update against rejection sampling. Returns the mean and the
/// covariance comparison.
std::vector<CheckResult> check_constraint(const fusion::ConstraintParams& cp,
                                          const ConstraintCheckOptions& opt);

struct RangeCheckOptions {
  int priors = 100;
  std::uint64_t seed = 7;
  double sigma_min = 0.2;   // m, prior spread of the ranged difference
  double sigma_max = 1.5;
  int quadrature_nodes = 48;
  double tol = 0.02;
};

/// Range moments against a dense Gauss-Hermite product rule. The mean is
/// compared in posterior standard deviations, the covariance by relative
/// Frobenius norm.
std::vector<CheckResult> check_range(const fusion::RangeParams& rp, const RangeCheckOptions& opt);

/// Shape of the influence curve at a 10 m separation: growth up to about
/// three prior standard deviations, roll-off beyond, and a flat spot near
/// zero residual for the narrow prior.
std::vector<CheckResult> check_influence(const fusion::RangeParams& rp);

/// Split filter (step-wise INS plus dead reckoning) against the indefinite
/// ZUPT-aided filter on a synthetic gait.
std::vector<CheckResult> check_consistency(int strides, std::uint64_t seed,
                                           oracle::ConsistencyReport* report = nullptr);

}  // namespace coopnav::cli
