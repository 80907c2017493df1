#include <algorithm>
#include <cmath>
#include <set>

#include "coopnav/scenarios.hpp"

namespace coopnav::scen {

MetricsAccumulator::MetricsAccumulator(const TruthTrace& truth)
    : truth_(&truth), agents_(truth.cfg.agents), samples_(truth.cfg.total_steps() + 1) {
  mobile_.assign(static_cast<std::size_t>(agents_), false);
  for (const auto& f : truth.feet)
    if (!f.stationary) mobile_[f.id.agent] = true;
  const auto S = static_cast<std::size_t>(samples_);
  sq_abs_.assign(S, 0.0);
  sq_rel_.assign(S, 0.0);
  sq_mobile_.assign(S, 0.0);
  const auto pairs = static_cast<std::size_t>(agents_ * (agents_ - 1) / 2);
  corr_.assign(pairs * 3 * S, {0.0, 0.0, 0.0, 0.0, 0.0});
}

void MetricsAccumulator::add(const RunResult& r) {
  if (r.failed) {
    ++failed_;
    failures_.push_back("run " + std::to_string(r.run) + ": " + r.error);
    return;
  }
  if (r.agents != agents_ || r.samples != samples_)
    throw InvalidInputError("run result does not match the scenario");
  ++runs_;
  const auto S = static_cast<std::size_t>(samples_);
  for (std::size_t l = 0; l < S; ++l) {
    std::size_t p = 0;
    for (int i = 0; i < agents_; ++i) {
      const Vec3& ei = r.errors[static_cast<std::size_t>(i)][l];
      sq_abs_[l] += ei.squaredNorm();
      if (mobile_[static_cast<std::size_t>(i)]) sq_mobile_[l] += ei.squaredNorm();
      for (int j = i + 1; j < agents_; ++j, ++p) {
        const Vec3& ej = r.errors[static_cast<std::size_t>(j)][l];
        sq_rel_[l] += (ei - ej).squaredNorm();
        for (int k = 0; k < 3; ++k) {
          auto& c = corr_[(p * 3 + static_cast<std::size_t>(k)) * S + l];
          c[0] += ei[k];
          c[1] += ej[k];
          c[2] += ei[k] * ei[k];
          c[3] += ej[k] * ej[k];
          c[4] += ei[k] * ej[k];
        }
      }
    }
  }
  audit_ratio_ += r.audit.ratio;
}

MetricsReport MetricsAccumulator::report() const {
  MetricsReport m;
  m.runs = runs_;
  m.failed_runs = failed_;
  m.failures = failures_;
  m.agents = agents_;
  const auto S = static_cast<std::size_t>(samples_);
  const double n = runs_;
  const int pairs = agents_ * (agents_ - 1) / 2;
  const auto mobile = std::count(mobile_.begin(), mobile_.end(), true);
  for (std::size_t l = 0; l < S; ++l) {
    m.distance.push_back(static_cast<double>(l) * truth_->cfg.step_length);
    m.time.push_back(truth_->sample_time(static_cast<int>(l)));
    m.abs_rmse.push_back(runs_ ? std::sqrt(sq_abs_[l] / (n * agents_)) : 0.0);
    m.rel_rmse.push_back(runs_ && pairs ? std::sqrt(sq_rel_[l] / (n * pairs)) : 0.0);
    m.mobile_rmse.push_back(runs_ && mobile ? std::sqrt(sq_mobile_[l] / (n * mobile)) : 0.0);
    for (int k = 0; k < 3; ++k) {
      double acc = 0.0;
      for (int p = 0; p < pairs; ++p) {
        const auto& c = corr_[(static_cast<std::size_t>(p) * 3 + static_cast<std::size_t>(k)) * S + l];
        const double va = c[2] - c[0] * c[0] / n;
        const double vb = c[3] - c[1] * c[1] / n;
        const double cov = c[4] - c[0] * c[1] / n;
        const double den = std::sqrt(va * vb);
        // Undefined (zero spread) counts as uncorrelated.
        acc += den > 1e-300 ? std::clamp(cov / den, -1.0, 1.0) : 0.0;
      }
      m.correlation[static_cast<std::size_t>(k)].push_back(pairs ? acc / pairs : 0.0);
    }
  }
  m.final_abs_rmse = m.abs_rmse.empty() ? 0.0 : m.abs_rmse.back();
  m.audit_ratio = runs_ ? audit_ratio_ / n : 0.0;
  return m;
}

InverseSqrtFit fit_inverse_sqrt(const std::vector<int>& n, const std::vector<double>& y) {
  if (n.size() != y.size()) throw InvalidInputError("fit needs one value per agent count");
  if (std::set<int>(n.begin(), n.end()).size() < 2)
    throw InvalidInputError("fit needs at least two distinct agent counts");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] < 1 || !std::isfinite(y[i])) throw InvalidInputError("fit inputs must be positive");
    num += y[i] / std::sqrt(static_cast<double>(n[i]));
    den += 1.0 / n[i];
  }
  InverseSqrtFit f;
  f.c = num / den;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double model = f.c / std::sqrt(static_cast<double>(n[i]));
    f.max_relative_residual = std::max(f.max_relative_residual, std::abs(y[i] - model) / model);
  }
  return f;
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInputError("slope needs >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) throw InvalidInputError("slope needs distinct abscissas");
  return sxy / sxx;
}

}  // namespace coopnav::scen
