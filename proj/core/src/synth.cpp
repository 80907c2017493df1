#include <cmath>
#include <random>

#include "coopnav/deadreck.hpp"
#include "coopnav/scenarios.hpp"

namespace coopnav::scen {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t run, std::uint64_t stream) {
  // splitmix64 over the three words.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ run) ^ (stream * 0x632be59bd9b4e019ULL));
}

std::vector<std::vector<ins::StepUpdate>> synth_step_updates(const TruthTrace& truth,
                                                             std::uint64_t seed) {
  const auto& nz = truth.cfg.noise;
  std::vector<std::vector<ins::StepUpdate>> out;
  out.reserve(truth.feet.size());
  for (std::size_t fi = 0; fi < truth.feet.size(); ++fi) {
    const FootTruth& f = truth.feet[fi];
    std::mt19937_64 rng(derive_seed(seed, fi, 0));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<ins::StepUpdate> steps;
    steps.reserve(f.x.size());
    for (std::size_t k = 1; k < f.x.size(); ++k) {
      ins::StepUpdate u;
      u.seq = static_cast<std::uint32_t>(k);
      u.t_step = f.t[k];
      u.dp = dr::heading_rotation(f.chi[k - 1]).transpose() * (f.x[k] - f.x[k - 1]);
      u.dpsi = wrap_angle(f.chi[k] - f.chi[k - 1]);
      if (!f.stationary) {
        for (int i = 0; i < 3; ++i) u.dp[i] += nz.sigma_dp * gauss(rng);
        u.dpsi += nz.sigma_dpsi * gauss(rng);
        u.P_p = Mat3::Identity() * (nz.sigma_dp * nz.sigma_dp);
        u.P_psipsi = nz.sigma_dpsi * nz.sigma_dpsi;
      }
      steps.push_back(u);
    }
    out.push_back(std::move(steps));
  }
  return out;
}

std::vector<TimedRange> synth_ranges(const TruthTrace& truth, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, 0, 1));
  const double scale = truth.cfg.noise.range_scale;
  std::vector<TimedRange> out;
  out.reserve(truth.ranges.size());
  for (const auto& r : truth.ranges) {
    double noise = 0.0;
    if (scale > 0.0) noise = std::cauchy_distribution<double>(0.0, scale)(rng);
    TimedRange tr;
    tr.truth = r.range;
    tr.m.a = FootId::device(r.slot.a);
    tr.m.b = FootId::device(r.slot.b);
    tr.m.t = r.slot.t;
    tr.m.r_tilde = std::max(0.0, r.range + noise);
    out.push_back(tr);
  }
  return out;
}

}  // namespace coopnav::scen
