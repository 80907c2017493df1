#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "coopnav/fusion.hpp"
#include "coopnav/messaging.hpp"
#include "coopnav/scenarios.hpp"

namespace coopnav::testing {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

MatX random_spd(Rng& rng, int n, double scale, double ridge) {
  MatX A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = normal(rng);
  return scale * (A * A.transpose() / n + ridge * MatX::Identity(n, n));
}

void record(PropertyResult& r, bool failed, double measure, const std::string& what) {
  r.worst = std::max(r.worst, measure);
  if (!failed) return;
  if (r.failures == 0) r.first_failure = what;
  ++r.failures;
}

double asymmetry(const MatX& P) { return (P - P.transpose()).cwiseAbs().maxCoeff(); }

ins::StepUpdate random_step(Rng& rng) {
  ins::StepUpdate u;
  u.dp = Vec3(1.0 + 0.1 * normal(rng), 0.05 * normal(rng), 0.01 * normal(rng));
  u.dpsi = 0.02 * normal(rng);
  const MatX C = random_spd(rng, 4, uniform(rng, 1e-6, 1e-2), 0.05);
  u.P_p = C.topLeftCorner<3, 3>();
  u.P_ppsi = C.block<3, 1>(0, 3);
  u.P_psipsi = C(3, 3);
  return u;
}

}  // namespace

PropertyResult prop_covariance_psd(int cases, std::uint64_t seed) {
  PropertyResult r{"joint covariance symmetric PSD after every fusion update"};
  Rng rng(seed);
  fusion::ConstraintParams cp;
  fusion::RangeParams rp;
  for (int c = 0; c < cases; ++c) {
    ++r.cases;
    const int agents = 2 + c % 2;
    fusion::GlobalEstimate g;
    for (int a = 0; a < agents; ++a)
      for (std::uint8_t side : {FootId::kLeft, FootId::kRight}) {
        Vec4 m(10.0 * a + 0.3 * normal(rng), (side == FootId::kLeft ? 0.15 : -0.15) + 0.1 * normal(rng),
               0.05 * normal(rng), 0.1 * normal(rng));
        g.add_foot({static_cast<std::uint16_t>(a), side}, m,
                   random_spd(rng, 4, uniform(rng, 0.01, 1.0), 0.1));
      }
    std::ostringstream ops;
    bool failed = false;
    double measure = 0.0;
    for (int k = 0; k < 8 && !failed; ++k) {
      const auto a = static_cast<std::uint16_t>(rng() % agents);
      const FootId fa{a, static_cast<std::uint8_t>(rng() % 2)};
      try {
        switch (rng() % 4) {
          case 0:
            fusion::propagate_foot(g, fa, random_step(rng));
            ops << "step ";
            break;
          case 1:
            g = fusion::constraint_update(g, fa, fa.other(), cp, uniform(rng, 0.0, 0.5)).estimate;
            ops << "constraint ";
            break;
          case 2: {
            const auto b = static_cast<std::uint16_t>((a + 1 + rng() % (agents - 1)) % agents);
            const FootId fb{b, static_cast<std::uint8_t>(rng() % 2)};
            const double truth = (g.position(fa) - g.position(fb)).norm();
            const double noise = std::tan(std::numbers::pi * (uniform(rng, 0.0, 1.0) - 0.5));
            g = fusion::range_update(g, {fa, fb, std::max(0.0, truth + noise), 0.0}, rp,
                                     uniform(rng, 0.0, 1.0)).estimate;
            ops << "range ";
            break;
          }
          default: {
            const auto kind = static_cast<fusion::AuxKind>(rng() % 3);
            fusion::AuxDatum d;
            d.point = g.position(fa) + Vec3(3.0 * normal(rng), 3.0 * normal(rng), normal(rng));
            d.r_tilde = (d.point - g.position(fa)).norm() + 0.5 * normal(rng);
            d.r_tilde = std::max(0.0, d.r_tilde);
            g = fusion::aux_update(g, kind, fa, d, rp).estimate;
            ops << "aux ";
          }
        }
      } catch (const Error& e) {
        failed = true;
        ops << "threw " << e.what();
        break;
      }
      const double scale = std::max(1.0, g.P.cwiseAbs().maxCoeff());
      const double asym = asymmetry(g.P);
      const double min_eig = fusion::min_eigenvalue(g.P);
      measure = std::max({measure, asym / scale, -min_eig});
      if (asym > 1e-12 * scale || min_eig < -1e-9 || !g.P.allFinite()) failed = true;
    }
    record(r, failed, measure, "case " + std::to_string(c) + ": " + ops.str());
  }
  return r;
}

PropertyResult prop_nav_covariance_psd(int cases, std::uint64_t seed) {
  PropertyResult r{"navigation covariance symmetric PSD through propagate, ZUPT and reset"};
  Rng rng(seed);
  for (int c = 0; c < cases; ++c) {
    ++r.cases;
    ins::NavState s;
    s.q = ins::rotation_vector_to_quat(Vec3(0.1 * normal(rng), 0.1 * normal(rng), normal(rng)));
    s.v = 0.5 * Vec3(normal(rng), normal(rng), normal(rng));
    ins::NavCov P = random_spd(rng, 9, 1e-4, 0.1);
    ins::SegmenterConfig sc;
    sc.gamma_p = 1.0;
    sc.c_min = 1;
    sc.c_max = 3;
    ins::StepSegmenter seg(sc, c % 2 ? ins::ResetPolicy::kDecoupled : ins::ResetPolicy::kZeroWithFloor);
    const Mat9 Q = ins::process_noise(uniform(rng, 0.0, 0.5), uniform(rng, 0.0, 0.1), 0.005);
    bool failed = false;
    double measure = 0.0;
    for (int k = 0; k < 40 && !failed; ++k) {
      ins::ImuSample m;
      m.f = Vec3(normal(rng), normal(rng), 9.81 + normal(rng));
      m.w = Vec3(normal(rng), normal(rng), normal(rng));
      P = ins::propagate_error_cov(P, s, m, 0.005, Q);
      s = ins::mechanize(s, m, 0.005);
      const bool still = rng() % 3 != 0;
      if (still) {
        try {
          auto z = ins::zupt_update(s, P, uniform(rng, 1e-6, 1e-2) * Mat3::Identity());
          s = z.state;
          P = z.cov;
        } catch (const Error&) {
          failed = true;
          break;
        }
      }
      seg.process(still, s, P, 0.005 * k);
      const double min_eig = Eigen::SelfAdjointEigenSolver<Mat9>(P).eigenvalues().minCoeff();
      const double asym = asymmetry(P);
      measure = std::max({measure, asym, -min_eig});
      if (asym > 1e-14 || min_eig < -1e-12 || !P.allFinite()) failed = true;
    }
    record(r, failed, measure, "case " + std::to_string(c));
  }
  return r;
}

PropertyResult prop_quaternion_norm(int cases, std::uint64_t seed) {
  PropertyResult r{"quaternion norm preserved by mechanization and ZUPT feedback"};
  Rng rng(seed);
  for (int c = 0; c < cases; ++c) {
    ++r.cases;
    ins::NavState s;
    s.q = ins::rotation_vector_to_quat(Vec3(normal(rng), normal(rng), normal(rng)));
    ins::NavCov P = random_spd(rng, 9, 1e-3, 0.1);
    double worst = std::abs(s.q.norm() - 1.0);
    const double dt = uniform(rng, 1e-4, 0.02);
    for (int k = 0; k < 200; ++k) {
      ins::ImuSample m;
      m.f = 20.0 * Vec3(normal(rng), normal(rng), normal(rng));
      m.w = 10.0 * Vec3(normal(rng), normal(rng), normal(rng));
      s = ins::mechanize(s, m, dt);
      worst = std::max(worst, std::abs(s.q.norm() - 1.0));
      if (k % 10 == 9) {
        const auto z = ins::zupt_update(s, P, 1e-4 * Mat3::Identity());
        s = z.state;
        worst = std::max(worst, std::abs(s.q.norm() - 1.0));
      }
    }
    record(r, worst > 1e-9, worst, "case " + std::to_string(c));
  }
  return r;
}

PropertyResult prop_flat_likelihood_noop(int cases, std::uint64_t seed) {
  PropertyResult r{"range update with a flat likelihood leaves the estimate unchanged"};
  Rng rng(seed);
  fusion::RangeParams rp;
  rp.gamma_r = 1e5;   // uniform part covers every lattice point
  for (int c = 0; c < cases; ++c) {
    ++r.cases;
    fusion::GlobalEstimate g;
    const FootId a{0, FootId::kLeft}, b{1, FootId::kRight};
    g.add_foot(a, Vec4(normal(rng), normal(rng), 0.1 * normal(rng), 0.0), random_spd(rng, 4, uniform(rng, 0.01, 4.0), 0.2));
    g.add_foot(b, Vec4(10.0 + normal(rng), normal(rng), 0.1 * normal(rng), 0.0), random_spd(rng, 4, uniform(rng, 0.01, 4.0), 0.2));
    const double rt = uniform(rng, 0.0, 30.0);
    const auto out = fusion::range_update(g, {a, b, rt, 0.0}, rp);
    const double scale = std::max(1.0, g.P.cwiseAbs().maxCoeff());
    const double dm = (out.estimate.mean - g.mean).cwiseAbs().maxCoeff() / std::sqrt(scale);
    const double dP = (out.estimate.P - g.P).cwiseAbs().maxCoeff() / scale;
    record(r, out.rejected || dm > 1e-3 || dP > 1e-3, std::max(dm, dP), "case " + std::to_string(c));
  }
  return r;
}

PropertyResult prop_inside_ball_noop(int cases, std::uint64_t seed) {
  PropertyResult r{"constraint update with every sigma point inside the ball is a no-op"};
  Rng rng(seed);
  fusion::ConstraintParams cp;
  for (int c = 0; c < cases; ++c) {
    ++r.cases;
    fusion::GlobalEstimate g;
    const FootId a{0, FootId::kLeft}, b{0, FootId::kRight};
    const Vec3 xa(uniform(rng, -50, 50), uniform(rng, -50, 50), normal(rng));
    Vec3 d(normal(rng), normal(rng), 0.1 * normal(rng));
    d = d.normalized() * uniform(rng, 0.0, 0.3 * cp.gamma_xy);
    const double s = uniform(rng, 1e-3, 0.03);
    g.add_foot(a, Vec4(xa.x(), xa.y(), xa.z(), normal(rng)), random_spd(rng, 4, s * s, 0.2));
    g.add_foot(b, Vec4(xa.x() + d.x(), xa.y() + d.y(), xa.z() + d.z(), normal(rng)),
               random_spd(rng, 4, s * s, 0.2));
    // A third, correlated foot exercises the cross terms.
    fusion::GlobalEstimate h = g;
    h.add_foot({1, FootId::kLeft}, Vec4(10, 0, 0, 0), Mat4::Identity());
    const int n = h.dim();
    MatX L = random_spd(rng, n, 1.0, 0.5).llt().matrixL();
    VecX sd = h.P.diagonal().cwiseSqrt();
    MatX C = L * L.transpose();
    VecX cs = C.diagonal().cwiseSqrt().cwiseInverse();
    const VecX k = sd.cwiseProduct(cs);
    h.P = k.asDiagonal() * C * k.asDiagonal();
    const auto out = fusion::constraint_update(h, a, b, cp, 0.0);
    const double dm = (out.estimate.mean - h.mean).cwiseAbs().maxCoeff();
    const double dP = (out.estimate.P - h.P).cwiseAbs().maxCoeff();
    record(r, out.projected != 0 || dm > 1e-12 || dP > 1e-12, std::max(dm, dP),
           "case " + std::to_string(c) + " projected " + std::to_string(out.projected));
  }
  return r;
}

PropertyResult prop_codec_roundtrip(int cases, std::uint64_t seed) {
  PropertyResult r{"codec round trip within the quantization step"};
  Rng rng(seed);
  const double lin = msg::linear_step(msg::kPositionRange) / 2.0;
  const double ang = msg::linear_step(msg::kAngleRange) / 2.0;
  const double var = msg::variance_relative_step();
  auto log_uniform = [&] { return std::pow(10.0, uniform(rng, -8.0, 2.0)); };
  for (int c = 0; c < cases; ++c) {
    ++r.cases;
    const FootId foot{static_cast<std::uint16_t>(rng() % 1000), static_cast<std::uint8_t>(rng() % 2)};
    ins::StepUpdate u;
    u.seq = static_cast<std::uint32_t>(rng());
    u.dp = Vec3(uniform(rng, -10, 10), uniform(rng, -10, 10), uniform(rng, -10, 10));
    u.dpsi = uniform(rng, -std::numbers::pi, std::numbers::pi);
    u.P_p = Vec3(log_uniform(), log_uniform(), log_uniform()).asDiagonal();
    u.P_psipsi = log_uniform();
    u.t_step = uniform(rng, 0.0, 4e6);

    const auto pkt = msg::encode_step(foot, u);
    const auto bytes = msg::serialize(pkt);
    const auto back = msg::parse_step(bytes);
    const auto v = msg::decode_step(back);
    double e = (v.dp - u.dp).cwiseAbs().maxCoeff() / lin;
    e = std::max(e, std::abs(v.dpsi - u.dpsi) / ang);
    for (int i = 0; i < 3; ++i) e = std::max(e, std::abs(v.P_p(i, i) / u.P_p(i, i) - 1.0) / var);
    e = std::max(e, std::abs(v.P_psipsi / u.P_psipsi - 1.0) / var);
    bool bad = e > 1.0 + 1e-9 || back.foot != foot || back.seq != u.seq || back.values != pkt.values ||
               std::abs(msg::decode_time(back.t_ms) - u.t_step) > 5e-4 || !v.P_ppsi.isZero(0.0);
    // Idempotent after the first quantization.
    bad = bad || msg::encode_step(foot, v).values != pkt.values;

    dr::Correction cor;
    cor.seq = u.seq;
    cor.dx = Vec3(uniform(rng, -10, 10), uniform(rng, -10, 10), uniform(rng, -10, 10));
    cor.dchi = uniform(rng, -std::numbers::pi, std::numbers::pi);
    const auto cp = msg::parse_correction(msg::serialize(msg::encode_correction(foot, cor, u.t_step)));
    const auto cd = msg::decode_correction(cp);
    const double ec = std::max((cd.dx - cor.dx).cwiseAbs().maxCoeff() / lin, std::abs(cd.dchi - cor.dchi) / ang);
    bad = bad || ec > 1.0 + 1e-9 || cd.seq != cor.seq || cd.P.has_value();
    record(r, bad, std::max(e, ec), "case " + std::to_string(c));
  }
  return r;
}

PropertyResult prop_scheduler_fairness(int cases, std::uint64_t seed) {
  PropertyResult r{"ranging schedule: every window of N(N-1)/2 slots covers each pair once"};
  Rng rng(seed);
  for (int c = 0; c < cases; ++c) {
    ++r.cases;
    const int n = 2 + static_cast<int>(rng() % 11);
    const int pairs = n * (n - 1) / 2;
    const double rate = uniform(rng, 0.2, 5.0);
    const double t0 = uniform(rng, 0.0, 100.0);
    const double phase = uniform(rng, 0.0, 0.9 / rate);
    const auto slots = msg::ranging_schedule(n, rate, t0, t0 + (3 * pairs + 0.5) / rate, phase);
    bool bad = slots.size() < static_cast<std::size_t>(3 * pairs);
    double measure = 0.0;
    for (std::size_t s = 0; !bad && s + static_cast<std::size_t>(pairs) <= slots.size(); ++s) {
      std::map<std::pair<int, int>, int> seen;
      for (std::size_t k = s; k < s + static_cast<std::size_t>(pairs); ++k) {
        const auto& sl = slots[k];
        if (sl.a == sl.b || sl.a >= n || sl.b >= n) bad = true;
        ++seen[{std::min(sl.a, sl.b), std::max(sl.a, sl.b)}];
      }
      if (static_cast<int>(seen.size()) != pairs) bad = true;
      for (const auto& [p, k] : seen)
        if (k != 1) bad = true;
    }
    for (std::size_t k = 1; k < slots.size(); ++k) {
      const double gap = std::abs((slots[k].t - slots[k - 1].t) * rate - 1.0);
      measure = std::max(measure, gap);
      if (gap > 1e-9) bad = true;
    }
    record(r, bad, measure, "case " + std::to_string(c) + " n " + std::to_string(n));
  }
  return r;
}

PropertyResult prop_seed_determinism(int cases, std::uint64_t seed) {
  PropertyResult r{"identical seeds give identical runs and network traces"};
  Rng rng(seed);
  for (int c = 0; c < cases; ++c) {
    ++r.cases;
    scen::PipelineConfig cfg;
    cfg.scenario.agents = 2 + static_cast<int>(rng() % 2);
    cfg.scenario.steps = 3 + static_cast<int>(rng() % 8);
    cfg.scenario.seed = rng();
    cfg.network.drop_prob = uniform(rng, 0.0, 0.5);
    cfg.network.latency_jitter = uniform(rng, 0.0, 0.2);
    cfg.network.seed = rng();
    cfg.keep_trace = true;
    const auto run = static_cast<std::uint64_t>(rng() % 100);
    const auto t1 = scen::gen_truth(cfg.scenario);
    const auto t2 = scen::gen_truth(cfg.scenario);
    const auto a = scen::run_pipeline(cfg, t1, run);
    const auto b = scen::run_pipeline(cfg, t2, run);
    bool same = !a.failed && !b.failed && a.errors.size() == b.errors.size() &&
                a.trace.size() == b.trace.size() &&
                a.audit.decentralized_bytes == b.audit.decentralized_bytes;
    for (std::size_t i = 0; same && i < a.errors.size(); ++i)
      for (std::size_t l = 0; same && l < a.errors[i].size(); ++l)
        same = a.errors[i][l] == b.errors[i][l] && a.local_errors[i][l] == b.local_errors[i][l];
    for (std::size_t i = 0; same && i < a.trace.size(); ++i)
      same = a.trace[i].t == b.trace[i].t && a.trace[i].id == b.trace[i].id &&
             a.trace[i].event == b.trace[i].event;
    // A different run index must change the noise.
    const auto d = scen::run_pipeline(cfg, t1, run + 1);
    const bool differs = d.errors.back().back() != a.errors.back().back();
    record(r, !same || !differs, same ? 0.0 : 1.0, "case " + std::to_string(c) + (a.failed ? " " + a.error : ""));
  }
  return r;
}

std::vector<PropertyResult> all_property_suites(std::uint64_t seed) {
  return {prop_covariance_psd(kPropertyCases, seed + 1),
          prop_nav_covariance_psd(kPropertyCases, seed + 2),
          prop_quaternion_norm(kPropertyCases, seed + 3),
          prop_flat_likelihood_noop(kPropertyCases, seed + 4),
          prop_inside_ball_noop(kPropertyCases, seed + 5),
          prop_codec_roundtrip(kPropertyCases, seed + 6),
          prop_scheduler_fairness(kPropertyCases, seed + 7),
          prop_seed_determinism(kPropertyCases, seed + 8)};
}

}  // namespace coopnav::testing
