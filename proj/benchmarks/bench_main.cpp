#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "coopnav/deadreck.hpp"
#include "coopnav/fusion.hpp"
#include "coopnav/fusion_center.hpp"
#include "coopnav/ins.hpp"
#include "coopnav/messaging.hpp"
#include "coopnav/scenarios.hpp"

using namespace coopnav;

namespace {

// N agents a few metres apart with a dense, well-conditioned covariance.
fusion::GlobalEstimate estimate(int agents, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  fusion::GlobalEstimate e;
  for (int a = 0; a < agents; ++a)
    for (std::uint8_t s : {FootId::kLeft, FootId::kRight})
      e.add_foot({static_cast<std::uint16_t>(a), s},
                 Vec4(10.0 * a + 0.3 * g(rng), (s == FootId::kLeft ? 0.6 : -0.6), 0.0, 0.0),
                 Mat4::Identity());
  MatX A(e.dim(), e.dim());
  for (int i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
  e.P = 0.05 * A * A.transpose() / e.dim() + 0.2 * MatX::Identity(e.dim(), e.dim());
  return e;
}

void BM_MarginalCondition(benchmark::State& st) {
  const auto e = estimate(static_cast<int>(st.range(0)));
  const int k = 6;
  const VecX m1 = e.mean.head(k).array() + 0.1;
  const MatX P1 = 0.5 * e.P.topLeftCorner(k, k);
  for (auto _ : st) benchmark::DoNotOptimize(fusion::marginal_condition(e.mean, e.P, k, m1, P1));
}
BENCHMARK(BM_MarginalCondition)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void BM_ConstraintUpdate(benchmark::State& st) {
  const auto e = estimate(static_cast<int>(st.range(0)));
  const FootId a{0, FootId::kLeft}, b{0, FootId::kRight};
  const fusion::ConstraintParams cp;
  for (auto _ : st) benchmark::DoNotOptimize(fusion::constraint_update(e, a, b, cp, 0.0));
}
BENCHMARK(BM_ConstraintUpdate)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void BM_RangeUpdate(benchmark::State& st) {
  const auto e = estimate(static_cast<int>(st.range(0)));
  const fusion::RangeMeasurement m{{0, FootId::kLeft}, {1, FootId::kLeft}, 10.5, 0.0};
  const fusion::RangeParams rp;
  for (auto _ : st) benchmark::DoNotOptimize(fusion::range_update(e, m, rp));
}
BENCHMARK(BM_RangeUpdate)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void BM_RangeMomentsLattice(benchmark::State& st) {
  fusion::RangeParams rp;
  rp.lattice = fusion::SampleLattice::cubic(3, static_cast<int>(st.range(0)));
  const Vec3 z(10.0, 0.5, 0.0);
  const Mat3 P = Mat3::Identity();
  for (auto _ : st) benchmark::DoNotOptimize(fusion::range_moments(z, P, 11.0, rp.gamma_r, rp.sigma_r, rp.lattice));
}
BENCHMARK(BM_RangeMomentsLattice)->Arg(5)->Arg(9)->Arg(15);

void BM_FusionCenterStep(benchmark::State& st) {
  const int agents = static_cast<int>(st.range(0));
  fusion::FusionCenter fc;
  for (int a = 0; a < agents; ++a) {
    dr::TrackState l{Vec3(0, 10.0 * a + 0.15, 0), 0.0, Mat4::Zero()};
    dr::TrackState r{Vec3(0, 10.0 * a - 0.15, 0), 0.0, Mat4::Zero()};
    fc.add_agent(static_cast<std::uint16_t>(a), l, r);
  }
  ins::StepUpdate u;
  u.dp = Vec3(1.0, 0.0, 0.0);
  u.P_p = 1e-4 * Mat3::Identity();
  u.P_psipsi = 1e-5;
  std::vector<std::uint32_t> seq(static_cast<std::size_t>(2 * agents), 0);
  int foot = 0;
  double t = 0.0;
  for (auto _ : st) {
    const FootId id{static_cast<std::uint16_t>(foot / 2), static_cast<std::uint8_t>(foot % 2)};
    u.seq = ++seq[static_cast<std::size_t>(foot)];
    u.t_step = t += 0.1;
    benchmark::DoNotOptimize(fc.ingest(id, u));
    foot = (foot + 1) % (2 * agents);
  }
}
BENCHMARK(BM_FusionCenterStep)->Arg(1)->Arg(4)->Arg(8);

void BM_DeadReckonStep(benchmark::State& st) {
  dr::TrackState s;
  ins::StepUpdate u;
  u.dp = Vec3(1.0, 0.01, 0.0);
  u.dpsi = 0.001;
  u.P_p = 1e-4 * Mat3::Identity();
  u.P_psipsi = 1e-5;
  for (auto _ : st) {
    ++u.seq;
    s = dr::dr_propagate(s, u);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_DeadReckonStep);

void BM_InsPush(benchmark::State& st) {
  scen::GaitParams gp;
  gp.strides = 20;
  gp.accel_noise = 0.01;
  gp.gyro_noise = 0.002;
  const auto data = scen::synth_imu_gait(gp);
  for (auto _ : st) {
    ins::StepWiseIns nav{ins::InsConfig{}};
    std::size_t steps = 0;
    for (const auto& m : data.imu) steps += nav.push(m).size();
    benchmark::DoNotOptimize(steps);
  }
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * data.imu.size()));
}
BENCHMARK(BM_InsPush)->Unit(benchmark::kMillisecond);

void BM_CodecRoundTrip(benchmark::State& st) {
  ins::StepUpdate u;
  u.seq = 7;
  u.dp = Vec3(0.9, 0.05, -0.01);
  u.dpsi = 0.02;
  u.P_p = Vec3(1e-4, 2e-4, 5e-5).asDiagonal();
  u.P_psipsi = 1e-5;
  const FootId id{3, FootId::kLeft};
  for (auto _ : st) {
    const auto bytes = msg::serialize(msg::encode_step(id, u));
    benchmark::DoNotOptimize(msg::decode_step(msg::parse_step(bytes)));
  }
}
BENCHMARK(BM_CodecRoundTrip);

void BM_PipelineRun(benchmark::State& st) {
  scen::PipelineConfig pc;
  pc.scenario.agents = static_cast<int>(st.range(0));
  pc.scenario.steps = 200;
  const auto truth = scen::gen_truth(pc.scenario);
  std::uint64_t run = 0;
  for (auto _ : st) benchmark::DoNotOptimize(scen::run_pipeline(pc, truth, run++));
}
BENCHMARK(BM_PipelineRun)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
