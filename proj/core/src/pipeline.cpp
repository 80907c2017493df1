#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "coopnav/scenarios.hpp"

namespace coopnav::scen {
namespace {

struct Event {
  double t;
  int kind;             // 0 step, 1 range
  std::size_t index;    // foot index for steps, range index for ranges
  std::size_t step;     // position in the foot's stream
};

std::size_t foot_index(const TruthTrace& truth, const FootId& id) {
  for (std::size_t i = 0; i < truth.feet.size(); ++i)
    if (truth.feet[i].id == id) return i;
  throw LookupError("unknown foot " + to_string(id));
}

}  // namespace

RunResult run_pipeline(const PipelineConfig& cfg, const TruthTrace& truth, std::uint64_t run) {
  RunResult res;
  res.run = run;
  res.agents = truth.cfg.agents;
  const int n_steps = truth.cfg.total_steps();
  res.samples = n_steps + 1;
  try {
    const std::uint64_t seed = derive_seed(truth.cfg.seed, run, 0);
    const auto steps = synth_step_updates(truth, seed);
    const auto ranges = synth_ranges(truth, seed);

    msg::NetworkConfig ncfg = cfg.network;
    ncfg.seed = derive_seed(cfg.network.seed, run, 2);
    msg::Network net(ncfg);
    net.audit().add_imu_baseline(truth.sample_time(n_steps), cfg.f_imu,
                                 static_cast<int>(truth.feet.size()));

    fusion::FusionCenter center(cfg.fusion);
    std::vector<dr::DeadReckoner> local;
    local.reserve(truth.feet.size());
    for (const auto& f : truth.feet) {
      dr::TrackState s;
      s.x = f.x[0];
      s.chi = f.chi[0];
      s.seq = 0;
      s.t = f.t[0];
      center.add_foot(f.id, s);
      local.emplace_back(s);
    }
    if (cfg.quantize) {
      center.set_downlink([](const FootId& id, const dr::Correction& c) {
        return msg::decode_correction(msg::encode_correction(id, c, 0.0));
      });
    }
    if (cfg.keep_trace) res.local_tracks.assign(truth.feet.size(), {});

    // Full-precision payloads keyed by message id, for runs without codecs.
    std::map<std::uint64_t, ins::StepUpdate> raw_steps;
    std::map<std::uint64_t, dr::Correction> raw_corrections;
    std::map<std::uint64_t, double> raw_ranges;

    auto handle = [&](const msg::Delivery& d) {
      const auto& bytes = d.msg.bytes;
      switch (msg::peek_type(bytes)) {
        case msg::PacketType::kStep: {
          const msg::StepPacket p = msg::parse_step(bytes);
          ins::StepUpdate u = cfg.quantize ? msg::decode_step(p) : raw_steps.at(d.msg.id);
          raw_steps.erase(d.msg.id);
          const dr::Correction c = center.ingest(p.foot, u);
          auto out = msg::encode_correction(p.foot, c, d.t_delivered);
          const auto id = net.send({p.foot.agent, msg::Direction::kDownlink}, msg::Tier::kDownlink,
                                   d.t_delivered, msg::serialize(out),
                                   msg::kCorrectionPayloadBytes);
          if (!cfg.quantize) raw_corrections[id] = c;
          break;
        }
        case msg::PacketType::kCorrection: {
          const msg::CorrectionPacket p = msg::parse_correction(bytes);
          dr::Correction c = cfg.quantize ? msg::decode_correction(p) : raw_corrections.at(d.msg.id);
          raw_corrections.erase(d.msg.id);
          auto& dr = local[foot_index(truth, p.foot)];
          dr.apply(c);
          if (c.seq > 0) dr.acknowledge(c.seq - 1);
          break;
        }
        case msg::PacketType::kRange: {
          const msg::RangePacket p = msg::parse_range(bytes);
          fusion::RangeMeasurement m;
          m.a = FootId::device(p.from.agent);
          m.b = FootId::device(p.peer);
          m.t = msg::decode_time(p.t_ms);
          m.r_tilde = cfg.quantize ? p.range_mm / 1000.0 : raw_ranges.at(d.msg.id);
          raw_ranges.erase(d.msg.id);
          center.ingest_range(m);
          break;
        }
      }
    };
    auto advance = [&](double t) {
      for (;;) {
        auto batch = net.deliver_until(t);
        if (batch.empty()) break;
        for (const auto& d : batch) handle(d);
      }
    };

    std::vector<Event> events;
    for (std::size_t fi = 0; fi < steps.size(); ++fi)
      for (std::size_t k = 0; k < steps[fi].size(); ++k)
        events.push_back({steps[fi][k].t_step, 0, fi, k});
    for (std::size_t ri = 0; ri < ranges.size(); ++ri) events.push_back({ranges[ri].m.t, 1, ri, 0});
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
      return std::tie(a.t, a.kind, a.index, a.step) < std::tie(b.t, b.kind, b.index, b.step);
    });

    res.errors.assign(static_cast<std::size_t>(res.agents), {});
    res.local_errors.assign(static_cast<std::size_t>(res.agents), {});
    auto sample = [&](int l) {
      const double ts = truth.sample_time(l);
      for (int a = 0; a < res.agents; ++a) {
        const auto ag = static_cast<std::uint16_t>(a);
        const Vec3 tp = truth.device_position(ag, ts);
        res.errors[static_cast<std::size_t>(a)].push_back(center.agent_position(ag) - tp);
        const Vec3 lp = 0.5 * (local[foot_index(truth, {ag, FootId::kLeft})].state().x +
                               local[foot_index(truth, {ag, FootId::kRight})].state().x);
        res.local_errors[static_cast<std::size_t>(a)].push_back(lp - tp);
      }
    };

    int next_sample = 0;
    std::uint32_t range_seq = 0;
    for (const Event& e : events) {
      while (next_sample <= n_steps && truth.sample_time(next_sample) < e.t) {
        advance(truth.sample_time(next_sample));
        sample(next_sample++);
      }
      advance(e.t);
      if (e.kind == 0) {
        const FootTruth& f = truth.feet[e.index];
        const ins::StepUpdate& u = steps[e.index][e.step];
        local[e.index].propagate(u);
        if (cfg.keep_trace) res.local_tracks[e.index].push_back(local[e.index].state());
        net.audit().count(msg::Tier::kFootToAgent, msg::kStepPayloadBytes, 0);
        const auto id = net.send({f.id.agent, msg::Direction::kUplink}, msg::Tier::kUplink, e.t,
                                 msg::serialize(msg::encode_step(f.id, u)),
                                 msg::kStepPayloadBytes);
        if (!cfg.quantize) raw_steps[id] = u;
      } else {
        const auto& r = ranges[e.index];
        msg::RangePacket p;
        p.from = r.m.a;
        p.peer = r.m.b.agent;
        p.seq = ++range_seq;
        p.t_ms = msg::encode_time(r.m.t);
        p.range_mm = static_cast<std::uint32_t>(std::min(std::round(r.m.r_tilde * 1000.0), 4.0e9));
        const auto id = net.send({r.m.a.agent, msg::Direction::kUplink}, msg::Tier::kUplink, e.t,
                                 msg::serialize(p), msg::kRangePayloadBytes);
        if (!cfg.quantize) raw_ranges[id] = r.m.r_tilde;
      }
      advance(e.t);
    }
    while (next_sample <= n_steps) {
      advance(truth.sample_time(next_sample));
      sample(next_sample++);
    }
    // Whatever is still in flight (backlogs, latency) is delivered before
    // the run is summarized; the samples above are unaffected.
    while (auto t = net.next_delivery_time()) advance(*t);

    res.audit = msg::audit_report(net.audit());
    res.stats = center.stats();
    if (cfg.keep_trace) res.trace = net.trace();
  } catch (const Error& e) {
    res.failed = true;
    res.error = e.what();
  }
  return res;
}

}  // namespace coopnav::scen
