#include "coopnav/fusion_center.hpp"

#include <cmath>
#include <set>
#include <string>

#include "coopnav/log.hpp"

namespace coopnav::fusion {

FusionCenter::FusionCenter(FusionConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  g_.mean.resize(0);
  g_.P.resize(0, 0);
}

void FusionCenter::add_foot(const FootId& id, const dr::TrackState& initial) {
  g_.add_foot(id, initial.mean(), initial.P);
  Foot f;
  f.seq = initial.seq;
  f.t = initial.t;
  f.order = order_++;
  f.mirror = initial;
  feet_[id] = f;
}

void FusionCenter::add_agent(std::uint16_t agent, const dr::TrackState& left,
                             const dr::TrackState& right) {
  add_foot({agent, FootId::kLeft}, left);
  add_foot({agent, FootId::kRight}, right);
}

FusionCenter::Foot& FusionCenter::foot(const FootId& id) {
  auto it = feet_.find(id);
  if (it == feet_.end()) throw LookupError("unknown foot " + to_string(id));
  return it->second;
}

const FusionCenter::Foot& FusionCenter::foot(const FootId& id) const {
  auto it = feet_.find(id);
  if (it == feet_.end()) throw LookupError("unknown foot " + to_string(id));
  return it->second;
}

void FusionCenter::record(FusionEvent e) {
  if (cfg_.record_events) events_.push_back(e);
}

FootId FusionCenter::resolve(const FootId& id) const {
  if (!id.is_device()) {
    foot(id);
    return id;
  }
  const FootId l{id.agent, FootId::kLeft};
  const FootId r{id.agent, FootId::kRight};
  const auto il = feet_.find(l);
  const auto ir = feet_.find(r);
  if (il == feet_.end() && ir == feet_.end())
    throw LookupError("unknown agent " + std::to_string(id.agent));
  if (il == feet_.end()) return r;
  if (ir == feet_.end()) return l;
  return il->second.order >= ir->second.order ? l : r;
}

dr::Correction FusionCenter::ingest(const FootId& id, const ins::StepUpdate& u) {
  if (id.is_device()) throw InvalidInputError("steps must come from a foot");
  Foot& f = foot(id);
  if (u.seq != f.seq + 1)
    throw SequencingError(to_string(id) + ": step " + std::to_string(u.seq) +
                          " does not follow " + std::to_string(f.seq));
  propagate_foot(g_, id, u);
  f.seq = u.seq;
  f.t = u.t_step;
  f.order = order_++;
  ++stats_.steps;
  record({FusionEvent::Kind::kStep, u.t_step, id, id, 0.0});

  const FootId other = id.other();
  if (cfg_.apply_constraint && feet_.count(other)) {
    const double dt = std::abs(u.t_step - feet_.at(other).t);
    ConstraintOutcome c = constraint_update(g_, id, other, cfg_.constraint, dt);
    if (c.projected > 0) {
      g_ = std::move(c.estimate);
      ++stats_.constraints_active;
      record({FusionEvent::Kind::kConstraint, u.t_step, id, other,
              static_cast<double>(c.projected)});
    }
  }

  f.mirror = dr::dr_propagate(f.mirror, u);
  const int o = g_.offset(id);
  dr::Correction c;
  c.seq = u.seq;
  c.dx = g_.mean.segment<3>(o) - f.mirror.x;
  c.dchi = wrap_angle(g_.mean[o + 3] - f.mirror.chi);
  if (cfg_.send_covariance) c.P = Mat4(g_.P.block<4, 4>(o, o));
  const dr::Correction sent = downlink_ ? downlink_(id, c) : c;
  f.mirror = dr::apply_correction(f.mirror, sent);
  return sent;
}

bool FusionCenter::ingest_range(const RangeMeasurement& m) {
  const FootId a = resolve(m.a);
  const FootId b = resolve(m.b);
  if (a.agent == b.agent) throw InvalidInputError("range between feet of the same agent");
  const double age = std::abs(m.t - foot(a).t) + std::abs(m.t - foot(b).t);
  RangeMeasurement r = m;
  r.a = a;
  r.b = b;
  RangeOutcome out = range_update(g_, r, cfg_.range, age);
  ++stats_.ranges;
  if (out.rejected) {
    ++stats_.ranges_rejected;
    record({FusionEvent::Kind::kRangeRejected, m.t, a, b, 0.0});
    return false;
  }
  g_ = std::move(out.estimate);
  record({FusionEvent::Kind::kRange, m.t, a, b, out.weight_sum});
  return true;
}

bool FusionCenter::ingest_aux(AuxKind kind, const FootId& target, const AuxDatum& datum,
                              double t) {
  const FootId a = resolve(target);
  RangeOutcome out = aux_update(g_, kind, a, datum, cfg_.range);
  ++stats_.aux;
  if (out.rejected) {
    record({FusionEvent::Kind::kAuxRejected, t, a, a, 0.0});
    return false;
  }
  g_ = std::move(out.estimate);
  record({FusionEvent::Kind::kAux, t, a, a, out.weight_sum});
  return true;
}

dr::TrackState FusionCenter::track(const FootId& id) const {
  const Foot& f = foot(id);
  dr::TrackState s;
  const Vec4 m = g_.foot_mean(id);
  s.x = m.head<3>();
  s.chi = m[3];
  s.P = g_.foot_cov(id);
  s.seq = f.seq;
  s.t = f.t;
  return s;
}

const dr::TrackState& FusionCenter::mirror(const FootId& id) const { return foot(id).mirror; }

Vec3 FusionCenter::agent_position(std::uint16_t agent) const {
  const FootId l{agent, FootId::kLeft};
  const FootId r{agent, FootId::kRight};
  const bool hl = g_.contains(l), hr = g_.contains(r);
  if (hl && hr) return 0.5 * (g_.position(l) + g_.position(r));
  if (hl) return g_.position(l);
  if (hr) return g_.position(r);
  throw LookupError("unknown agent " + std::to_string(agent));
}

std::vector<std::uint16_t> FusionCenter::agents() const {
  std::set<std::uint16_t> s;
  for (const auto& [id, f] : feet_) s.insert(id.agent);
  return {s.begin(), s.end()};
}

}  // namespace coopnav::fusion
