#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "coopnav/deadreck.hpp"
#include "coopnav/fusion.hpp"

namespace coopnav::fusion {

struct FusionConfig {
  ConstraintParams constraint;
  RangeParams range;
  bool apply_constraint = true;
  bool send_covariance = false;   // replacement covariance in corrections
  bool record_events = false;

  void validate() const {
    constraint.validate();
    range.validate();
  }
};

struct FusionEvent {
  enum class Kind { kStep, kConstraint, kRange, kRangeRejected, kAux, kAuxRejected };
  Kind kind = Kind::kStep;
  double t = 0.0;
  FootId a;
  FootId b;
  double value = 0.0;   // projected sigma points, or the likelihood weight sum
};

struct FusionStats {
  std::uint64_t steps = 0;
  std::uint64_t constraints_active = 0;
  std::uint64_t ranges = 0;
  std::uint64_t ranges_rejected = 0;
  std::uint64_t aux = 0;
};

/// Single owner of the joint estimate. Feet report steps; the center keeps
/// a mirror of every foot's local track so that it can return the
/// correction that brings the local track onto the central estimate.
class FusionCenter {
 public:
  /// Maps the exact correction to what actually reaches the agent (e.g. the
  /// quantized value). The mirror applies the returned correction.
  using Downlink = std::function<dr::Correction(const FootId&, const dr::Correction&)>;

  explicit FusionCenter(FusionConfig cfg = {});

  void add_foot(const FootId& id, const dr::TrackState& initial);
  void add_agent(std::uint16_t agent, const dr::TrackState& left, const dr::TrackState& right);

  void set_downlink(Downlink d) { downlink_ = std::move(d); }

  /// Dead-reckons the foot inside the joint estimate, applies the separation
  /// constraint against its pair and returns the correction for that foot.
  dr::Correction ingest(const FootId& id, const ins::StepUpdate& u);

  /// Range between two feet or devices. Returns false when rejected.
  bool ingest_range(const RangeMeasurement& m);

  /// Anchor, position-fix or pressure datum for a foot or device.
  bool ingest_aux(AuxKind kind, const FootId& target, const AuxDatum& datum, double t);

  /// A device id resolves to the agent's most recently updated foot.
  FootId resolve(const FootId& id) const;

  const GlobalEstimate& estimate() const { return g_; }
  dr::TrackState track(const FootId& id) const;
  const dr::TrackState& mirror(const FootId& id) const;
  /// Midpoint of the agent's two feet.
  Vec3 agent_position(std::uint16_t agent) const;
  std::vector<std::uint16_t> agents() const;

  const FusionStats& stats() const { return stats_; }
  const std::vector<FusionEvent>& events() const { return events_; }
  const FusionConfig& config() const { return cfg_; }

 private:
  struct Foot {
    std::uint32_t seq = 0;
    double t = 0.0;
    std::uint64_t order = 0;   // ingest counter of the latest update
    dr::TrackState mirror;
  };

  Foot& foot(const FootId& id);
  const Foot& foot(const FootId& id) const;
  void record(FusionEvent e);

  FusionConfig cfg_;
  GlobalEstimate g_;
  std::map<FootId, Foot> feet_;
  std::uint64_t order_ = 0;
  Downlink downlink_;
  FusionStats stats_;
  std::vector<FusionEvent> events_;
};

}  // namespace coopnav::fusion
