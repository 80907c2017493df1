#include <cmath>
#include <limits>

#include "coopnav/messaging.hpp"

namespace coopnav::msg {

void CommAudit::count(Tier tier, std::size_t payload, std::size_t header, bool retransmission) {
  TierCounters& c = tiers[tier];
  ++c.messages;
  c.payload_bytes += payload;
  c.header_bytes += header;
  if (retransmission) c.retransmitted_bytes += payload + header;
}

void CommAudit::count_step() { step_payload_bytes += kStepPayloadBytes; }
void CommAudit::count_correction() { correction_payload_bytes += kCorrectionPayloadBytes; }

void CommAudit::add_imu_baseline(double duration, double f_imu, int feet,
                                 std::size_t sample_bytes) {
  if (!(duration >= 0.0) || !(f_imu > 0.0) || feet < 0)
    throw InvalidInputError("baseline needs duration >= 0, f_imu > 0, feet >= 0");
  const double samples = std::floor(duration * f_imu);
  baseline_bytes += static_cast<std::uint64_t>(samples) * 6u * sample_bytes *
                    static_cast<std::uint64_t>(feet);
}

AuditReport audit_report(const CommAudit& a) {
  AuditReport r;
  r.baseline_bytes = a.baseline_bytes;
  r.step_payload_bytes = a.step_payload_bytes;
  r.correction_payload_bytes = a.correction_payload_bytes;
  r.decentralized_bytes = a.step_payload_bytes + a.correction_payload_bytes;
  r.tiers = a.tiers;
  r.ratio = r.decentralized_bytes == 0
                ? std::numeric_limits<double>::infinity()
                : static_cast<double>(r.baseline_bytes) / static_cast<double>(r.decentralized_bytes);
  return r;
}

std::string to_string(Tier t) {
  switch (t) {
    case Tier::kFootToAgent: return "foot_to_agent";
    case Tier::kUplink: return "uplink";
    case Tier::kDownlink: return "downlink";
  }
  return "unknown";
}

std::string to_string(Direction d) { return d == Direction::kUplink ? "uplink" : "downlink"; }

}  // namespace coopnav::msg
