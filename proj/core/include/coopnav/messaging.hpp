#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coopnav/common.hpp"
#include "coopnav/deadreck.hpp"
#include "coopnav/ins.hpp"

/// Packet codecs, a simulated network, the ranging scheduler and the
/// communication audit. Wire format: see docs/wire_format.md.
namespace coopnav::msg {

// ---- fixed-point scales ----------------------------------------------------

inline constexpr double kPositionRange = 10.0;                 // m, dp and dx
inline constexpr double kAngleRange = std::numbers::pi;        // rad, dpsi and dchi
inline constexpr double kVarianceMin = 1e-8;
inline constexpr double kVarianceMax = 1e2;

/// Saturating symmetric fixed point: code = round(x / range * 32767).
std::int16_t encode_linear(double x, double range, bool* saturated = nullptr);
double decode_linear(std::int16_t code, double range);
/// Largest decode error for a value inside the range.
inline double linear_step(double range) { return range / 32767.0; }

/// Variance on a log10 scale over [kVarianceMin, kVarianceMax].
std::uint16_t encode_variance(double v, bool* saturated = nullptr);
double decode_variance(std::uint16_t code);
/// Largest relative decode error for a variance inside the range.
double variance_relative_step();

// ---- packets ---------------------------------------------------------------

enum class PacketType : std::uint8_t { kStep = 1, kCorrection = 2, kRange = 3 };

inline constexpr std::size_t kHeaderBytes = 12;   // type, agent, side, seq, t_ms
inline constexpr std::size_t kStepValues = 8;
inline constexpr std::size_t kCorrectionValues = 4;
inline constexpr std::size_t kValueBytes = 2;
inline constexpr std::size_t kStepPayloadBytes = kStepValues * kValueBytes;
inline constexpr std::size_t kCorrectionPayloadBytes = kCorrectionValues * kValueBytes;
inline constexpr std::size_t kRangePayloadBytes = 8;   // peer agent, range in mm

struct StepPacket {
  FootId foot;
  std::uint32_t seq = 0;
  std::uint32_t t_ms = 0;
  // dp x, y, z, dpsi (linear); P_p diagonal x, y, z, P_psipsi (log).
  std::array<std::uint16_t, kStepValues> values{};
};

struct CorrectionPacket {
  FootId foot;
  std::uint32_t seq = 0;
  std::uint32_t t_ms = 0;
  // dx x, y, z, dchi (linear).
  std::array<std::uint16_t, kCorrectionValues> values{};
};

struct RangePacket {
  FootId from;          // device of the reporting agent
  std::uint16_t peer = 0;
  std::uint32_t seq = 0;
  std::uint32_t t_ms = 0;
  std::uint32_t range_mm = 0;
};

/// Quantizes a step. Cross-covariances are dropped; out-of-range values
/// saturate with a logged warning.
StepPacket encode_step(const FootId& foot, const ins::StepUpdate& u);
/// P_ppsi and the off-diagonal P_p terms come back as zero.
ins::StepUpdate decode_step(const StepPacket& p);

CorrectionPacket encode_correction(const FootId& foot, const dr::Correction& c, double t);
/// Mean-only: the replacement covariance is never carried on the wire.
dr::Correction decode_correction(const CorrectionPacket& p);

std::uint32_t encode_time(double t);
double decode_time(std::uint32_t t_ms);

std::vector<std::uint8_t> serialize(const StepPacket& p);
std::vector<std::uint8_t> serialize(const CorrectionPacket& p);
std::vector<std::uint8_t> serialize(const RangePacket& p);
PacketType peek_type(std::span<const std::uint8_t> bytes);
StepPacket parse_step(std::span<const std::uint8_t> bytes);
CorrectionPacket parse_correction(std::span<const std::uint8_t> bytes);
RangePacket parse_range(std::span<const std::uint8_t> bytes);

// ---- communication audit -----------------------------------------------------

enum class Tier { kFootToAgent, kUplink, kDownlink };

struct TierCounters {
  std::uint64_t messages = 0;
  std::uint64_t payload_bytes = 0;
  std::uint64_t header_bytes = 0;
  std::uint64_t retransmitted_bytes = 0;
};

/// Byte counters of a run plus the equivalent centralized baseline, where
/// every foot streams raw 6-axis IMU samples to the center.
struct CommAudit {
  std::map<Tier, TierCounters> tiers;
  std::uint64_t range_payload_bytes = 0;   // needed by either architecture
  std::uint64_t baseline_bytes = 0;
  std::uint64_t step_payload_bytes = 0;
  std::uint64_t correction_payload_bytes = 0;

  void count(Tier tier, std::size_t payload, std::size_t header, bool retransmission = false);
  void count_step();
  void count_correction();
  /// Adds the baseline for `feet` IMUs streaming for `duration` seconds.
  void add_imu_baseline(double duration, double f_imu, int feet,
                        std::size_t sample_bytes = kValueBytes);
};

struct AuditReport {
  double ratio = 0.0;   // +inf when nothing decentralized was sent
  std::uint64_t baseline_bytes = 0;
  std::uint64_t decentralized_bytes = 0;
  std::uint64_t step_payload_bytes = 0;
  std::uint64_t correction_payload_bytes = 0;
  std::map<Tier, TierCounters> tiers;
};

/// ratio = baseline bytes / (step + correction payload bytes).
AuditReport audit_report(const CommAudit& a);

std::string to_string(Tier t);

// ---- ranging schedule ----------------------------------------------------------

/// All agent pairs in round-robin order: (0,1), (0,2), ..., (1,2), ...
std::vector<std::pair<std::uint16_t, std::uint16_t>> round_robin_pairs(int agents);

struct RangingSlot {
  double t = 0.0;
  std::uint16_t a = 0;
  std::uint16_t b = 0;
};

/// Slots at t_begin + phase + k / rate for t < t_end, cycling over the pairs.
std::vector<RangingSlot> ranging_schedule(int agents, double rate_total, double t_begin,
                                          double t_end, double phase = 0.0);

// ---- simulated network ---------------------------------------------------------

enum class Direction : std::uint8_t { kUplink, kDownlink };

struct LinkId {
  std::uint16_t agent = 0;
  Direction dir = Direction::kUplink;
  friend constexpr auto operator<=>(const LinkId&, const LinkId&) = default;
};

struct Disconnect {
  std::uint16_t agent = 0;
  double t_begin = 0.0;
  double t_end = 0.0;
};

struct NetworkConfig {
  double drop_prob = 0.0;
  std::map<LinkId, double> link_drop_prob;   // overrides drop_prob
  std::vector<Disconnect> disconnects;
  double latency = 0.0;          // s, fixed part
  double latency_jitter = 0.0;   // s, mean of an exponential extra delay
  double retry_interval = 0.05;  // s between retransmissions
  std::uint64_t seed = 1;

  void validate() const;
  double drop_for(const LinkId& l) const;
};

struct Message {
  std::uint64_t id = 0;
  LinkId link;
  Tier tier = Tier::kUplink;
  double t_sent = 0.0;
  std::vector<std::uint8_t> bytes;
  std::size_t payload_bytes = 0;
};

struct Delivery {
  Message msg;
  double t_delivered = 0.0;
  int attempts = 0;
};

struct TraceEntry {
  enum class Event { kSent, kDropped, kDelivered, kStalled };
  Event event = Event::kSent;
  double t = 0.0;
  std::uint64_t id = 0;
  LinkId link;
  std::size_t bytes = 0;
};

/// Discrete-event network with reliable FIFO links: a dropped transmission
/// is retried until it gets through, a link of an agent that is
/// disconnected holds its backlog and replays it in order on reconnect.
/// A link with drop probability 1 stalls permanently.
class Network {
 public:
  explicit Network(NetworkConfig cfg);

  /// Queues a message and decides its fate. Returns the message id.
  std::uint64_t send(const LinkId& link, Tier tier, double t, std::vector<std::uint8_t> bytes,
                     std::size_t payload_bytes);

  /// Pops every delivery with time <= t, in delivery order.
  std::vector<Delivery> deliver_until(double t);
  std::optional<double> next_delivery_time() const;
  std::size_t in_flight() const { return queue_.size(); }

  const CommAudit& audit() const { return audit_; }
  CommAudit& audit() { return audit_; }
  const std::vector<TraceEntry>& trace() const { return trace_; }
  void write_trace_jsonl(std::ostream& os) const;

  /// End of any disconnect of `agent` that covers time t, or t itself.
  double reconnect_time(std::uint16_t agent, double t) const;

 private:
  struct Pending {
    Delivery d;
    bool operator>(const Pending& o) const {
      if (d.t_delivered != o.d.t_delivered) return d.t_delivered > o.d.t_delivered;
      return d.msg.id > o.d.msg.id;
    }
  };

  NetworkConfig cfg_;
  std::mt19937_64 rng_;
  std::uint64_t next_id_ = 1;
  std::map<LinkId, double> last_arrival_;
  std::map<LinkId, bool> stalled_;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue_;
  CommAudit audit_;
  std::vector<TraceEntry> trace_;
};

std::string to_string(Direction d);

}  // namespace coopnav::msg
