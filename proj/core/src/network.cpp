#include <algorithm>
#include <cmath>
#include <ostream>

#include "json.hpp"

#include "coopnav/messaging.hpp"

namespace coopnav::msg {

void NetworkConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(drop_prob)) throw InvalidInputError("drop_prob must lie in [0, 1]");
  for (const auto& [l, p] : link_drop_prob)
    if (!prob(p)) throw InvalidInputError("link drop probability must lie in [0, 1]");
  for (const auto& d : disconnects)
    if (!(d.t_end >= d.t_begin)) throw InvalidInputError("disconnect interval ends before it begins");
  if (!(latency >= 0.0) || !(latency_jitter >= 0.0))
    throw InvalidInputError("latency must be >= 0");
  if (!(retry_interval > 0.0)) throw InvalidInputError("retry_interval must be > 0");
}

double NetworkConfig::drop_for(const LinkId& l) const {
  const auto it = link_drop_prob.find(l);
  return it != link_drop_prob.end() ? it->second : drop_prob;
}

Network::Network(NetworkConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) { cfg_.validate(); }

double Network::reconnect_time(std::uint16_t agent, double t) const {
  // Intervals may overlap or chain; iterate until t is outside all of them.
  bool moved = true;
  while (moved) {
    moved = false;
    for (const auto& d : cfg_.disconnects) {
      if (d.agent == agent && t >= d.t_begin && t < d.t_end) {
        t = d.t_end;
        moved = true;
      }
    }
  }
  return t;
}

std::uint64_t Network::send(const LinkId& link, Tier tier, double t,
                            std::vector<std::uint8_t> bytes, std::size_t payload_bytes) {
  if (!std::isfinite(t)) throw InvalidInputError("send time must be finite");
  if (payload_bytes > bytes.size()) throw InvalidInputError("payload larger than the message");
  Message m;
  m.id = next_id_++;
  m.link = link;
  m.tier = tier;
  m.t_sent = t;
  m.payload_bytes = payload_bytes;
  m.bytes = std::move(bytes);
  const std::size_t size = m.bytes.size();
  const std::size_t header = size - payload_bytes;

  if (!m.bytes.empty()) {
    switch (static_cast<PacketType>(m.bytes[0])) {
      case PacketType::kStep: audit_.step_payload_bytes += payload_bytes; break;
      case PacketType::kCorrection: audit_.correction_payload_bytes += payload_bytes; break;
      case PacketType::kRange: audit_.range_payload_bytes += payload_bytes; break;
    }
  }
  trace_.push_back({TraceEntry::Event::kSent, t, m.id, link, size});

  const double p_drop = cfg_.drop_for(link);
  if (stalled_[link] || p_drop >= 1.0) {
    // Nothing ever gets through; FIFO order keeps everything behind it.
    audit_.count(tier, payload_bytes, header);
    stalled_[link] = true;
    trace_.push_back({TraceEntry::Event::kStalled, t, m.id, link, size});
    return m.id;
  }

  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double tau = t;
  int attempts = 0;
  for (;;) {
    tau = reconnect_time(link.agent, tau);
    audit_.count(tier, payload_bytes, header, attempts > 0);
    ++attempts;
    if (p_drop > 0.0 && uni(rng_) < p_drop) {
      trace_.push_back({TraceEntry::Event::kDropped, tau, m.id, link, size});
      tau += cfg_.retry_interval;
      continue;
    }
    break;
  }
  double arrival = tau + cfg_.latency;
  if (cfg_.latency_jitter > 0.0) {
    std::exponential_distribution<double> jitter(1.0 / cfg_.latency_jitter);
    arrival += jitter(rng_);
  }
  double& last = last_arrival_[link];
  arrival = std::max(arrival, last);
  last = arrival;

  queue_.push({Delivery{std::move(m), arrival, attempts}});
  return next_id_ - 1;
}

std::vector<Delivery> Network::deliver_until(double t) {
  std::vector<Delivery> out;
  while (!queue_.empty() && queue_.top().d.t_delivered <= t) {
    Delivery d = queue_.top().d;
    queue_.pop();
    trace_.push_back({TraceEntry::Event::kDelivered, d.t_delivered, d.msg.id, d.msg.link,
                      d.msg.bytes.size()});
    out.push_back(std::move(d));
  }
  return out;
}

std::optional<double> Network::next_delivery_time() const {
  if (queue_.empty()) return std::nullopt;
  return queue_.top().d.t_delivered;
}

void Network::write_trace_jsonl(std::ostream& os) const {
  static constexpr const char* names[] = {"sent", "dropped", "delivered", "stalled"};
  for (const auto& e : trace_) {
    nlohmann::json j;
    j["event"] = names[static_cast<int>(e.event)];
    j["t"] = e.t;
    j["id"] = e.id;
    j["agent"] = e.link.agent;
    j["link"] = to_string(e.link.dir);
    j["bytes"] = e.bytes;
    os << j.dump() << '\n';
  }
}

}  // namespace coopnav::msg
