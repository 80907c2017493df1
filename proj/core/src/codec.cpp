#include <cmath>
#include <string>

#include "coopnav/log.hpp"
#include "coopnav/messaging.hpp"

namespace coopnav::msg {

std::int16_t encode_linear(double x, double range, bool* saturated) {
  if (!std::isfinite(x)) throw InvalidInputError("cannot encode a non-finite value");
  const double scaled = std::round(x / range * 32767.0);
  const bool sat = scaled > 32767.0 || scaled < -32767.0;
  if (saturated) *saturated = sat;
  if (sat) return static_cast<std::int16_t>(scaled > 0 ? 32767 : -32767);
  return static_cast<std::int16_t>(scaled);
}

double decode_linear(std::int16_t code, double range) {
  return static_cast<double>(code) / 32767.0 * range;
}

std::uint16_t encode_variance(double v, bool* saturated) {
  if (std::isnan(v)) throw InvalidInputError("cannot encode a NaN variance");
  // Below the floor is benign (a locked or freshly reset filter); only an
  // overflow counts as saturation.
  const bool sat = v > kVarianceMax;
  if (saturated) *saturated = sat;
  const double c = std::clamp(v, kVarianceMin, kVarianceMax);
  const double span = std::log10(kVarianceMax) - std::log10(kVarianceMin);
  const double code = std::round((std::log10(c) - std::log10(kVarianceMin)) / span * 65535.0);
  return static_cast<std::uint16_t>(std::clamp(code, 0.0, 65535.0));
}

double decode_variance(std::uint16_t code) {
  const double span = std::log10(kVarianceMax) - std::log10(kVarianceMin);
  return std::pow(10.0, std::log10(kVarianceMin) + static_cast<double>(code) / 65535.0 * span);
}

double variance_relative_step() {
  const double span = std::log10(kVarianceMax) - std::log10(kVarianceMin);
  return std::pow(10.0, 0.5 * span / 65535.0) - 1.0;
}

std::uint32_t encode_time(double t) {
  if (!std::isfinite(t) || t < 0.0) throw InvalidInputError("packet time must be >= 0");
  const double ms = std::round(t * 1000.0);
  if (ms > 4294967295.0) throw InvalidInputError("packet time overflows 32-bit milliseconds");
  return static_cast<std::uint32_t>(ms);
}

double decode_time(std::uint32_t t_ms) { return static_cast<double>(t_ms) / 1000.0; }

namespace {

std::uint16_t as_code(std::int16_t v) { return static_cast<std::uint16_t>(v); }
std::int16_t as_signed(std::uint16_t v) { return static_cast<std::int16_t>(v); }

void warn_saturation(const FootId& foot, std::uint32_t seq, const char* what) {
  log(LogLevel::kWarning, std::string(what) + " saturated in packet from " + to_string(foot) +
                              " step " + std::to_string(seq));
}

}  // namespace

StepPacket encode_step(const FootId& foot, const ins::StepUpdate& u) {
  StepPacket p;
  p.foot = foot;
  p.seq = u.seq;
  p.t_ms = encode_time(u.t_step);
  bool sat = false, any = false;
  for (int i = 0; i < 3; ++i) {
    p.values[static_cast<std::size_t>(i)] = as_code(encode_linear(u.dp[i], kPositionRange, &sat));
    any |= sat;
  }
  p.values[3] = as_code(encode_linear(wrap_angle(u.dpsi), kAngleRange, &sat));
  any |= sat;
  if (any) warn_saturation(foot, u.seq, "displacement");
  any = false;
  for (int i = 0; i < 3; ++i) {
    p.values[static_cast<std::size_t>(4 + i)] = encode_variance(u.P_p(i, i), &sat);
    any |= sat;
  }
  p.values[7] = encode_variance(u.P_psipsi, &sat);
  any |= sat;
  if (any) warn_saturation(foot, u.seq, "variance");
  return p;
}

ins::StepUpdate decode_step(const StepPacket& p) {
  ins::StepUpdate u;
  u.seq = p.seq;
  u.t_step = decode_time(p.t_ms);
  for (int i = 0; i < 3; ++i)
    u.dp[i] = decode_linear(as_signed(p.values[static_cast<std::size_t>(i)]), kPositionRange);
  u.dpsi = decode_linear(as_signed(p.values[3]), kAngleRange);
  u.P_p.setZero();
  for (int i = 0; i < 3; ++i) u.P_p(i, i) = decode_variance(p.values[static_cast<std::size_t>(4 + i)]);
  u.P_ppsi.setZero();
  u.P_psipsi = decode_variance(p.values[7]);
  return u;
}

CorrectionPacket encode_correction(const FootId& foot, const dr::Correction& c, double t) {
  CorrectionPacket p;
  p.foot = foot;
  p.seq = c.seq;
  p.t_ms = encode_time(t);
  bool sat = false, any = false;
  for (int i = 0; i < 3; ++i) {
    p.values[static_cast<std::size_t>(i)] = as_code(encode_linear(c.dx[i], kPositionRange, &sat));
    any |= sat;
  }
  p.values[3] = as_code(encode_linear(wrap_angle(c.dchi), kAngleRange, &sat));
  any |= sat;
  if (any) warn_saturation(foot, c.seq, "correction");
  return p;
}

dr::Correction decode_correction(const CorrectionPacket& p) {
  dr::Correction c;
  c.seq = p.seq;
  for (int i = 0; i < 3; ++i)
    c.dx[i] = decode_linear(as_signed(p.values[static_cast<std::size_t>(i)]), kPositionRange);
  c.dchi = decode_linear(as_signed(p.values[3]), kAngleRange);
  return c;
}

// ---- little-endian wire encoding ----

namespace {

class Writer {
 public:
  explicit Writer(std::size_t reserve) { b_.reserve(reserve); }
  void u8(std::uint8_t v) { b_.push_back(v); }
  void u16(std::uint16_t v) {
    b_.push_back(static_cast<std::uint8_t>(v & 0xff));
    b_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    u16(static_cast<std::uint16_t>(v & 0xffff));
    u16(static_cast<std::uint16_t>(v >> 16));
  }
  std::vector<std::uint8_t> take() { return std::move(b_); }

 private:
  std::vector<std::uint8_t> b_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>(b_[pos_] | (b_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    const std::uint32_t lo = u16();
    const std::uint32_t hi = u16();
    return lo | (hi << 16);
  }
  void done() const {
    if (pos_ != b_.size()) throw InvalidInputError("packet has trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw InvalidInputError("packet is truncated");
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void header(Writer& w, PacketType type, const FootId& foot, std::uint32_t seq,
            std::uint32_t t_ms) {
  w.u8(static_cast<std::uint8_t>(type));
  w.u16(foot.agent);
  w.u8(foot.side);
  w.u32(seq);
  w.u32(t_ms);
}

void read_header(Reader& r, PacketType expected, FootId& foot, std::uint32_t& seq,
                 std::uint32_t& t_ms) {
  if (r.u8() != static_cast<std::uint8_t>(expected))
    throw InvalidInputError("unexpected packet type");
  foot.agent = r.u16();
  foot.side = r.u8();
  seq = r.u32();
  t_ms = r.u32();
}

}  // namespace

std::vector<std::uint8_t> serialize(const StepPacket& p) {
  Writer w(kHeaderBytes + kStepPayloadBytes);
  header(w, PacketType::kStep, p.foot, p.seq, p.t_ms);
  for (auto v : p.values) w.u16(v);
  return w.take();
}

std::vector<std::uint8_t> serialize(const CorrectionPacket& p) {
  Writer w(kHeaderBytes + kCorrectionPayloadBytes);
  header(w, PacketType::kCorrection, p.foot, p.seq, p.t_ms);
  for (auto v : p.values) w.u16(v);
  return w.take();
}

std::vector<std::uint8_t> serialize(const RangePacket& p) {
  Writer w(kHeaderBytes + kRangePayloadBytes);
  header(w, PacketType::kRange, p.from, p.seq, p.t_ms);
  w.u16(p.peer);
  w.u16(0);
  w.u32(p.range_mm);
  return w.take();
}

PacketType peek_type(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw InvalidInputError("empty packet");
  const auto t = bytes[0];
  if (t < 1 || t > 3) throw InvalidInputError("unknown packet type " + std::to_string(t));
  return static_cast<PacketType>(t);
}

StepPacket parse_step(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  StepPacket p;
  read_header(r, PacketType::kStep, p.foot, p.seq, p.t_ms);
  for (auto& v : p.values) v = r.u16();
  r.done();
  return p;
}

CorrectionPacket parse_correction(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  CorrectionPacket p;
  read_header(r, PacketType::kCorrection, p.foot, p.seq, p.t_ms);
  for (auto& v : p.values) v = r.u16();
  r.done();
  return p;
}

RangePacket parse_range(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  RangePacket p;
  read_header(r, PacketType::kRange, p.from, p.seq, p.t_ms);
  p.peer = r.u16();
  r.u16();
  p.range_mm = r.u32();
  r.done();
  return p;
}

}  // namespace coopnav::msg
