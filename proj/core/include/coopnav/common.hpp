#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace coopnav {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Quat = Eigen::Quaterniond;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr double kStandardGravity = 9.81;

// Error hierarchy. Every failure the library reports derives from Error so
// callers can catch broadly and still dispatch on the concrete kind.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite or structurally invalid input (short window, bad dimension...).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// A decomposition failed or a matrix is too ill-conditioned to invert.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

// Step/correction indices arrived out of order.
class SequencingError : public Error {
 public:
  using Error::Error;
};

// Unknown foot or agent identifier.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Identifies one navigation point: a foot of an agent, or the agent's
/// ranging device (resolved by the fusion center to one of its feet).
struct FootId {
  static constexpr std::uint8_t kLeft = 0;
  static constexpr std::uint8_t kRight = 1;
  static constexpr std::uint8_t kDevice = 0xff;

  std::uint16_t agent = 0;
  std::uint8_t side = kLeft;

  static constexpr FootId device(std::uint16_t agent) { return {agent, kDevice}; }
  constexpr bool is_device() const { return side == kDevice; }
  constexpr FootId other() const {
    return {agent, static_cast<std::uint8_t>(side == kLeft ? kRight : kLeft)};
  }

  friend constexpr auto operator<=>(const FootId&, const FootId&) = default;
};

std::string to_string(const FootId& id);

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

inline Mat3 skew(const Vec3& a) {
  Mat3 s;
  s << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return s;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/// Symmetrizes in place: P := (P + P^T) / 2.
template <typename Derived>
void symmetrize(Eigen::MatrixBase<Derived>& p) {
  p = (0.5 * (p + p.transpose())).eval();
}

}  // namespace coopnav
