#ifndef RELSENS_DUAL_HPP
#define RELSENS_DUAL_HPP

#include <cmath>

namespace relsens {

// Forward-mode dual number carrying one directional derivative. A gradient is
// assembled by seeding d = 1 on one coordinate at a time.
struct Dual {
  double v = 0.0;
  double d = 0.0;

  Dual() = default;
  explicit Dual(double value) : v(value), d(0.0) {}
  Dual(double value, double deriv) : v(value), d(deriv) {}
};

inline double value_of(const Dual& x) { return x.v; }

inline Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
inline Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(const Dual& a, const Dual& b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d};
}
inline Dual operator/(const Dual& a, const Dual& b) {
  const double inv = 1.0 / b.v;
  const double q = a.v * inv;
  return {q, (a.d - q * b.d) * inv};
}

inline Dual sqrt(const Dual& a) {
  const double s = std::sqrt(a.v);
  return {s, s > 0.0 ? a.d / (2.0 * s) : 0.0};
}
inline Dual exp(const Dual& a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}
inline Dual log(const Dual& a) { return {std::log(a.v), a.d / a.v}; }
inline Dual sin(const Dual& a) { return {std::sin(a.v), std::cos(a.v) * a.d}; }
inline Dual cos(const Dual& a) { return {std::cos(a.v), -std::sin(a.v) * a.d}; }

inline Dual pow(const Dual& a, const Dual& b) {
  if (b.d == 0.0) {
    // Constant exponent; valid for negative bases with integral exponents.
    const double p = std::pow(a.v, b.v);
    const double dp = a.d == 0.0 ? 0.0 : b.v * std::pow(a.v, b.v - 1.0) * a.d;
    return {p, dp};
  }
  const double p = std::pow(a.v, b.v);
  const double dp = p * (b.d * std::log(a.v) + b.v * a.d / a.v);
  return {p, dp};
}

}  // namespace relsens

#endif  // RELSENS_DUAL_HPP
