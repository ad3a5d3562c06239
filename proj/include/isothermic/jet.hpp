#ifndef ISOTHERMIC_JET_HPP
#define ISOTHERMIC_JET_HPP

#include <cmath>

namespace isothermic {

// Second-order jet of a scalar function of two variables (u, v).
struct Jet2 {
  double val = 0, du = 0, dv = 0, duu = 0, duv = 0, dvv = 0;

  Jet2() = default;
  Jet2(double c) : val(c) {}  // NOLINT: constants promote implicitly
  Jet2(double c, double a, double b, double aa, double ab, double bb)
      : val(c), du(a), dv(b), duu(aa), duv(ab), dvv(bb) {}

  static Jet2 u(double x) { return {x, 1, 0, 0, 0, 0}; }
  static Jet2 v(double y) { return {y, 0, 1, 0, 0, 0}; }

  Jet2& operator+=(const Jet2& o) {
    val += o.val, du += o.du, dv += o.dv, duu += o.duu, duv += o.duv, dvv += o.dvv;
    return *this;
  }
  Jet2& operator-=(const Jet2& o) {
    val -= o.val, du -= o.du, dv -= o.dv, duu -= o.duu, duv -= o.duv, dvv -= o.dvv;
    return *this;
  }
  Jet2& operator*=(double s) {
    val *= s, du *= s, dv *= s, duu *= s, duv *= s, dvv *= s;
    return *this;
  }
};

inline Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
inline Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }
inline Jet2 operator-(const Jet2& a) { return Jet2(0.0) - a; }
inline Jet2 operator*(Jet2 a, double s) { return a *= s; }
inline Jet2 operator*(double s, Jet2 a) { return a *= s; }

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  return {a.val * b.val,
          a.du * b.val + a.val * b.du,
          a.dv * b.val + a.val * b.dv,
          a.duu * b.val + 2 * a.du * b.du + a.val * b.duu,
          a.duv * b.val + a.du * b.dv + a.dv * b.du + a.val * b.duv,
          a.dvv * b.val + 2 * a.dv * b.dv + a.val * b.dvv};
}

// g(a) given g(a.val), g'(a.val), g''(a.val).
inline Jet2 compose(double g, double g1, double g2, const Jet2& a) {
  return {g,
          g1 * a.du,
          g1 * a.dv,
          g2 * a.du * a.du + g1 * a.duu,
          g2 * a.du * a.dv + g1 * a.duv,
          g2 * a.dv * a.dv + g1 * a.dvv};
}

inline Jet2 inv(const Jet2& a) {
  const double r = 1.0 / a.val;
  return compose(r, -r * r, 2 * r * r * r, a);
}

inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * inv(b); }
inline Jet2 operator/(const Jet2& a, double s) { return a * (1.0 / s); }
inline Jet2 operator/(double s, const Jet2& b) { return s * inv(b); }

inline Jet2 sqrt(const Jet2& a) {
  const double s = std::sqrt(a.val);
  return compose(s, 0.5 / s, -0.25 / (s * a.val), a);
}

inline Jet2 exp(const Jet2& a) {
  const double e = std::exp(a.val);
  return compose(e, e, e, a);
}

inline Jet2 log(const Jet2& a) { return compose(std::log(a.val), 1.0 / a.val, -1.0 / (a.val * a.val), a); }

inline Jet2 tanh(const Jet2& a) {
  const double t = std::tanh(a.val), s2 = 1 - t * t;
  return compose(t, s2, -2 * t * s2, a);
}

inline Jet2 cosh(const Jet2& a) { return compose(std::cosh(a.val), std::sinh(a.val), std::cosh(a.val), a); }

}  // namespace isothermic

#endif
