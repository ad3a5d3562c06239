#ifndef ISOTHERMIC_COVER_HPP
#define ISOTHERMIC_COVER_HPP

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "minkowski.hpp"

namespace isothermic {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Point of the universal cover of the punctured disc: chart point r e^{i phi},
// with phi tracked without reduction.
struct PolarPoint {
  double r = 1.0;
  double phi = 0.0;

  double rho() const { return std::log(r); }
  cplx z() const { return std::polar(r, phi); }
  static PolarPoint from_log(double rho, double phi) { return {std::exp(rho), phi}; }
};

inline bool same_base(const PolarPoint& a, const PolarPoint& b, double tol = 1e-12) {
  if (std::abs(a.r - b.r) > tol * std::max(a.r, b.r)) return false;
  const double d = std::remainder(a.phi - b.phi, two_pi);
  return std::abs(d) <= tol;
}

// Components of a matrix-valued 1-form against du, dv of the chart z = u + iv.
struct FormValue {
  Mat du, dv;
};

// Components against d rho = dr/r and d phi.
struct PolarValue {
  Mat drho, dphi;
};

inline PolarValue to_polar(const FormValue& c, const PolarPoint& p) {
  const double cs = std::cos(p.phi), sn = std::sin(p.phi);
  return {p.r * (cs * c.du + sn * c.dv), p.r * (-sn * c.du + cs * c.dv)};
}

inline FormValue to_chart(const PolarValue& c, const PolarPoint& p) {
  const double cs = std::cos(p.phi), sn = std::sin(p.phi);
  return {(cs * c.drho - sn * c.dphi) / p.r, (sn * c.drho + cs * c.dphi) / p.r};
}

// A so(R^{n+2}_1)-valued 1-form on the cover, evaluated pointwise.
class FormField {
 public:
  using ChartFn = std::function<FormValue(const PolarPoint&)>;
  using PolarFn = std::function<PolarValue(const PolarPoint&)>;

  FormField() = default;

  static FormField from_chart(int dim, ChartFn fn) {
    FormField f;
    f.dim_ = dim;
    f.chart_ = std::move(fn);
    return f;
  }
  static FormField from_polar(int dim, PolarFn fn) {
    FormField f;
    f.dim_ = dim;
    f.polar_ = std::move(fn);
    return f;
  }
  static FormField from_both(int dim, ChartFn c, PolarFn p) {
    FormField f;
    f.dim_ = dim;
    f.chart_ = std::move(c);
    f.polar_ = std::move(p);
    return f;
  }
  static FormField zero(int dim) {
    return from_polar(dim, [dim](const PolarPoint&) {
      return PolarValue{Mat::Zero(dim, dim), Mat::Zero(dim, dim)};
    });
  }

  int dim() const { return dim_; }
  double multiplier() const { return scale_; }
  bool valid() const { return static_cast<bool>(chart_) || static_cast<bool>(polar_); }

  FormField scaled(double s) const {
    FormField f = *this;
    f.scale_ *= s;
    return f;
  }

  PolarValue polar(const PolarPoint& p) const {
    PolarValue v = polar_ ? polar_(p) : to_polar(chart_(p), p);
    if (scale_ != 1.0) v.drho *= scale_, v.dphi *= scale_;
    return v;
  }

  FormValue chart(const PolarPoint& p) const {
    FormValue v = chart_ ? chart_(p) : to_chart(polar_(p), p);
    if (scale_ != 1.0) v.du *= scale_, v.dv *= scale_;
    return v;
  }

  bool has_chart() const { return static_cast<bool>(chart_); }

 private:
  int dim_ = 0;
  double scale_ = 1.0;
  ChartFn chart_;
  PolarFn polar_;
};

}  // namespace isothermic

#endif
