#ifndef ISOTHERMIC_CONNECTION_HPP
#define ISOTHERMIC_CONNECTION_HPP

#include <cmath>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "cover.hpp"
#include "errors.hpp"
#include "minkowski.hpp"

namespace isothermic {

// Piecewise path on the cover, linear in (log r, phi) between waypoints.
struct PathSpec {
  std::vector<PolarPoint> waypoints;

  PathSpec() = default;
  PathSpec(std::initializer_list<PolarPoint> pts) : waypoints(pts) {}
  explicit PathSpec(std::vector<PolarPoint> pts) : waypoints(std::move(pts)) {}

  // Radially to r(q), then along the circle to phi(q).
  static PathSpec radial_then_arc(const PolarPoint& p, const PolarPoint& q) {
    PathSpec s{p};
    if (q.r != p.r) s.waypoints.push_back({q.r, p.phi});
    if (q.phi != p.phi) s.waypoints.push_back(q);
    if (s.waypoints.size() == 1) s.waypoints.push_back(q);
    return s;
  }

  PathSpec& then(const PolarPoint& q) {
    waypoints.push_back(q);
    return *this;
  }

  const PolarPoint& start() const { return waypoints.front(); }
  const PolarPoint& end() const { return waypoints.back(); }

  void validate() const {
    if (waypoints.empty()) throw std::invalid_argument("PathSpec: no waypoints");
    for (std::size_t i = 0; i < waypoints.size(); ++i) {
      const PolarPoint& w = waypoints[i];
      if (!(w.r > 0.0) || !std::isfinite(w.r) || !std::isfinite(w.phi))
        throw std::invalid_argument("PathSpec: waypoint outside the punctured disc");
      if (i > 0 && w.r == waypoints[i - 1].r && w.phi == waypoints[i - 1].phi)
        throw std::invalid_argument("PathSpec: consecutive waypoints coincide");
    }
  }
};

struct IntegrationOptions {
  double steps = 48.0;  // RK4 steps per unit length in (log r, phi), before refinement
  int min_steps = 8;    // per segment
  double tol = 1e-11;   // relative Richardson error
  int max_refinements = 10;
  int reorth_interval = 0;  // 0 disables; projecting a strongly boosted map amplifies its residual
};

struct Primitive {
  Mat value;
  long step_count = 0;
  double error_estimate = 0.0;
};

namespace detail {

template <class Eval>
void rk4_run(Mat& G, Eval&& A, int N, int reorth_interval, long& counter, double* peak = nullptr) {
  const double h = 1.0 / N;
  Mat a0 = A(0.0);
  for (int i = 0; i < N; ++i) {
    const double s = i * h;
    const Mat am = A(s + 0.5 * h);
    const Mat a1 = A(s + h);
    const Mat k1 = G * a0;
    const Mat k2 = (G + 0.5 * h * k1) * am;
    const Mat k3 = (G + 0.5 * h * k2) * am;
    const Mat k4 = (G + h * k3) * a1;
    G += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    a0 = a1;
    ++counter;
    if (peak) *peak = std::max(*peak, G.norm());
    if (reorth_interval > 0 && counter % reorth_interval == 0 && G.norm() < 1e4) G = reorthonormalize(G);
  }
}

inline int segment_steps(double len, const IntegrationOptions& o) {
  return std::max(o.min_steps, static_cast<int>(std::ceil(o.steps * len)));
}

inline Mat finish(const Mat& G) {
  if (G.norm() < 1e4 && lorentz_residual(G) < 1e-6) return reorthonormalize(G);
  return G;
}

// The error is measured against the largest intermediate norm: a long path that passes through
// large boosts cancels back down, and roundoff there scales with the peak, not the end value.
template <class Run>
Primitive refine(Run&& run, const IntegrationOptions& o) {
  long count = 0;
  int mult = 1;
  double peak = 1.0;
  Mat prev = run(mult, count, peak);
  for (int level = 0; level < o.max_refinements; ++level) {
    mult *= 2;
    Mat cur = run(mult, count, peak);
    const double err = (cur - prev).norm() / (15.0 * std::max(peak, cur.norm()));
    if (err <= o.tol) return {finish(cur + (cur - prev) / 15.0), count, err};
    prev = std::move(cur);
  }
  throw convergence_error("primitive: Richardson error above tolerance at the step cap");
}

}  // namespace detail

// Fixed-step RK4 along the path, steps per segment = max(min_steps, ceil(steps * length)).
inline Mat integrate_fixed(const FormField& form, const PathSpec& path, double steps_per_unit, int min_steps = 1,
                           int reorth_interval = 0) {
  path.validate();
  Mat G = Mat::Identity(form.dim(), form.dim());
  long count = 0;
  IntegrationOptions o;
  o.steps = steps_per_unit;
  o.min_steps = min_steps;
  for (std::size_t k = 1; k < path.waypoints.size(); ++k) {
    const PolarPoint a = path.waypoints[k - 1], b = path.waypoints[k];
    const double ra = a.rho(), dr = b.rho() - ra, dp = b.phi - a.phi;
    auto A = [&](double s) {
      const PolarValue v = form.polar(PolarPoint::from_log(ra + s * dr, a.phi + s * dp));
      return Mat(v.drho * dr + v.dphi * dp);
    };
    detail::rk4_run(G, A, detail::segment_steps(std::hypot(dr, dp), o), reorth_interval, count);
  }
  return G;
}

// Gamma_p^q for p = first waypoint, q = last: dGamma = Gamma psi, Gamma_p^p = id.
inline Primitive primitive(const FormField& form, const PathSpec& path, const IntegrationOptions& o = {}) {
  path.validate();
  const int d = form.dim();
  if (path.waypoints.size() == 1) return {Mat::Identity(d, d), 0, 0.0};
  auto run = [&](int mult, long& count, double& peak) {
    Mat G = Mat::Identity(d, d);
    for (std::size_t k = 1; k < path.waypoints.size(); ++k) {
      const PolarPoint a = path.waypoints[k - 1], b = path.waypoints[k];
      const double ra = a.rho(), dr = b.rho() - ra, dp = b.phi - a.phi;
      auto A = [&](double s) {
        const PolarValue v = form.polar(PolarPoint::from_log(ra + s * dr, a.phi + s * dp));
        return Mat(v.drho * dr + v.dphi * dp);
      };
      detail::rk4_run(G, A, mult * detail::segment_steps(std::hypot(dr, dp), o), o.reorth_interval, count,
                       &peak);
    }
    return G;
  };
  return detail::refine(run, o);
}

// Straight chart segment z0 -> z1; usable through s when the form is smooth there.
inline Primitive primitive_chart_segment(const FormField& form, cplx z0, cplx z1, const IntegrationOptions& o = {}) {
  const int d = form.dim();
  const cplx dz = z1 - z0;
  if (dz == 0.0) return {Mat::Identity(d, d), 0, 0.0};
  auto run = [&](int mult, long& count, double& peak) {
    Mat G = Mat::Identity(d, d);
    auto A = [&](double s) {
      const cplx z = z0 + s * dz;
      const FormValue v = form.chart(PolarPoint{std::abs(z), std::arg(z)});
      return Mat(v.du * dz.real() + v.dv * dz.imag());
    };
    detail::rk4_run(G, A, mult * detail::segment_steps(std::abs(dz), o), o.reorth_interval, count, &peak);
    return G;
  };
  return detail::refine(run, o);
}

// Loop at the base point with winding number -1 about s: phi decreases by 2 pi.
inline Primitive monodromy(const FormField& form, const PolarPoint& base, const IntegrationOptions& o = {}) {
  return primitive(form, PathSpec{base, PolarPoint{base.r, base.phi - two_pi}}, o);
}

// Lorentz-map-valued gauge field with optional closed-form derivative.
struct GaugeField {
  using Map = std::function<Mat(const PolarPoint&)>;
  using PolarDerivative = std::function<PolarValue(const PolarPoint&)>;
  Map g;
  PolarDerivative dg;  // d/drho, d/dphi; finite differences when empty
  double fd_step = 1e-4;

  PolarValue derivative(const PolarPoint& p) const {
    if (dg) return dg(p);
    const double h = fd_step;
    auto D = [&](double er, double ep, double hh) {
      return Mat((g(PolarPoint::from_log(p.rho() + er * hh, p.phi + ep * hh)) -
                  g(PolarPoint::from_log(p.rho() - er * hh, p.phi - ep * hh))) /
                 (2 * hh));
    };
    return {Mat((4.0 * D(1, 0, h) - D(1, 0, 2 * h)) / 3.0), Mat((4.0 * D(0, 1, h) - D(0, 1, 2 * h)) / 3.0)};
  }
};

// g^{-1} psi g + g^{-1} dg
inline FormField gauge(const FormField& form, GaugeField gf) {
  return FormField::from_polar(form.dim(), [form, gf](const PolarPoint& p) {
    const Mat g = gf.g(p);
    Eigen::PartialPivLU<Mat> lu(g);
    const double det = std::abs(lu.determinant());
    if (!(det > 1e-12 * std::pow(std::max(1.0, g.norm()), g.rows())))
      throw validation_error("gauge: gauge map is singular at the evaluation point");
    const Mat gi = lu.inverse();
    const PolarValue v = form.polar(p);
    const PolarValue dg = gf.derivative(p);
    return PolarValue{gi * v.drho * g + gi * dg.drho, gi * v.dphi * g + gi * dg.dphi};
  });
}

}  // namespace isothermic

#endif
