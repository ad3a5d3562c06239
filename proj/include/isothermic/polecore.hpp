#ifndef ISOTHERMIC_POLECORE_HPP
#define ISOTHERMIC_POLECORE_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "connection.hpp"
#include "cover.hpp"
#include "errors.hpp"
#include "minkowski.hpp"
#include "quadrature.hpp"

namespace isothermic {

enum class SpanSignature { minkowski, spacelike, degenerate };
enum class PoleKind { first, second };

inline std::string to_string(SpanSignature s) {
  switch (s) {
    case SpanSignature::minkowski: return "minkowski";
    case SpanSignature::spacelike: return "spacelike";
    default: return "degenerate";
  }
}
inline std::string to_string(PoleKind k) { return k == PoleKind::first ? "first" : "second"; }

struct Classification {
  SpanSignature span_signature = SpanSignature::spacelike;
  double zeta = 0.0;  // positive eigenvalue of xiRe (Minkowski case)
  PoleKind kind = PoleKind::first;
};

// xi = Re((xiRe + i xiIm) alpha) with alpha = -dz/z, i.e. -xiRe dr/r + xiIm dphi.
struct PurePoleForm {
  Vec v, w, x, y;
  Mat xi_re, xi_im;

  int dim() const { return static_cast<int>(xi_re.rows()); }
  PurePoleForm scaled(double s) const {
    PurePoleForm r = *this;
    r.w *= s;
    r.y *= s;
    r.xi_re *= s;
    r.xi_im *= s;
    return r;
  }
};

inline PurePoleForm build_ppf(const Vec& v, const Vec& w, const Vec& x, const Vec& y, double tol = 1e-9) {
  const long d = v.size();
  if (w.size() != d || x.size() != d || y.size() != d) throw std::invalid_argument("build_ppf: dimension mismatch");
  PurePoleForm f{v, w, x, y, wedge(v, w), wedge(x, y)};
  if (!(f.xi_re.norm() > tol)) throw validation_error("build_ppf: zero span <v,w>");
  const double scale = std::max({1.0, v.norm(), w.norm()}) * std::max({1.0, x.norm(), y.norm()});
  for (const Vec* a : {&x, &y})
    for (const Vec* b : {&v, &w})
      if (std::abs(inner(*a, *b)) > tol * scale) throw validation_error("build_ppf: <x,y> not orthogonal to <v,w>");
  if ((f.xi_re * f.xi_im - f.xi_im * f.xi_re).norm() > tol * std::max(1.0, f.xi_re.norm() * f.xi_im.norm()))
    throw validation_error("build_ppf: xiRe and xiIm do not commute");
  return f;
}

inline FormField form_field(const PurePoleForm& f) {
  const Mat a = -f.xi_re, b = f.xi_im;
  return FormField::from_polar(f.dim(), [a, b](const PolarPoint&) { return PolarValue{a, b}; });
}

inline Classification classify(const PurePoleForm& f, double threshold = 1e-10) {
  const double vv = inner(f.v, f.v), vw = inner(f.v, f.w), ww = inner(f.w, f.w);
  const double tr = vv + ww, det = vv * ww - vw * vw;
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  const double l1 = 0.5 * tr - disc, l2 = 0.5 * tr + disc;  // l1 <= l2
  const double scale = std::max({1e-300, std::abs(l1), std::abs(l2)});
  const double th = threshold * scale;
  Classification c;
  if (l2 <= th) throw validation_error("classify: <v,w> span is not two-dimensional");
  if (l1 < -th) {
    c.span_signature = SpanSignature::minkowski;
    double zeta = 0.0;
    for (const auto& e : eig(f.xi_re)) zeta = std::max(zeta, e.value.real());
    c.zeta = zeta;
    c.kind = zeta < 1.0 ? PoleKind::first : PoleKind::second;
  } else if (l1 > th) {
    c.span_signature = SpanSignature::spacelike;
  } else {
    c.span_signature = SpanSignature::degenerate;
  }
  if (c.span_signature != SpanSignature::minkowski) c.kind = PoleKind::first;
  return c;
}

// e^{ln(r(p)/r(q)) xiRe} e^{(phi(q) - phi(p)) xiIm}
inline Mat ppf_primitive(const PurePoleForm& f, const PolarPoint& p, const PolarPoint& q) {
  return exp_skew(std::log(p.r / q.r) * f.xi_re) * exp_skew((q.phi - p.phi) * f.xi_im);
}

inline Mat ppf_monodromy(const PurePoleForm& f) { return exp_skew(-two_pi * f.xi_im); }

inline double ell(const PolarPoint& p, const PolarPoint& q) {
  const double t = std::log(p.r / q.r);
  return 1.0 + t * t;
}

// Eigenvectors V+- of xiRe with eigenvalues +-zeta (Minkowski span).
struct MinkowskiEigen {
  double zeta;
  Vec v_plus, v_minus;
};

inline MinkowskiEigen minkowski_eigen(const PurePoleForm& f) {
  const double vv = inner(f.v, f.v), vw = inner(f.v, f.w), ww = inner(f.w, f.w);
  const double z2 = vw * vw - vv * ww;
  if (!(z2 > 0.0)) throw validation_error("minkowski_eigen: span is not Minkowski");
  const double zeta = std::sqrt(z2);
  // xiRe on the basis (v, w): v -> -vw v + vv w, w -> -ww v + vw w.
  const double a = -vw, b = -ww, c = vv, d = vw;
  auto vec_for = [&](double mu) {
    Eigen::Vector2d e1(b, mu - a), e2(mu - d, c);
    Eigen::Vector2d e = e1.norm() >= e2.norm() ? e1 : e2;
    Vec r = e[0] * f.v + e[1] * f.w;
    return Vec(r / r.norm());
  };
  return {zeta, vec_for(zeta), vec_for(-zeta)};
}

// xiRe = V0 ^ W with V0 null (Euclidean unit) spanning the radical of <v,w>.
struct DegenerateData {
  Vec v0, w;
  double w_norm2;
};

inline DegenerateData degenerate_data(const PurePoleForm& f) {
  const double vv = inner(f.v, f.v), vw = inner(f.v, f.w), ww = inner(f.w, f.w);
  // kernel of the Gram matrix [[vv, vw], [vw, ww]]
  Eigen::Vector2d k = std::abs(vv) >= std::abs(ww) ? Eigen::Vector2d(-vw, vv) : Eigen::Vector2d(ww, -vw);
  if (!(k.norm() > 0.0)) k = Eigen::Vector2d(1.0, 0.0);
  Vec v0 = k[0] * f.v + k[1] * f.w;
  const double s = v0.norm();
  v0 /= s;
  k /= s;
  // W' = -k1 v + k0 w; V0 ^ W' = (k0^2 + k1^2) v ^ w
  const Vec wp = -k[1] * f.v + k[0] * f.w;
  const Vec W = wp / (k[0] * k[0] + k[1] * k[1]);
  return {v0, W, inner(W, W)};
}

struct ScaledLimit {
  double scale;
  Mat scaled;
  Mat asymptote;
  double error;
  bool has_limit;
};

inline ScaledLimit scaled_limit(const PurePoleForm& f, const PolarPoint& p, const PolarPoint& q) {
  const Classification c = classify(f);
  const Mat G = ppf_primitive(f, p, q);
  const int d = f.dim();
  switch (c.span_signature) {
    case SpanSignature::minkowski: {
      const MinkowskiEigen me = minkowski_eigen(f);
      const double s = std::pow(q.r / p.r, me.zeta);
      const Mat asym = outer_star(me.v_plus, me.v_minus) / inner(me.v_plus, me.v_minus);
      return {s, s * G, asym, (s * G - asym).norm(), true};
    }
    case SpanSignature::degenerate: {
      const DegenerateData dd = degenerate_data(f);
      const double s = 1.0 / ell(q, p);
      const Mat asym = -0.5 * dd.w_norm2 * outer_star(dd.v0, dd.v0);
      return {s, s * G, asym, (s * G - asym).norm(), true};
    }
    default:
      return {1.0, G, Mat::Zero(d, d), INFINITY, false};
  }
}

// Coordinate adapted to a meromorphic 1-form alpha = a(z) dz with residue rho at 0:
// zeta(q) = exp(rho^{-1} int_p^q alpha).
class AdaptedChart {
 public:
  AdaptedChart(std::function<cplx(cplx)> a, cplx residue, cplx seed)
      : a_(std::move(a)), res_(residue), seed_(seed) {
    if (!(std::abs(residue) > 1e-12)) throw validation_error("adapted_chart: residue vanishes");
    if (seed == 0.0) throw std::invalid_argument("adapted_chart: seed at the pole");
  }

  // int_seed^z alpha along the log-linear path z(s) = seed (z/seed)^s (principal branch).
  cplx integral(cplx z) const { return integral_between(seed_, z); }

  cplx integral_between(cplx z0, cplx z1) const {
    const cplx L = std::log(z1 / z0);
    const GaussLegendre& g = gauss_legendre_32();
    cplx s = 0.0;
    const int panels = 8;
    for (int k = 0; k < panels; ++k)
      s += g.integrate(
          [&](double t) {
            const cplx zt = z0 * std::exp(t * L);
            return a_(zt) * zt * L;
          },
          double(k) / panels, double(k + 1) / panels);
    return s;
  }

  cplx operator()(cplx z) const { return std::exp(integral(z) / res_); }

  // |a(z) - rho zeta'(z)/zeta(z)| with zeta' by central differences.
  double residual(cplx z, double h = 1e-5) const {
    const cplx zp = (*this)(z + h), zm = (*this)(z - h);
    const cplx dl = (zp - zm) / (2 * h) / (*this)(z);
    return std::abs(a_(z) - res_ * dl);
  }

  cplx residue() const { return res_; }

 private:
  std::function<cplx(cplx)> a_;
  cplx res_;
  cplx seed_;
};

inline AdaptedChart adapted_chart(std::function<cplx(cplx)> alpha, cplx residue, cplx seed) {
  return AdaptedChart(std::move(alpha), residue, seed);
}

// Radial schedule r_k = r(p) ratio^k towards s.
struct Schedule {
  int max_terms = 40;
  int min_terms = 6;
  double ratio = 0.5;
  double tol = 1e-10;
  double r_floor = 1e-12;
};

struct LimitResult {
  Mat limit;
  Vec vector;  // for vector-valued limits
  double error = INFINITY;
  bool converged = false;
  std::vector<double> radii;
  std::vector<double> increments;
  std::string diagnostic;
};

namespace detail {

// Geometric-tail extrapolation of the last three iterates.
template <class T>
std::pair<T, double> extrapolate(const std::vector<T>& seq) {
  const std::size_t n = seq.size();
  if (n < 3) return {seq.back(), n >= 2 ? (seq[n - 1] - seq[n - 2]).norm() : INFINITY};
  const double d1 = (seq[n - 1] - seq[n - 2]).norm(), d0 = (seq[n - 2] - seq[n - 3]).norm();
  if (d0 > 0.0 && d1 < 0.9 * d0) {
    const double q = d1 / d0;
    return {seq[n - 1] + (seq[n - 1] - seq[n - 2]) * (q / (1.0 - q)), d1 * q / (1.0 - q)};
  }
  return {seq.back(), d1};
}

}  // namespace detail

// Limit at s of Gamma_p^q of the gauged form xi ⋉_p psi, computed as
// Gamma_p^q(psi) Gamma_q^p(xi) along the radial schedule.
inline LimitResult residual_limit(const FormField& pole_form, const PurePoleForm& xi, const PolarPoint& p,
                                  const Schedule& sch = {}, const IntegrationOptions& o = {}) {
  const int d = xi.dim();
  LimitResult res;
  std::vector<Mat> seq;
  Mat G = Mat::Identity(d, d);
  PolarPoint prev = p;
  double rk = p.r;
  for (int k = 1; k <= sch.max_terms; ++k) {
    rk *= sch.ratio;
    if (rk < sch.r_floor) break;
    const PolarPoint q{rk, p.phi};
    G = G * primitive(pole_form, PathSpec{prev, q}, o).value;
    prev = q;
    const Mat X = ppf_primitive(xi, q, p);
    const Mat L = G * X;
    const double noise = 1e-15 * G.norm() * X.norm();
    if (!seq.empty()) {
      const double inc = (L - seq.back()).norm();
      res.increments.push_back(inc);
      if (inc < noise && k > sch.min_terms) {
        res.diagnostic = "stopped at the rounding floor";
        break;
      }
    }
    seq.push_back(L);
    res.radii.push_back(rk);
    if (k >= sch.min_terms && !res.increments.empty() && res.increments.back() <= sch.tol) break;
  }
  auto [lim, err] = detail::extrapolate(seq);
  res.limit = lim;
  res.error = err;
  res.converged = err <= std::max(sch.tol, 1e-15 * lim.norm() * 10);
  if (!res.converged && res.diagnostic.empty()) res.diagnostic = "sequence not Cauchy within tolerance";
  return res;
}

// K(p) = lim |z(q)/z(p)|^zeta Gamma_p^q(psi) V+ / <V+, V->, along the radial schedule.
inline LimitResult k_map(const FormField& pole_form, const PurePoleForm& xi, const PolarPoint& p,
                         const Schedule& sch = {}, const IntegrationOptions& o = {}) {
  const Classification c = classify(xi);
  if (c.span_signature != SpanSignature::minkowski) throw std::invalid_argument("k_map: form is not Minkowski");
  const MinkowskiEigen me = minkowski_eigen(xi);
  const Vec base = me.v_plus / inner(me.v_plus, me.v_minus);
  const int d = xi.dim();
  LimitResult res;
  std::vector<Vec> seq;
  Mat G = Mat::Identity(d, d);
  PolarPoint prev = p;
  double rk = p.r;
  for (int k = 1; k <= sch.max_terms; ++k) {
    rk *= sch.ratio;
    if (rk < sch.r_floor) break;
    const PolarPoint q{rk, p.phi};
    G = G * primitive(pole_form, PathSpec{prev, q}, o).value;
    prev = q;
    const Vec K = std::pow(rk / p.r, me.zeta) * (G * base);
    if (!seq.empty()) res.increments.push_back((K - seq.back()).norm());
    seq.push_back(K);
    res.radii.push_back(rk);
    if (k >= sch.min_terms && res.increments.back() <= sch.tol) break;
  }
  auto [lim, err] = detail::extrapolate(seq);
  res.vector = lim;
  res.error = err;
  res.converged = err <= sch.tol;
  const double nullity = std::abs(inner(lim, lim)) / lim.squaredNorm();
  if (nullity > 1e-6) {
    res.converged = false;
    res.diagnostic = "limit is not null";
  } else if (!res.converged) {
    res.diagnostic = "sequence not Cauchy within tolerance";
  }
  return res;
}

}  // namespace isothermic

#endif
