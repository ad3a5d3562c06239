#ifndef ISOTHERMIC_TRANSFORMS_HPP
#define ISOTHERMIC_TRANSFORMS_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "connection.hpp"
#include "cover.hpp"
#include "errors.hpp"
#include "first_order.hpp"
#include "minkowski.hpp"
#include "parallel.hpp"
#include "polecore.hpp"
#include "second_order.hpp"
#include "surface.hpp"

namespace isothermic {

// ---------------------------------------------------------------------------------------------
// Grids on the punctured disc (on the universal cover: phi is not reduced).

struct GridSpec {
  int nr = 6;
  int nphi = 12;
  double phimax = two_pi;
  double rmin = 0.05;
  double rmax = 0.95;

  void validate(double r0) const {
    if (nr < 0 || nphi < 0) throw validation_error("grid: negative size");
    if (!(rmin > 0.0) || !(rmax >= rmin) || rmax > r0) throw validation_error("grid: radii must satisfy 0 < rmin <= rmax <= r0");
    if (!std::isfinite(phimax)) throw validation_error("grid: phimax must be finite");
  }
  double radius(int i) const { return nr <= 1 ? rmax : rmin * std::pow(rmax / rmin, static_cast<double>(i) / (nr - 1)); }
  double angle(int j) const { return nphi <= 1 ? 0.0 : phimax * j / (nphi - 1); }
  int size() const { return nr * nphi; }
  PolarPoint point(int k) const { return {radius(k / nphi), angle(k % nphi)}; }
};

struct TransformSample {
  PolarPoint q;
  Vec value;
};

// Gamma_p^q for every grid point q, over one radial spine at phi(p) plus angular arcs.
inline std::vector<Mat> spanning_tree_primitives(const FormField& form, const PolarPoint& p, const GridSpec& grid,
                                                 const IntegrationOptions& o = {}) {
  const int d = form.dim();
  std::vector<Mat> spine(grid.nr);
  {
    Mat G = Mat::Identity(d, d);
    PolarPoint prev = p;
    for (int i = grid.nr - 1; i >= 0; --i) {
      if (grid.radius(i) > p.r) continue;
      const PolarPoint q{grid.radius(i), p.phi};
      if (q.r != prev.r) G = G * primitive(form, PathSpec{prev, q}, o).value;
      spine[i] = G;
      prev = q;
    }
    G = Mat::Identity(d, d);
    prev = p;
    for (int i = 0; i < grid.nr; ++i) {
      if (grid.radius(i) <= p.r) continue;
      const PolarPoint q{grid.radius(i), p.phi};
      G = G * primitive(form, PathSpec{prev, q}, o).value;
      spine[i] = G;
      prev = q;
    }
  }
  std::vector<Mat> out(grid.size());
  parallel_for(grid.nr, [&](int i) {
    const double r = grid.radius(i);
    auto walk = [&](int j0, int j1, int step) {
      Mat G = spine[i];
      double prev = p.phi;
      for (int j = j0; j != j1; j += step) {
        const double phi = grid.angle(j);
        if (phi != prev) G = G * primitive(form, PathSpec{{r, prev}, {r, phi}}, o).value;
        out[i * grid.nphi + j] = G;
        prev = phi;
      }
    };
    int split = 0;
    while (split < grid.nphi && grid.angle(split) < p.phi) ++split;
    walk(split, grid.nphi, 1);
    walk(split - 1, -1, -1);
  });
  return out;
}

// ---------------------------------------------------------------------------------------------
// Limit studies.

enum class LimitClass { converged_point, converged_sphere, oscillating, inconclusive };

inline std::string to_string(LimitClass c) {
  switch (c) {
    case LimitClass::converged_point: return "converged-to-point";
    case LimitClass::converged_sphere: return "converged-to-sphere";
    case LimitClass::oscillating: return "oscillating";
    default: return "inconclusive";
  }
}

struct ConvergenceRow {
  double r;
  double distance;   // to the limit point or the limit sphere
  double increment;  // proj_dist to the previous term
};

struct ConvergenceReport {
  std::string mode;
  LimitClass classification = LimitClass::inconclusive;
  Vec limit;   // point mode
  Mat sphere;  // sphere mode: basis of the 4-dim subspace
  std::vector<ConvergenceRow> rows;
  std::vector<Vec> points;
  double final_distance = INFINITY;
  double oscillation = 0.0;
  double rate = 0.0;  // fitted exponent of distance ~ r^rate
  double tol = 0.0;
  std::string diagnostic;
};

struct LimitOptions {
  double tol = 1e-4;
  double oscillation_floor = 1e-2;
  int tail = 6;
};

namespace detail {

inline double fit_rate(const std::vector<ConvergenceRow>& rows) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = rows.size() / 2; k < rows.size(); ++k)
    if (rows[k].distance > 1e-14 && rows[k].r > 0.0) pts.emplace_back(std::log(rows[k].r), std::log(rows[k].distance));
  if (pts.size() < 2) return 0.0;
  double mx = 0, my = 0;
  for (auto& [x, y] : pts) mx += x, my += y;
  mx /= pts.size();
  my /= pts.size();
  double sxy = 0, sxx = 0;
  for (auto& [x, y] : pts) sxy += (x - mx) * (y - my), sxx += (x - mx) * (x - mx);
  return sxx > 0 ? sxy / sxx : 0.0;
}

inline double tail_oscillation(const std::vector<Vec>& pts, int tail) {
  double m = 0.0;
  const int n = static_cast<int>(pts.size());
  for (int a = std::max(0, n - tail); a < n; ++a)
    for (int b = a + 1; b < n; ++b) m = std::max(m, proj_dist(pts[a], pts[b]));
  return m;
}

}  // namespace detail

// Minkowski-orthonormal basis of the orthogonal complement of span(B) (assumed of signature (k-1,1)).
inline std::vector<Vec> sphere_normals(const Mat& B) {
  const int d = static_cast<int>(B.rows());
  Mat A = B.transpose() * gram(d);
  Eigen::FullPivLU<Mat> lu(A);
  Mat K = lu.kernel();
  std::vector<Vec> out;
  for (int c = 0; c < K.cols(); ++c) {
    Vec v = K.col(c);
    for (const Vec& u : out) v -= inner(v, u) * u;
    const double n2 = inner(v, v);
    if (!(n2 > 0.0)) throw validation_error("sphere_normals: complement is not spacelike");
    out.push_back(v / std::sqrt(n2));
  }
  return out;
}

// Distance of a projective point to the null set of a 4-dim subspace: |<x, n_i>| for unit x.
inline double sphere_distance(const Vec& x, const std::vector<Vec>& normals) {
  const Vec xh = x / x.norm();
  double s = 0.0;
  for (const Vec& n : normals) s += inner(xh, n) * inner(xh, n);
  return std::sqrt(s);
}

inline ConvergenceReport limit_study_point(const std::vector<double>& radii, const std::vector<Vec>& points,
                                           const std::optional<Vec>& reference, const LimitOptions& lo = {}) {
  ConvergenceReport rep;
  rep.mode = "point";
  rep.tol = lo.tol;
  rep.points = points;
  if (points.empty()) {
    rep.diagnostic = "empty sequence";
    return rep;
  }
  rep.limit = reference ? *reference : points.back();
  for (std::size_t k = 0; k < points.size(); ++k)
    rep.rows.push_back({radii[k], proj_dist(points[k], rep.limit), k ? proj_dist(points[k], points[k - 1]) : NAN});
  rep.final_distance = rep.rows.back().distance;
  rep.oscillation = detail::tail_oscillation(points, lo.tail);
  rep.rate = detail::fit_rate(rep.rows);
  const double last_inc = points.size() > 1 ? rep.rows.back().increment : INFINITY;
  if (reference ? rep.final_distance <= lo.tol : last_inc <= lo.tol) {
    rep.classification = LimitClass::converged_point;
    if (!reference) rep.final_distance = last_inc;
  } else if (rep.oscillation >= lo.oscillation_floor) {
    rep.classification = LimitClass::oscillating;
  } else {
    rep.diagnostic = "tolerances not separated: distance above tol, oscillation below floor";
  }
  return rep;
}

inline ConvergenceReport limit_study_sphere(const std::vector<double>& radii, const std::vector<Vec>& points,
                                            const Mat& basis, const LimitOptions& lo = {}) {
  ConvergenceReport rep;
  rep.mode = "sphere";
  rep.tol = lo.tol;
  rep.sphere = basis;
  rep.points = points;
  if (points.empty()) {
    rep.diagnostic = "empty sequence";
    return rep;
  }
  const std::vector<Vec> normals = sphere_normals(basis);
  for (std::size_t k = 0; k < points.size(); ++k)
    rep.rows.push_back({radii[k], sphere_distance(points[k], normals), k ? proj_dist(points[k], points[k - 1]) : NAN});
  rep.final_distance = rep.rows.back().distance;
  rep.oscillation = detail::tail_oscillation(points, lo.tail);
  rep.rate = detail::fit_rate(rep.rows);
  rep.limit = points.back();
  if (rep.final_distance <= lo.tol && rep.oscillation >= lo.oscillation_floor)
    rep.classification = LimitClass::converged_sphere;
  else if (rep.final_distance <= lo.tol && rep.oscillation <= lo.tol)
    rep.classification = LimitClass::converged_point;
  else if (rep.oscillation >= lo.oscillation_floor)
    rep.classification = LimitClass::oscillating;
  else
    rep.diagnostic = "tolerances not separated";
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Transform setup shared by the operations below.

struct TransformOptions {
  IntegrationOptions integ;
  Schedule schedule;
  LimitOptions limit;
  bool with_limit = true;
  bool check_pair = true;
};

enum class PoleRegime { regular, first_order, so_first_kind, so_degenerate, so_spacelike, so_second_kind };

inline std::string to_string(PoleRegime r) {
  switch (r) {
    case PoleRegime::regular: return "regular";
    case PoleRegime::first_order: return "first-order";
    case PoleRegime::so_first_kind: return "second-order-minkowski-first-kind";
    case PoleRegime::so_degenerate: return "second-order-degenerate";
    case PoleRegime::so_spacelike: return "second-order-spacelike";
    default: return "second-order-minkowski-second-kind";
  }
}

inline PoleRegime regime(const QuadDiff& Q, double lambda) {
  switch (Q.pole_order()) {
    case 0: return PoleRegime::regular;
    case 1: return PoleRegime::first_order;
    default: {
      const double a = 1.0 - 2.0 * lambda * Q.c2.real();
      if (std::abs(a) <= 1e-12) return PoleRegime::so_degenerate;
      if (a < 0.0) return PoleRegime::so_spacelike;
      return a < 1.0 ? PoleRegime::so_first_kind : PoleRegime::so_second_kind;
    }
  }
}

inline std::vector<double> schedule_radii(const PolarPoint& p, const Schedule& s) {
  std::vector<double> r;
  double rk = p.r;
  for (int k = 1; k <= s.max_terms; ++k) {
    rk *= s.ratio;
    if (rk < s.r_floor) break;
    r.push_back(rk);
  }
  return r;
}

// Cumulative Gamma_p^{q_k} along the radius through p.
inline std::vector<Mat> radial_primitives(const FormField& form, const PolarPoint& p, const std::vector<double>& radii,
                                          const IntegrationOptions& o = {}) {
  std::vector<Mat> out;
  Mat G = Mat::Identity(form.dim(), form.dim());
  PolarPoint prev = p;
  for (double r : radii) {
    const PolarPoint q{r, p.phi};
    G = G * primitive(form, PathSpec{prev, q}, o).value;
    out.push_back(G);
    prev = q;
  }
  return out;
}

inline void check_isothermic_pair(const SurfaceModel& model, const QuadDiff& Q, const GridSpec& grid) {
  std::vector<PolarPoint> pts;
  const int ni = std::min(grid.nr, 3), nj = std::min(grid.nphi, 3);
  for (int i = 0; i < ni; ++i)
    for (int j = 0; j < nj; ++j)
      pts.push_back({grid.radius(ni > 1 ? i * (grid.nr - 1) / (ni - 1) : 0), grid.angle(nj > 1 ? j * (grid.nphi - 1) / (nj - 1) : 0)});
  if (pts.empty()) return;
  const FactorizationReport f = factorization_check(model, Q, pts);
  if (!f.isothermic) throw validation_error("transform: (f, Q) is not an isothermic pair (factorization residual " +
                                            std::to_string(f.max_residual) + ")");
}

// ---------------------------------------------------------------------------------------------
// Limit sequences at s.

struct LimitData {
  PoleRegime regime;
  ConvergenceReport report;
  Mat residual_limit;  // Gamma_p^s(⋉) when computed
};

namespace detail {

inline Mat extrapolated(const std::vector<Mat>& seq) { return extrapolate(seq).first; }

inline Vec lifted_o(int d) {
  Vec o = Vec::Zero(d);
  o[idx::o] = 1.0;
  return o;
}

}  // namespace detail

inline LimitData calapso_limit(const SurfaceModel& model, const QuadDiff& Q, double lambda, const PolarPoint& p,
                               const TransformOptions& opt = {}) {
  LimitData out;
  out.regime = regime(Q, lambda);
  const int d = model.dim();
  const std::vector<double> radii = schedule_radii(p, opt.schedule);
  std::vector<Vec> pts;
  switch (out.regime) {
    case PoleRegime::regular: {
      const FormField F = omega(model, Q).scaled(lambda);
      const Mat Gs = primitive_chart_segment(F, p.z(), 0.0, opt.integ).value;
      const std::vector<Mat> G = radial_primitives(F, p, radii, opt.integ);
      for (std::size_t k = 0; k < radii.size(); ++k) pts.push_back(G[k] * model.lift(std::polar(radii[k], p.phi)));
      out.residual_limit = Gs;
      out.report = limit_study_point(radii, pts, Vec(Gs * model.lift(0.0)), opt.limit);
      break;
    }
    case PoleRegime::first_order: {
      const FormField F = omega(model, Q).scaled(lambda);
      const PurePoleForm xi = fo_ppf(model, Q).xi.scaled(lambda);
      const std::vector<Mat> G = radial_primitives(F, p, radii, opt.integ);
      std::vector<Mat> Ls;
      for (std::size_t k = 0; k < radii.size(); ++k) {
        const PolarPoint q{radii[k], p.phi};
        pts.push_back(G[k] * model.lift(q.z()));
        Ls.push_back(G[k] * ppf_primitive(xi, q, p));
      }
      out.residual_limit = detail::extrapolated(Ls);
      out.report = limit_study_point(radii, pts, Vec(out.residual_limit * model.lift(0.0)), opt.limit);
      break;
    }
    default: {
      const SecondOrderGauge G(model, Q, lambda);
      const Mat gp = G.g(p);
      const std::vector<Mat> Gs = radial_primitives(G.psi(), p, radii, opt.integ);
      const Vec o = detail::lifted_o(d);
      for (const Mat& X : Gs) pts.push_back(gp * X * o);
      std::vector<Mat> Ls;
      for (std::size_t k = 0; k < radii.size(); ++k) Ls.push_back(Gs[k] * ppf_primitive(G.xi(), {radii[k], p.phi}, p));
      out.residual_limit = detail::extrapolated(Ls);
      if (out.regime == PoleRegime::so_spacelike) {
        Mat B(d, 4);
        const Mat A = gp * out.residual_limit;
        B << A.col(idx::o), A.col(idx::iota), A.col(idx::tu), A.col(idx::tv);
        out.report = limit_study_sphere(radii, pts, B, opt.limit);
      } else if (out.regime == PoleRegime::so_degenerate) {
        out.report = limit_study_point(radii, pts, std::nullopt, opt.limit);
      } else {
        const MinkowskiEigen me = minkowski_eigen(G.xi());
        const Vec base = me.v_plus / inner(me.v_plus, me.v_minus);
        std::vector<Vec> Ks;
        for (std::size_t k = 0; k < radii.size(); ++k) Ks.push_back(std::pow(radii[k] / p.r, me.zeta) * (Gs[k] * base));
        const Vec K = detail::extrapolate(Ks).first;
        out.report = limit_study_point(radii, pts, Vec(gp * K), opt.limit);
      }
    }
  }
  return out;
}

inline LimitData darboux_limit(const SurfaceModel& model, const QuadDiff& Q, double lambda, const PolarPoint& p,
                               const Vec& init, const TransformOptions& opt = {}) {
  LimitData out;
  out.regime = regime(Q, lambda);
  const std::vector<double> radii = schedule_radii(p, opt.schedule);
  std::vector<Vec> pts;
  switch (out.regime) {
    case PoleRegime::regular: {
      const FormField F = omega(model, Q).scaled(lambda);
      const Mat Gs = primitive_chart_segment(F, p.z(), 0.0, opt.integ).value;
      for (const Mat& G : radial_primitives(F, p, radii, opt.integ)) pts.push_back(adjoint(G) * init);
      out.report = limit_study_point(radii, pts, Vec(adjoint(Gs) * init), opt.limit);
      break;
    }
    case PoleRegime::first_order: {
      const FormField F = omega(model, Q).scaled(lambda);
      for (const Mat& G : radial_primitives(F, p, radii, opt.integ)) pts.push_back(adjoint(G) * init);
      out.report = limit_study_point(radii, pts, model.lift(0.0), opt.limit);
      break;
    }
    default: {
      const SecondOrderGauge G(model, Q, lambda);
      const Vec y = adjoint(G.g(p)) * init;
      const std::vector<Mat> Gs = radial_primitives(G.psi(), p, radii, opt.integ);
      for (std::size_t k = 0; k < radii.size(); ++k) {
        const PolarPoint q{radii[k], p.phi};
        Vec u = adjoint(Gs[k]) * y;
        u /= u.norm();
        pts.push_back(G.g(q) * u);
      }
      out.report = limit_study_point(radii, pts, model.lift(0.0), opt.limit);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Calapso and Darboux transforms on a grid.

struct CalapsoResult {
  double lambda = 0.0;
  PolarPoint base;
  GridSpec grid;
  std::vector<TransformSample> samples;
  std::optional<LimitData> limit;
};

struct DarbouxResult {
  double lambda = 0.0;
  PolarPoint base;
  Vec init;
  GridSpec grid;
  std::vector<TransformSample> samples;
  std::optional<LimitData> limit;
};

inline void check_base(const SurfaceModel& model, const PolarPoint& p) {
  if (!(p.r > 0.0) || p.r > model.r0() || !std::isfinite(p.phi))
    throw validation_error("transform: base point outside the punctured disc");
}

// f_{lambda,p}(q) = Gamma_p^q(lambda Omega) f(q)
inline CalapsoResult calapso(const SurfaceModel& model, const QuadDiff& Q, double lambda, const PolarPoint& p,
                             const GridSpec& grid, const TransformOptions& opt = {}) {
  check_base(model, p);
  grid.validate(model.r0());
  if (opt.check_pair && Q.pole_order() > 0) check_isothermic_pair(model, Q, grid);
  CalapsoResult res;
  res.lambda = lambda;
  res.base = p;
  res.grid = grid;
  const FormField F = omega(model, Q).scaled(lambda);
  const std::vector<Mat> G = spanning_tree_primitives(F, p, grid, opt.integ);
  res.samples.resize(G.size());
  parallel_for(static_cast<int>(G.size()), [&](int k) {
    const PolarPoint q = grid.point(k);
    res.samples[k] = {q, G[k] * model.lift(q.z())};
  });
  if (opt.with_limit) res.limit = calapso_limit(model, Q, lambda, p, opt);
  return res;
}

// f^(q) = Gamma_q^p(lambda Omega) f^_p; init must avoid the Calapso image (sampled check).
inline DarbouxResult darboux(const SurfaceModel& model, const QuadDiff& Q, double lambda, const PolarPoint& p,
                             const Vec& init, const GridSpec& grid, const TransformOptions& opt = {}) {
  check_base(model, p);
  grid.validate(model.r0());
  if (lambda == 0.0) throw validation_error("darboux: lambda must be nonzero");
  if (init.size() != model.dim() || !(init.norm() > 0.0) || !init.allFinite())
    throw validation_error("darboux: init must be a nonzero vector of dimension n+2");
  if (std::abs(inner(init, init)) > 1e-10 * init.squaredNorm()) throw validation_error("darboux: init is not null");
  if (opt.check_pair && Q.pole_order() > 0) check_isothermic_pair(model, Q, grid);
  DarbouxResult res;
  res.lambda = lambda;
  res.base = p;
  res.init = init;
  res.grid = grid;
  const FormField F = omega(model, Q).scaled(lambda);
  const std::vector<Mat> G = spanning_tree_primitives(F, p, grid, opt.integ);
  res.samples.resize(G.size());
  std::vector<double> image_dist(G.size());
  parallel_for(static_cast<int>(G.size()), [&](int k) {
    const PolarPoint q = grid.point(k);
    image_dist[k] = proj_dist(G[k] * model.lift(q.z()), init);
    res.samples[k] = {q, adjoint(G[k]) * init};
  });
  for (double dd : image_dist)
    if (dd < 1e-6) throw validation_error("darboux: init lies on the Calapso image (sampled distance < 1e-6)");
  if (opt.with_limit) res.limit = darboux_limit(model, Q, lambda, p, init, opt);
  return res;
}

// Seeded random point of the light cone: the lift of a standard normal point of R^n.
inline Vec random_light_point(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = N(rng);
  return euclidean_lift(x, n);
}

// ---------------------------------------------------------------------------------------------
// Monodromy structure.

struct Metric {
  std::string name;
  double value;
};

struct StructureReport {
  std::string regime;
  double lambda = 0.0;
  double lambda_eff = 0.0;
  PolarPoint base;
  Mat monodromy;
  double monodromy_error = 0.0;
  std::vector<cplx> eigenvalues;
  std::vector<cplx> expected;
  std::vector<Metric> metrics;
  std::vector<std::pair<std::string, Vec>> vectors;

  double metric(const std::string& n) const {
    for (const auto& m : metrics)
      if (m.name == n) return m.value;
    throw std::out_of_range("no metric " + n);
  }
  const Vec& vector(const std::string& n) const {
    for (const auto& v : vectors)
      if (v.first == n) return v.second;
    throw std::out_of_range("no vector " + n);
  }
};

// Max over expected values e of min |got - e| / |e|.
inline double relative_spectrum_mismatch(const std::vector<cplx>& got, const std::vector<cplx>& expected) {
  double worst = 0.0;
  for (const cplx& e : expected) {
    double b = INFINITY;
    for (const cplx& g : got) b = std::min(b, std::abs(g - e) / std::abs(e));
    worst = std::max(worst, b);
  }
  return worst;
}

inline Mat mat_power(const Mat& M, int j) {
  Mat R = Mat::Identity(M.rows(), M.cols());
  for (int k = 0; k < j; ++k) R = R * M;
  return R;
}

inline StructureReport fo_monodromy_structure(const SurfaceModel& model, const QuadDiff& Q, double lambda,
                                              const PolarPoint& p, const TransformOptions& opt = {}) {
  if (Q.pole_order() != 1) throw validation_error("fo_monodromy_structure: Q must have a simple pole");
  check_base(model, p);
  const int d = model.dim();
  StructureReport rep;
  rep.regime = to_string(PoleRegime::first_order);
  rep.lambda = rep.lambda_eff = lambda;
  rep.base = p;
  const FormField F = omega(model, Q).scaled(lambda);
  const Primitive P = monodromy(F, p, opt.integ);
  rep.monodromy = P.value;
  rep.monodromy_error = P.error_estimate;
  rep.eigenvalues = eigenvalues(P.value);
  rep.expected.assign(d, 1.0);
  const Mat N = P.value - Mat::Identity(d, d);
  const Mat N2 = N * N;
  rep.metrics.push_back({"spectrum_mismatch", spectrum_mismatch(rep.eigenvalues, rep.expected)});
  rep.metrics.push_back({"nilpotent_cube", (N2 * N).norm()});
  rep.metrics.push_back({"nilpotent_square", N2.norm()});
  Eigen::JacobiSVD<Mat> svd(N2, Eigen::ComputeFullU);
  const Vec inv = svd.matrixU().col(0);
  const FirstOrderData fo = fo_ppf(model, Q);
  const PurePoleForm xi = fo.xi.scaled(lambda);
  const LimitData lim = calapso_limit(model, Q, lambda, p, opt);
  const Mat& L = lim.residual_limit;
  const Vec fs = L * fo.fs;
  rep.metrics.push_back({"invariant_null_norm2", inner(inv, inv)});
  rep.metrics.push_back({"invariant_distance_to_calapso_limit", proj_dist(inv, fs)});
  const Mat Mxi = ppf_monodromy(xi);
  rep.metrics.push_back({"factorization_residual", (L * Mxi * adjoint(L) - P.value).norm() / P.value.norm()});
  // id + 2 pi lambda f(s) ^ d_s f(nu) / |d_s f(nu)|^2 - (2 pi lambda)^2 / 2 f(s) f(s)^* / |d_s f(nu)|^2
  const double nn = fo.dfs_nu_norm2;
  const Mat closed = Mat::Identity(d, d) + (two_pi * lambda / nn) * wedge(fo.fs, fo.dfs_nu) -
                     (0.5 * two_pi * two_pi * lambda * lambda / nn) * outer_star(fo.fs, fo.fs);
  rep.metrics.push_back({"pure_pole_closed_form_residual", (Mxi - closed).norm()});
  // coefficient of f(s) ^ d_s f(nu) / |d_s f(nu)|^2 in L^{-1} M L - id
  const Mat unitw = wedge(fo.fs, fo.dfs_nu) / nn;
  const Mat pulled = adjoint(L) * P.value * L - Mat::Identity(d, d);
  rep.metrics.push_back({"wedge_coefficient", (pulled.cwiseProduct(unitw)).sum() / unitw.squaredNorm()});
  rep.metrics.push_back({"calapso_limit_error", lim.report.final_distance});
  rep.vectors.push_back({"invariant_null_direction", inv});
  rep.vectors.push_back({"calapso_limit", fs});
  return rep;
}

struct SphereDescriptor {
  Mat basis;                 // g(p) Gamma_p^s(⋉) [o, iota, t_u, t_v]
  std::vector<Vec> normals;  // Minkowski unit normals of the subspace
  Vec w_plus, w_minus;       // W+-(lambda, p)
  std::vector<Vec> samples;  // limit-set points from the (arg alpha, beta) parametrization
  double limit_error = 0.0;
  double min_sample_distance_to_w = INFINITY;
};

inline Mat residual_limit_at(const SecondOrderGauge& G, const PolarPoint& p, const TransformOptions& opt) {
  const LimitResult L = residual_limit(G.psi(), G.xi(), p, opt.schedule, opt.integ);
  if (!L.converged && !(L.error < 1e-8)) throw convergence_error("residual limit did not converge: " + L.diagnostic);
  return L.limit;
}

inline SphereDescriptor limit_sphere(const SurfaceModel& model, const QuadDiff& Q, double lambda, const PolarPoint& p,
                                     const TransformOptions& opt = {}, int nalpha = 64, int nbeta = 64) {
  if (regime(Q, lambda) != PoleRegime::so_spacelike) throw validation_error("limit_sphere: requires 1 - 2 lambda < 0");
  const SecondOrderGauge G(model, Q, lambda);
  const int d = model.dim();
  const LimitResult L = residual_limit(G.psi(), G.xi(), p, opt.schedule, opt.integ);
  if (!L.converged && !(L.error < 1e-8)) throw convergence_error("limit_sphere: residual limit did not converge");
  const Mat A = G.g(p) * L.limit;
  SphereDescriptor sd;
  sd.limit_error = L.error;
  sd.basis.resize(d, 4);
  sd.basis << A.col(idx::o), A.col(idx::iota), A.col(idx::tu), A.col(idx::tv);
  sd.normals = sphere_normals(sd.basis);
  const SecondOrderEigen& e = G.eigen();
  sd.w_plus = A * e.w_plus.real();
  sd.w_minus = A * e.w_minus.real();
  const cplx vv = inner(e.v_plus, e.v_minus);
  const double ww = inner(e.w_plus.real(), e.w_minus.real());
  const double amod = std::sqrt(-ww / vv.real());
  for (int a = 0; a < nalpha; ++a) {
    const cplx alpha = std::polar(amod, two_pi * a / nalpha);
    for (int b = 0; b < nbeta; ++b) {
      const double beta = std::exp(-4.0 + 8.0 * b / std::max(1, nbeta - 1));
      const Vec x = (2.0 * (alpha * e.v_plus).real() + beta * e.w_plus.real() + e.w_minus.real() / beta);
      const Vec y = A * x;
      sd.samples.push_back(y);
      sd.min_sample_distance_to_w =
          std::min({sd.min_sample_distance_to_w, proj_dist(y, sd.w_plus), proj_dist(y, sd.w_minus)});
    }
  }
  return sd;
}

// Coordinates of x in the limit-set parametrization alpha V+ + conj(alpha) V- + beta W+ + W-/beta (up to scale).
// Returns false when x is not of that form.
inline bool limit_set_parameters(const SecondOrderEigen& e, const Vec& x, cplx& alpha, double& beta) {
  const int d = static_cast<int>(x.size());
  CMat B(d, 4);
  B << e.v_plus, e.v_minus, e.w_plus, e.w_minus;
  const CVec c = B.colPivHouseholderQr().solve(x.cast<cplx>());
  if ((B * c - x.cast<cplx>()).norm() > 1e-9 * x.norm()) return false;
  const double bc = (c[2] * c[3]).real();
  if (!(bc > 0.0) || std::abs(c[2].imag()) > 1e-9 * std::abs(c[2])) return false;
  const double s = std::sqrt(bc);
  alpha = c[0] / s;
  beta = c[2].real() / s;
  return std::abs(c[1] / s - std::conj(alpha)) <= 1e-9 * std::max(1.0, std::abs(alpha));
}

// E_q = lim_{q' -> s} Gamma_q^{q'}(psi) Gamma_{q'}^q(xi) - id along the radius through q, integrated for the
// deviation D' = (id + D) A so that small E_q keeps its relative accuracy. Convergence is judged on
// R(q) E_q R(q)^{-1}, the scale at which g(q) sees it.
inline Mat residual_deviation(const SecondOrderGauge& G, const PolarPoint& q, double depth = 1e-6, double tol = 1e-8) {
  const int d = G.dim();
  const PurePoleForm& xi = G.xi();
  const double rho0 = q.rho(), rho1 = rho0 + std::log(depth);
  auto A = [&](double s) {
    const PolarPoint w = PolarPoint::from_log(rho0 + s * (rho1 - rho0), q.phi);
    const Mat T = ppf_primitive(xi, q, w);
    return Mat(T * G.remainder(w).drho * adjoint(T) * (rho1 - rho0));
  };
  auto run = [&](int N) {
    Mat D = Mat::Zero(d, d);
    const double h = 1.0 / N;
    Mat a0 = A(0.0);
    for (int i = 0; i < N; ++i) {
      const Mat am = A((i + 0.5) * h), a1 = A((i + 1.0) * h);
      const Mat k1 = a0 + D * a0;
      const Mat D2 = D + 0.5 * h * k1;
      const Mat k2 = am + D2 * am;
      const Mat D3 = D + 0.5 * h * k2;
      const Mat k3 = am + D3 * am;
      const Mat D4 = D + h * k3;
      const Mat k4 = a1 + D4 * a1;
      D += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      a0 = a1;
    }
    return D;
  };
  const Mat R = G.rotation(q), Ri = adjoint(R);
  int N = 32;
  Mat prev = run(N);
  for (int level = 0; level < 8; ++level) {
    N *= 2;
    const Mat cur = run(N);
    if ((R * (cur - prev) * Ri).norm() <= 15.0 * tol) return cur + (cur - prev) / 15.0;
    prev = cur;
  }
  throw convergence_error("residual_deviation: no convergence");
}

struct LimitSetDarbouxStudy {
  Vec init;
  cplx alpha;
  double beta = 0.0;
  double period = 0.0;  // in log r
  std::vector<double> radii_a, radii_b;
  std::vector<Vec> points_a, points_b;
  Vec limit_a, limit_b;  // F(s) iota and f(s)
  std::vector<double> dist_a, dist_b;
  double separation = 0.0;
  double direct_check = 0.0;  // structured vs direct evaluation at the first half-turn radius
  double residual_scale = 0.0;  // c in |R(q) E_q R(q)^{-1}| <= c r^2, fitted at resolvable radii
  std::vector<double> residual_a, residual_b;  // used |R E R^{-1}|, or the bound c r^2 where E_q is dropped
};

// Darboux transform with init g(p) Gamma_p^s(⋉) iota on the limit set, sampled along two radial subsequences
// half a period of xi^Re apart.
inline LimitSetDarbouxStudy darboux_limit_set_study(const SurfaceModel& model, const QuadDiff& Q, double lambda,
                                                    const PolarPoint& p, int periods = 3,
                                                    const TransformOptions& opt = {},
                                                    double resolvable_radius = 1e-3) {
  if (regime(Q, lambda) != PoleRegime::so_spacelike) throw validation_error("limit-set study: requires 1 - 2 lambda < 0");
  const SecondOrderGauge G(model, Q, lambda);
  const int d = model.dim();
  LimitSetDarbouxStudy st;
  Vec iota = Vec::Zero(d);
  iota[idx::iota] = 1.0;
  if (!limit_set_parameters(G.eigen(), iota, st.alpha, st.beta))
    throw validation_error("limit-set study: iota is not on the limit set");
  const Mat L = residual_limit_at(G, p, opt);
  const Mat gp = G.g(p);
  st.init = gp * L * iota;
  st.period = two_pi / std::sqrt(2.0 * G.lambda_eff() - 1.0);
  // At r = r(p) e^{-k T} the pure pole factor Gamma_q^p(xi) is the identity and at r = r(p) e^{-(k - 1/2) T}
  // it is the half turn exp(T/2 xi^Re); the remainder enters through residual_deviation. This keeps the
  // O(r^2) o-component of Gamma_q^p(psi) y that g(q) amplifies, which a direct product loses below r ~ 1e-7.
  const Mat half = exp_skew(0.5 * st.period * G.xi().xi_re);
  const Mat Fs = G.frame({0.0, 0.0});
  st.limit_a = Fs * iota;
  st.limit_b = model.lift(0.0);
  // The finite-difference remainder carries ~1e-13 absolute noise, which R(q) amplifies by 1/r^2. Below
  // resolvable_radius E_q is dropped; its effect is bounded by the fitted c r^2.
  for (double r : {2.0 * resolvable_radius, 4.0 * resolvable_radius}) {
    const PolarPoint q{r, p.phi};
    const Mat R = G.rotation(q);
    st.residual_scale = std::max(st.residual_scale, (R * residual_deviation(G, q) * adjoint(R)).norm() / (r * r));
  }
  for (int k = 1; k <= periods; ++k) {
    for (int b = 0; b < 2; ++b) {
      const double r = p.r * std::exp(-(k - 0.5 * b) * st.period);
      const PolarPoint q{r, p.phi};
      const Vec base = b ? Vec(half * iota) : iota;
      Vec u = base;
      double res = st.residual_scale * r * r;
      if (r >= resolvable_radius) {
        const Mat E = residual_deviation(G, q);
        u += E * base;
        const Mat R = G.rotation(q);
        res = (R * E * adjoint(R)).norm();
      }
      const Vec x = G.g(q) * (u / u.norm());
      if (b == 0) {
        st.radii_a.push_back(r);
        st.points_a.push_back(x);
        st.dist_a.push_back(proj_dist(x, st.limit_a));
        st.residual_a.push_back(res);
      } else {
        st.radii_b.push_back(r);
        st.points_b.push_back(x);
        st.dist_b.push_back(proj_dist(x, st.limit_b));
        st.residual_b.push_back(res);
      }
    }
  }
  // direct evaluation at the first half-turn radius, where it is well conditioned
  {
    const PolarPoint q{st.radii_b.front(), p.phi};
    const Mat Gq = primitive(G.psi(), PathSpec{p, q}, opt.integ).value;
    Vec u = adjoint(Gq) * (adjoint(gp) * st.init);
    st.direct_check = proj_dist(G.g(q) * (u / u.norm()), st.points_b.front());
  }
  st.separation = proj_dist(st.points_a.back(), st.points_b.back());
  return st;
}

inline StructureReport so_monodromy_structure(const SurfaceModel& model, const QuadDiff& Q, double lambda,
                                              const PolarPoint& p, const TransformOptions& opt = {}) {
  if (Q.pole_order() != 2) throw validation_error("so_monodromy_structure: Q must have a pole of order two");
  check_base(model, p);
  const int d = model.dim(), n = model.n();
  const SecondOrderGauge G(model, Q, lambda);
  StructureReport rep;
  const PoleRegime reg = regime(Q, lambda);
  rep.regime = to_string(reg);
  rep.lambda = lambda;
  rep.lambda_eff = G.lambda_eff();
  rep.base = p;
  const Primitive P = monodromy(G.omega_form(), p, opt.integ);
  const Mat& M = P.value;
  rep.monodromy = M;
  rep.monodromy_error = P.error_estimate;
  rep.eigenvalues = eigenvalues(M);
  const double a = 1.0 - 2.0 * G.lambda_eff();
  const Mat gp = G.g(p);
  rep.expected.assign(n, 1.0);
  if (reg == PoleRegime::so_spacelike) {
    const double s = std::sqrt(-a);
    rep.expected.push_back(std::exp(two_pi * s));
    rep.expected.push_back(std::exp(-two_pi * s));
  } else if (reg != PoleRegime::so_degenerate) {
    const double s = std::sqrt(a);
    rep.expected.push_back(std::polar(1.0, two_pi * s));
    rep.expected.push_back(std::polar(1.0, -two_pi * s));
  } else {
    rep.expected.push_back(1.0);
    rep.expected.push_back(1.0);
  }
  rep.metrics.push_back({"spectrum_mismatch", spectrum_mismatch(rep.eigenvalues, rep.expected)});
  rep.metrics.push_back({"spectrum_relative_mismatch", relative_spectrum_mismatch(rep.eigenvalues, rep.expected)});
  // eigenvalues of the pure pole monodromy: the transfer through Gamma_p^s(⋉)
  rep.metrics.push_back({"pure_pole_spectrum_mismatch", spectrum_mismatch(rep.eigenvalues, eigenvalues(ppf_monodromy(G.xi())))});
  if (reg == PoleRegime::so_first_kind || reg == PoleRegime::so_second_kind) {
    const Vec K = k_map(G.psi(), G.xi(), p, opt.schedule, opt.integ).vector;
    const Vec fs = gp * K;
    rep.vectors.push_back({"calapso_limit", fs});
    rep.metrics.push_back({"k_invariance", proj_dist(M * fs, fs)});
    rep.metrics.push_back({"k_fixed", (M * fs - fs).norm() / fs.norm()});
    const double s = std::sqrt(a);
    int jmin = 0;
    for (int j = 1; j <= 12 && !jmin; ++j)
      if (std::abs(j * s - std::round(j * s)) < 1e-9) jmin = j;
    if (jmin) {
      rep.metrics.push_back({"minimal_period", static_cast<double>(jmin)});
      rep.metrics.push_back({"power_residual", (mat_power(M, jmin) - Mat::Identity(d, d)).norm()});
    }
  } else if (reg == PoleRegime::so_spacelike) {
    const Mat L = residual_limit_at(G, p, opt);
    const SecondOrderEigen& e = G.eigen();
    const Vec wp = gp * L * e.w_plus.real(), wm = gp * L * e.w_minus.real();
    const double s = std::sqrt(-a);
    const double fp = std::exp(-two_pi * s), fm = std::exp(two_pi * s);
    rep.vectors.push_back({"w_plus", wp});
    rep.vectors.push_back({"w_minus", wm});
    rep.metrics.push_back({"w_plus_residual", (M * wp - fp * wp).norm() / (fp * wp.norm())});
    rep.metrics.push_back({"w_minus_residual", (M * wm - fm * wm).norm() / (fm * wm.norm())});
    rep.metrics.push_back({"w_plus_null", std::abs(inner(wp, wp)) / wp.squaredNorm()});
    rep.metrics.push_back({"w_minus_null", std::abs(inner(wm, wm)) / wm.squaredNorm()});
    rep.metrics.push_back({"factorization_residual",
                           (gp * L * ppf_monodromy(G.xi()) * adjoint(gp * L) - M).norm() / M.norm()});
  }
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Pushforward to the j-fold cover.

enum class TransformKind { calapso, darboux };

struct PushforwardVerdict {
  TransformKind kind;
  double lambda = 0.0;
  int j = 1;
  bool predicate = false;  // monodromy invariance
  bool sampled = false;    // direct periodicity on samples
  std::optional<bool> expected;  // closed-form corollary, when one applies
  double predicate_residual = 0.0;
  double sampled_residual = 0.0;
  double tol = 1e-6;
  std::string witness;
  bool agree() const { return predicate == sampled && (!expected || *expected == predicate); }
};

inline std::vector<PolarPoint> pushforward_samples(const SurfaceModel& model) {
  std::vector<PolarPoint> s;
  for (double r : {0.35, 0.6})
    for (double phi : {0.4, 2.1, 4.0}) s.push_back({r * model.r0(), phi});
  return s;
}

inline PushforwardVerdict pushforward_check(const SurfaceModel& model, const QuadDiff& Q, double lambda, int j,
                                            TransformKind kind, const std::optional<Vec>& init, const PolarPoint& p,
                                            const TransformOptions& opt = {}, double tol = 1e-6) {
  if (j < 1) throw validation_error("pushforward: cover index must be positive");
  if (kind == TransformKind::darboux && !init) throw validation_error("pushforward: Darboux needs an init");
  check_base(model, p);
  PushforwardVerdict v;
  v.kind = kind;
  v.lambda = lambda;
  v.j = j;
  v.tol = tol;
  const FormField F = omega(model, Q).scaled(lambda);
  const Mat Mj = mat_power(monodromy(F, p, opt.integ).value, j);
  const std::vector<PolarPoint> qs = pushforward_samples(model);
  std::vector<double> pred(qs.size(), 0.0), samp(qs.size(), 0.0);
  parallel_for(static_cast<int>(qs.size()), [&](int k) {
    const PolarPoint q = qs[k], q2{q.r, q.phi - two_pi * j};
    const Mat G1 = primitive(F, PathSpec::radial_then_arc(p, q), opt.integ).value;
    const Mat G2 = primitive(F, PathSpec::radial_then_arc(p, q2), opt.integ).value;
    if (kind == TransformKind::calapso) {
      const Vec x = G1 * model.lift(q.z());
      pred[k] = proj_dist(Mj * x, x);
      samp[k] = proj_dist(G2 * model.lift(q2.z()), x);
    } else {
      samp[k] = proj_dist(adjoint(G2) * *init, adjoint(G1) * *init);
    }
  });
  if (kind == TransformKind::darboux) pred.assign(1, proj_dist(Mj * *init, *init));
  for (double x : pred) v.predicate_residual = std::max(v.predicate_residual, x);
  for (double x : samp) v.sampled_residual = std::max(v.sampled_residual, x);
  v.predicate = v.predicate_residual <= tol;
  v.sampled = v.sampled_residual <= tol;
  const PoleRegime reg = regime(Q, lambda);
  if (reg == PoleRegime::regular) {
    v.expected = true;
    v.witness = "no pole: trivial monodromy";
  } else if (reg == PoleRegime::first_order) {
    if (kind == TransformKind::calapso) {
      v.expected = false;
      v.witness = "first-order pole: no Calapso transform descends";
    } else {
      const LimitData lim = calapso_limit(model, Q, lambda, p, opt);
      const double dist = proj_dist(*init, lim.report.limit);
      v.expected = dist <= tol;
      v.witness = "distance of init to the Calapso limit point: " + std::to_string(dist);
    }
  } else if (reg == PoleRegime::so_first_kind && kind == TransformKind::calapso) {
    const double s = std::sqrt(1.0 - 2.0 * lambda * Q.c2.real());
    v.expected = std::abs(j * s - std::round(j * s)) < 1e-9;
    v.witness = "j sqrt(1 - 2 lambda) = " + std::to_string(j * s);
  } else if (reg == PoleRegime::so_spacelike && kind == TransformKind::darboux) {
    const SecondOrderGauge G(model, Q, lambda);
    const Mat A = G.g(p) * residual_limit_at(G, p, opt);
    const double dp = proj_dist(*init, Vec(A * G.eigen().w_plus.real()));
    const double dm = proj_dist(*init, Vec(A * G.eigen().w_minus.real()));
    v.expected = std::min(dp, dm) <= tol;
    v.witness = "distance of init to W+-(lambda,p): " + std::to_string(std::min(dp, dm));
  } else {
    v.witness = "no closed-form criterion in this regime";
  }
  return v;
}

// ---------------------------------------------------------------------------------------------
// Zero of Q at s: transforms extend through s.

struct ZeroCaseReport {
  double calapso_spread = 0.0;  // max proj_dist between approach directions and the value at s
  double darboux_spread = 0.0;
  double monodromy_residual = 0.0;
  std::vector<std::pair<double, double>> darboux_differential;  // (|z|, |d affine(f^)|)
  double fitted_order = 0.0;
};

inline ZeroCaseReport zero_case_smoke(const SurfaceModel& model, const QuadDiff& Q, double lambda, const PolarPoint& p,
                                      const Vec& init, const TransformOptions& opt = {}, double approach = 1e-8) {
  if (Q.pole_order() != 0) throw validation_error("zero_case_smoke: Q must be holomorphic at s");
  check_base(model, p);
  const int d = model.dim();
  ZeroCaseReport rep;
  const FormField F = omega(model, Q).scaled(lambda);
  const Mat G0 = primitive_chart_segment(F, p.z(), 0.0, opt.integ).value;
  const Vec c0 = G0 * model.lift(0.0), d0 = adjoint(G0) * init;
  for (int k = 0; k < 4; ++k) {
    const cplx q = std::polar(approach, 0.25 * two_pi * k + 0.1);
    const Mat G = primitive_chart_segment(F, p.z(), q, opt.integ).value;
    rep.calapso_spread = std::max(rep.calapso_spread, proj_dist(G * model.lift(q), c0));
    rep.darboux_spread = std::max(rep.darboux_spread, proj_dist(adjoint(G) * init, d0));
  }
  rep.monodromy_residual = (monodromy(F, p, opt.integ).value - Mat::Identity(d, d)).norm();
  // differential of the affine image of f^ along d/du, by central differences through chart segments
  std::vector<std::pair<double, double>> fit;
  for (double t : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4}) {
    const cplx q(t, 0.0);
    const Mat Gq = primitive_chart_segment(F, p.z(), q, opt.integ).value;
    const Vec fq = adjoint(Gq) * init;
    const double h = 1e-2 * t;
    auto at = [&](double s) {
      const Mat G = primitive_chart_segment(F, q, q + s, opt.integ).value;
      return affine_point(Vec(adjoint(G) * fq));
    };
    const double dn = ((at(h) - at(-h)) / (2 * h)).norm();
    rep.darboux_differential.push_back({t, dn});
    fit.push_back({std::log(t), std::log(dn)});
  }
  double mx = 0, my = 0;
  for (auto& [x, y] : fit) mx += x, my += y;
  mx /= fit.size();
  my /= fit.size();
  double sxy = 0, sxx = 0;
  for (auto& [x, y] : fit) sxy += (x - mx) * (y - my), sxx += (x - mx) * (x - mx);
  rep.fitted_order = sxy / sxx;
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Spectral rescaling (Q, lambda) -> (s Q, lambda / s).

inline double scaling_covariance(const SurfaceModel& model, const QuadDiff& Q, double lambda, double s,
                                 const PolarPoint& p, const Vec& init, const GridSpec& grid,
                                 const TransformOptions& opt = {}) {
  TransformOptions o = opt;
  o.with_limit = false;
  const CalapsoResult c1 = calapso(model, Q, lambda, p, grid, o), c2 = calapso(model, Q.scaled(s), lambda / s, p, grid, o);
  const DarbouxResult d1 = darboux(model, Q, lambda, p, init, grid, o),
                      d2 = darboux(model, Q.scaled(s), lambda / s, p, init, grid, o);
  double m = 0.0;
  for (std::size_t k = 0; k < c1.samples.size(); ++k) {
    m = std::max(m, proj_dist(c1.samples[k].value, c2.samples[k].value));
    m = std::max(m, proj_dist(d1.samples[k].value, d2.samples[k].value));
  }
  return m;
}

// | |d(Gamma_p f)|^2 - |df|^2 | / |df|^2 at q along d/du, by central differences.
inline double calapso_lift_isometry(const SurfaceModel& model, const QuadDiff& Q, double lambda, const PolarPoint& p,
                                    const PolarPoint& q, double h = 1e-4, const IntegrationOptions& o = {}) {
  const FormField F = omega(model, Q).scaled(lambda);
  const Mat Gq = primitive(F, PathSpec::radial_then_arc(p, q), o).value;
  auto lifted = [&](double s) {
    const cplx z = q.z() + s;
    return Vec(Gq * primitive_chart_segment(F, q.z(), z, o).value * model.lift(z));
  };
  const Vec dl = (lifted(h) - lifted(-h)) / (2 * h);
  const Vec df = (model.lift(q.z() + h) - model.lift(q.z() - h)) / (2 * h);
  return std::abs(inner(dl, dl) - inner(df, df)) / inner(df, df);
}

}  // namespace isothermic

#endif
