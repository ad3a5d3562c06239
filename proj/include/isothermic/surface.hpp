#ifndef ISOTHERMIC_SURFACE_HPP
#define ISOTHERMIC_SURFACE_HPP

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "cover.hpp"
#include "errors.hpp"
#include "jet.hpp"
#include "minkowski.hpp"
#include "quadrature.hpp"

namespace isothermic {

// o + sum x_i e_i + |x|^2/2 iota, with x in R^m (m <= n) padded by zeros.
inline Vec euclidean_lift(const Eigen::Ref<const Eigen::VectorXd>& x, int n) {
  if (x.size() > n) throw std::invalid_argument("euclidean_lift: point has more than n coordinates");
  const MinkSpace M(n);
  Vec f = Vec::Zero(M.dim());
  f[idx::o] = 1.0;
  f[idx::iota] = 0.5 * x.squaredNorm();
  for (int i = 0; i < x.size(); ++i) f[2 + i] = x[i];
  return f;
}

inline Eigen::VectorXd affine_point(const Vec& y) {
  const double a = y[idx::o];  // = -<y, iota>
  if (!(std::abs(a) > 1e-14 * y.norm())) throw validation_error("affine_point: point at infinity");
  return y.tail(y.size() - 2) / a;
}

struct LiftJet {
  Vec f, fu, fv, fuu, fuv, fvv;
  std::vector<Vec> normals;               // unit spacelike, orthogonal to f, fu, fv
  std::vector<Vec> normals_u, normals_v;  // empty when not available in closed form
};

struct SurfaceJet {
  LiftJet lift;
  Vec f;
  CVec fz, fzb, fzz, fzzb, fzbzb;
  std::vector<Vec> normals;
  std::vector<CVec> normals_z;
  double conf2 = 0.0;
};

inline SurfaceJet make_surface_jet(LiftJet L) {
  const cplx I(0.0, 1.0);
  SurfaceJet j;
  j.f = L.f;
  j.fz = 0.5 * (L.fu.cast<cplx>() - I * L.fv.cast<cplx>());
  j.fzb = j.fz.conjugate();
  j.fzz = 0.25 * (L.fuu.cast<cplx>() - 2.0 * I * L.fuv.cast<cplx>() - L.fvv.cast<cplx>());
  j.fzzb = (0.25 * (L.fuu + L.fvv)).cast<cplx>();
  j.fzbzb = j.fzz.conjugate();
  j.normals = L.normals;
  if (!L.normals_u.empty())
    for (std::size_t i = 0; i < L.normals.size(); ++i)
      j.normals_z.push_back(0.5 * (L.normals_u[i].cast<cplx>() - I * L.normals_v[i].cast<cplx>()));
  j.conf2 = 0.25 * (inner(L.fu, L.fu) + inner(L.fv, L.fv));
  if (!(j.conf2 > 0.0)) throw validation_error("jet: surface is not immersed at this point");
  j.lift = std::move(L);
  return j;
}

// Radial profile of a surface of revolution written in the chart z = e^{t+iv}:
// x = (A(rho) u, A(rho) v, L(rho)) with rho = |z|^2, so that h(t) = A e^t.
struct Profile {
  enum class Kind { sech, perturbed };
  Kind kind = Kind::sech;
  double eps = 0.0;

  static Profile sech() { return {}; }
  // h = sech t (1 + eps (1 + tanh t)/2)
  static Profile perturbed(double eps) { return {Kind::perturbed, eps}; }

  std::string name() const { return kind == Kind::sech ? "sech" : "perturbed"; }

  template <class T>
  T a(const T& rho) const {
    T base = 2.0 / (1.0 + rho);
    if (kind == Kind::sech) return base;
    return base + (2.0 * eps) * rho / ((1.0 + rho) * (1.0 + rho));
  }
  template <class T>
  T a_prime(const T& rho) const {
    T q = 1.0 / (1.0 + rho);
    T base = -2.0 * q * q;
    if (kind == Kind::sech) return base;
    return base + (2.0 * eps) * (1.0 - rho) * q * q * q;
  }
  // L'(rho) = sqrt(-A'(A + rho A')), from h_t^2 + l_t^2 = h^2.
  template <class T>
  T l_prime(const T& rho) const {
    using std::sqrt;
    T ap = a_prime(rho);
    return sqrt(-1.0 * ap * (a(rho) + rho * ap));
  }
  double l_prime_radicand(double rho) const {
    const double ap = a_prime(rho);
    return -ap * (a(rho) + rho * ap);
  }
};

enum class ModelKind { umbilic_sphere, revolution, euclidean, lift };

class SurfaceModel {
 public:
  using EuclidFn = std::function<std::array<Jet2, 3>(const Jet2& u, const Jet2& v)>;
  using LiftFn = std::function<Vec(cplx)>;

  static SurfaceModel umbilic_sphere(int n = 3, double r0 = 1.0) {
    SurfaceModel m(ModelKind::umbilic_sphere, "umbilic-sphere", n, r0);
    m.euclid_ = [](const Jet2& u, const Jet2& v) {
      Jet2 q = u * u + v * v;
      Jet2 d = inv(1.0 + q);
      return std::array<Jet2, 3>{2.0 * u * d, 2.0 * v * d, (q - 1.0) * d};
    };
    m.curvature_line_ = true;
    return m;
  }

  static SurfaceModel revolution(const Profile& prof, int n = 3, double r0 = 1.0) {
    SurfaceModel m(ModelKind::revolution, "revolution-" + prof.name(), n, r0);
    m.profile_ = prof;
    const double rho_max = r0 * r0 * (1.0 + 1e-9) + 1e-12;
    for (const double s : {0.0, 0.25, 0.5, 0.75, 1.0})
      if (!(prof.l_prime_radicand(s * rho_max) > 0.0))
        throw validation_error("revolution: profile violates |h_t| < h, no real meridian");
    auto l_of = [prof](double rho) {
      return -1.0 + gauss_legendre_32().integrate([&](double s) { return prof.l_prime(s); }, 0.0, rho);
    };
    m.euclid_ = [prof, l_of](const Jet2& u, const Jet2& v) {
      Jet2 rho = u * u + v * v;
      Jet2 A = prof.a(rho);
      Jet2 lp = prof.l_prime(Jet2::u(rho.val));
      Jet2 L = compose(l_of(rho.val), lp.val, lp.du, rho);
      return std::array<Jet2, 3>{A * u, A * v, L};
    };
    m.curvature_line_ = true;
    return m;
  }

  static SurfaceModel euclidean(std::string name, EuclidFn fn, int n = 3, double r0 = 1.0) {
    SurfaceModel m(ModelKind::euclidean, std::move(name), n, r0);
    m.euclid_ = std::move(fn);
    return m;
  }

  // Arbitrary light-cone map; jets by Richardson-extrapolated central differences.
  static SurfaceModel from_lift(std::string name, LiftFn fn, int n = 3, double r0 = 1.0) {
    SurfaceModel m(ModelKind::lift, std::move(name), n, r0);
    m.lift_ = std::move(fn);
    return m;
  }

  ModelKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  int n() const { return n_; }
  int dim() const { return n_ + 2; }
  double r0() const { return r0_; }
  bool curvature_line_chart() const { return curvature_line_; }
  const Profile& profile() const { return profile_; }

  // Euclidean point x(z) (only for models given through R^3).
  Eigen::Vector3d euclidean_point(cplx z) const {
    if (!euclid_) throw std::invalid_argument("euclidean_point: model has no Euclidean chart map");
    auto x = euclid_(Jet2(z.real()), Jet2(z.imag()));
    return {x[0].val, x[1].val, x[2].val};
  }

  Vec lift(cplx z) const {
    if (euclid_) {
      const Eigen::Vector3d x = euclidean_point(z);
      return euclidean_lift(x, n_);
    }
    return lift_(z);
  }

  LiftJet lift_jet(cplx z) const { return euclid_ ? euclid_jet(z) : fd_jet(z); }

  SurfaceJet jet_at(cplx z) const { return make_surface_jet(lift_jet(z)); }

  SurfaceJet jet(const PolarPoint& p) const {
    if (!(p.r > 0.0) || p.r > r0_ * (1.0 + 1e-12))
      throw std::invalid_argument("jet: radius outside (0, r0]");
    return jet_at(p.z());
  }

 private:
  SurfaceModel(ModelKind k, std::string name, int n, double r0) : kind_(k), name_(std::move(name)), n_(n), r0_(r0) {
    MinkSpace check(n);
    if (!(r0 > 0.0)) throw std::invalid_argument("SurfaceModel: r0 must be positive");
  }

  LiftJet euclid_jet(cplx z) const;
  LiftJet fd_jet(cplx z) const;

  ModelKind kind_;
  std::string name_;
  int n_;
  double r0_;
  bool curvature_line_ = false;
  Profile profile_;
  EuclidFn euclid_;
  LiftFn lift_;
};

namespace detail {

// Minkowski-orthonormal completion of span(B) by constant seeds t_u, t_v, n_i.
inline std::vector<Vec> complement_frame(const std::vector<Vec>& B, int count) {
  const int d = static_cast<int>(B.front().size());
  const int k = static_cast<int>(B.size());
  Eigen::MatrixXd Gm(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) Gm(i, j) = inner(B[i], B[j]);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Gm);
  if (!lu.isInvertible()) throw validation_error("normal frame: degenerate tangent data");
  auto project_out = [&](Vec y) {
    Eigen::VectorXd c(k);
    for (int i = 0; i < k; ++i) c[i] = inner(B[i], y);
    Eigen::VectorXd a = lu.solve(c);
    for (int i = 0; i < k; ++i) y -= a[i] * B[i];
    return y;
  };
  std::vector<Vec> out;
  std::vector<bool> used(d, false);
  while (static_cast<int>(out.size()) < count) {
    int best = -1;
    double bn = 0.0;
    Vec bv;
    for (int s = 2; s < d; ++s) {
      if (used[s]) continue;
      Vec e = Vec::Zero(d);
      e[s] = 1.0;
      Vec y = project_out(e);
      for (const Vec& nv : out) y -= inner(y, nv) * nv;
      const double q = inner(y, y);
      if (q > bn) bn = q, best = s, bv = y;
    }
    if (best < 0 || bn < 1e-12) throw validation_error("normal frame: seeds degenerate");
    used[best] = true;
    out.push_back(bv / std::sqrt(bn));
  }
  return out;
}

}  // namespace detail

inline LiftJet SurfaceModel::euclid_jet(cplx z) const {
  const auto X = euclid_(Jet2::u(z.real()), Jet2::v(z.imag()));
  Eigen::Vector3d x, xu, xv, xuu, xuv, xvv;
  for (int i = 0; i < 3; ++i) {
    x[i] = X[i].val, xu[i] = X[i].du, xv[i] = X[i].dv;
    xuu[i] = X[i].duu, xuv[i] = X[i].duv, xvv[i] = X[i].dvv;
  }
  const int d = dim();
  auto embed = [d](const Eigen::Vector3d& e, double iota_coeff, double o_coeff) {
    Vec r = Vec::Zero(d);
    r[idx::o] = o_coeff;
    r[idx::iota] = iota_coeff;
    r.segment(2, 3) = e;
    return r;
  };
  LiftJet L;
  L.f = embed(x, 0.5 * x.squaredNorm(), 1.0);
  L.fu = embed(xu, x.dot(xu), 0.0);
  L.fv = embed(xv, x.dot(xv), 0.0);
  L.fuu = embed(xuu, xu.dot(xu) + x.dot(xuu), 0.0);
  L.fuv = embed(xuv, xu.dot(xv) + x.dot(xuv), 0.0);
  L.fvv = embed(xvv, xv.dot(xv) + x.dot(xvv), 0.0);

  const Eigen::Vector3d c = xu.cross(xv);
  const double cn = c.norm();
  if (!(cn > 0.0)) throw validation_error("jet: surface is not immersed at this point");
  const Eigen::Vector3d nrm = c / cn;
  const Eigen::Vector3d cu = xuu.cross(xv) + xu.cross(xuv);
  const Eigen::Vector3d cv = xuv.cross(xv) + xu.cross(xvv);
  const Eigen::Vector3d nu = (cu - nrm.dot(cu) * nrm) / cn;
  const Eigen::Vector3d nv = (cv - nrm.dot(cv) * nrm) / cn;
  L.normals.push_back(embed(nrm, x.dot(nrm), 0.0));
  L.normals_u.push_back(embed(nu, x.dot(nu), 0.0));
  L.normals_v.push_back(embed(nv, x.dot(nv), 0.0));
  for (int i = 2; i <= n_ - 2; ++i) {
    Vec e = Vec::Zero(d);
    e[idx::normal(i)] = 1.0;
    L.normals.push_back(e);
    L.normals_u.push_back(Vec::Zero(d));
    L.normals_v.push_back(Vec::Zero(d));
  }
  return L;
}

inline LiftJet SurfaceModel::fd_jet(cplx z) const {
  const double h1 = 1e-4 * r0_, h2 = 1e-3 * r0_;
  auto F = [&](double du, double dv) { return lift_(z + cplx(du, dv)); };
  auto d1 = [&](double eu, double ev) {
    auto D = [&](double h) { return Vec((F(eu * h, ev * h) - F(-eu * h, -ev * h)) / (2 * h)); };
    return Vec((4.0 * D(h1) - D(2 * h1)) / 3.0);
  };
  const Vec f0 = F(0, 0);
  auto d2 = [&](double eu, double ev) {
    auto D = [&](double h) { return Vec((F(eu * h, ev * h) - 2.0 * f0 + F(-eu * h, -ev * h)) / (h * h)); };
    return Vec((4.0 * D(h2) - D(2 * h2)) / 3.0);
  };
  auto dmix = [&]() {
    auto D = [&](double h) {
      return Vec((F(h, h) - F(h, -h) - F(-h, h) + F(-h, -h)) / (4 * h * h));
    };
    return Vec((4.0 * D(h2) - D(2 * h2)) / 3.0);
  };
  LiftJet L;
  L.f = f0;
  L.fu = d1(1, 0);
  L.fv = d1(0, 1);
  L.fuu = d2(1, 0);
  L.fvv = d2(0, 1);
  L.fuv = dmix();
  // Normal space: complement of span(f, fu, fv, y) with y a null vector transverse to f.
  Vec y = Vec::Zero(dim());
  y[std::abs(f0[idx::o]) >= std::abs(f0[idx::iota]) ? idx::iota : idx::o] = 1.0;
  L.normals = detail::complement_frame({f0, L.fu, L.fv, y}, n_ - 2);
  return L;
}

inline cplx hopf_coeff(const SurfaceJet& j, int i) {
  if (i < 0 || i >= static_cast<int>(j.normals.size())) throw std::invalid_argument("hopf_coeff: normal index");
  return inner(j.fzz, CVec(j.normals[i].cast<cplx>()));
}

// -<f_z, d_z N_i>, requires closed-form normal derivatives.
inline cplx hopf_coeff_by_parts(const SurfaceJet& j, int i) {
  if (j.normals_z.empty()) throw std::invalid_argument("hopf_coeff_by_parts: normal derivatives unavailable");
  return -inner(j.fz, j.normals_z.at(i));
}

// Meromorphic quadratic differential Q = (c2/z^2 + c1/z + hol(z)) dz^2.
struct QuadDiff {
  cplx c2 = 0.0, c1 = 0.0;
  std::function<cplx(cplx)> hol;
  std::string hol_name;

  static QuadDiff second_order(cplx c2 = 1.0) { return {c2, 0.0, {}, ""}; }
  static QuadDiff first_order(cplx c1) { return {0.0, c1, {}, ""}; }
  // Holomorphic Q with a simple zero at s: Q = z dz^2.
  static QuadDiff simple_zero() {
    return {0.0, 0.0, [](cplx z) { return z; }, "z"};
  }

  int pole_order() const { return c2 != 0.0 ? 2 : (c1 != 0.0 ? 1 : 0); }

  cplx operator()(cplx z) const {
    cplx q = hol ? hol(z) : cplx(0.0);
    if (c1 != 0.0) q += c1 / z;
    if (c2 != 0.0) q += c2 / (z * z);
    return q;
  }

  QuadDiff scaled(double s) const {
    QuadDiff r = *this;
    r.c2 *= s;
    r.c1 *= s;
    if (hol) {
      auto h = hol;
      r.hol = [h, s](cplx z) { return s * h(z); };
    }
    return r;
  }

  // Largest |d hol / d zbar| on the samples (central differences).
  double cauchy_riemann_residual(const std::vector<cplx>& samples, double h = 1e-5) const {
    if (!hol) return 0.0;
    double worst = 0.0;
    for (const cplx z : samples) {
      const cplx du = (hol(z + h) - hol(z - h)) / (2 * h);
      const cplx dv = (hol(z + cplx(0, h)) - hol(z - cplx(0, h))) / (2 * h);
      worst = std::max(worst, std::abs(0.5 * (du + cplx(0, 1) * dv)));
    }
    return worst;
  }
};

struct FactorizationReport {
  std::vector<PolarPoint> samples;
  std::vector<std::vector<cplx>> kappa;  // per sample, per normal
  double max_residual = 0.0;
  double scale = 1.0;
  bool isothermic = false;
};

inline FactorizationReport factorization_check(const SurfaceModel& model, const QuadDiff& Q,
                                               const std::vector<PolarPoint>& samples, double rel_tol = 1e-7) {
  FactorizationReport rep;
  double kmax = 0.0;
  for (const PolarPoint& p : samples) {
    const SurfaceJet j = model.jet(p);
    const cplx q = Q(p.z());
    if (!(std::abs(q) > 0.0)) throw validation_error("factorization_check: Q vanishes at a sample");
    std::vector<cplx> ks;
    for (int i = 0; i < static_cast<int>(j.normals.size()); ++i) {
      const cplx k = hopf_coeff(j, i) / q;
      ks.push_back(k);
      kmax = std::max(kmax, std::abs(k));
      rep.max_residual = std::max(rep.max_residual, std::abs(k.imag()));
    }
    rep.samples.push_back(p);
    rep.kappa.push_back(std::move(ks));
  }
  rep.scale = std::max(1.0, kmax);
  rep.isothermic = rep.max_residual <= rel_tol * rep.scale;
  return rep;
}

// Complex coefficient C of Omega^{(1,0)} = C dz, C = f ^ f_zbar Q_z / (2 conf2).
inline CMat omega_coefficient(const SurfaceJet& j, cplx qz) {
  return wedge(CVec(j.f.cast<cplx>()), j.fzb) * (qz / (2.0 * j.conf2));
}

using OmegaField = FormField;

inline OmegaField omega(const SurfaceModel& model, const QuadDiff& Q) {
  const int d = model.dim();
  auto coeff = [model, Q](const PolarPoint& p) {
    if (p.r == 0.0 && Q.pole_order() > 0) throw std::invalid_argument("omega: evaluation at the puncture");
    const cplx z = p.z();
    return omega_coefficient(model.jet_at(z), Q(z));
  };
  auto chart = [coeff](const PolarPoint& p) {
    const CMat C = coeff(p);
    return FormValue{2.0 * C.real(), -2.0 * C.imag()};
  };
  auto polar = [coeff](const PolarPoint& p) {
    const CMat Cz = coeff(p) * p.z();
    return PolarValue{2.0 * Cz.real(), -2.0 * Cz.imag()};
  };
  return FormField::from_both(d, chart, polar);
}

// |d_u Omega_v - d_v Omega_u| by central differences at steps h and h/2, Richardson-combined.
inline double closedness_residual(const SurfaceModel& model, const QuadDiff& Q, const PolarPoint& p, double h) {
  if (!(h > 0.0) || p.r + h > model.r0() * (1.0 + 1e-12) || (Q.pole_order() > 0 && p.r - h <= 0.0))
    throw std::invalid_argument("closedness_residual: stencil leaves the domain");
  const OmegaField om = omega(model, Q);
  const cplx z = p.z();
  auto at = [&](cplx w) { return om.chart(PolarPoint{std::abs(w), std::arg(w)}); };
  auto curl = [&](double s) {
    const Mat dv_du = (at(z + s).dv - at(z - s).dv) / (2 * s);
    const Mat du_dv = (at(z + cplx(0, s)).du - at(z - cplx(0, s)).du) / (2 * s);
    return Mat(dv_du - du_dv);
  };
  return ((4.0 * curl(0.5 * h) - curl(h)) / 3.0).norm();
}

}  // namespace isothermic

#endif
