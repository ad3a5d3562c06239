#ifndef ISOTHERMIC_SECOND_ORDER_HPP
#define ISOTHERMIC_SECOND_ORDER_HPP

#include <cmath>
#include <memory>
#include <string>

#include "connection.hpp"
#include "cover.hpp"
#include "errors.hpp"
#include "minkowski.hpp"
#include "polecore.hpp"
#include "surface.hpp"

namespace isothermic {

// (o - t_u) ^ (iota - lambda t_u) and (t_u - lambda o - iota) ^ t_v
inline PurePoleForm xi_lambda(double lambda, int n = 3) {
  const MinkSpace M(n);
  return build_ppf(M.o() - M.t_u(), M.iota() - lambda * M.t_u(), M.t_u() - lambda * M.o() - M.iota(), M.t_v());
}

struct SecondOrderEigen {
  cplx root_re;  // sqrt(1 - 2 lambda): eigenvalues of xiRe are +-root_re
  cplx root_im;  // sqrt(2 lambda - 1): eigenvalues of xiIm are +-root_im
  CVec v_plus, v_minus, w_plus, w_minus;
};

inline SecondOrderEigen second_order_eigen(double lambda, int n = 3) {
  const MinkSpace M(n);
  const CVec o = M.o().cast<cplx>(), io = M.iota().cast<cplx>(), tu = M.t_u().cast<cplx>(),
             tv = M.t_v().cast<cplx>();
  SecondOrderEigen e;
  e.root_re = std::sqrt(cplx(1.0 - 2.0 * lambda));
  e.root_im = std::sqrt(cplx(2.0 * lambda - 1.0));
  const CVec vb = lambda * o + io - 2.0 * lambda * tu, vd = lambda * o - io;
  e.v_plus = vb + e.root_re * vd;
  e.v_minus = vb - e.root_re * vd;
  const CVec wb = lambda * o + io - tu;
  e.w_plus = wb + e.root_im * tv;
  e.w_minus = wb - e.root_im * tv;
  return e;
}

struct FrameResiduals {
  double lorentz = 0.0;      // |F^T G F - G|
  double columns = 0.0;      // F o = f_flat, F t_u = f_flat,u, F t_v = f_flat,v
  double iota_tangent = 0.0; // <F iota, f_flat,u>, <F iota, f_flat,v>
  double flatness = 0.0;     // | |f_flat,u|^2 - 1 |, | |f_flat,v|^2 - 1 |, <f_flat,u, f_flat,v>
  double curvature_sphere = 0.0;  // <N_i, (eta.d)^2 f>
};

// Gauge g = F R turning lambda Omega (second-order pole, Q = c2 dz^2/z^2) into xi_lambda plus a remainder
// vanishing at s. lambda refers to the given Q; the normalized Q = dz^2/z^2 carries lambda_eff = lambda c2.
class SecondOrderGauge {
 public:
  SecondOrderGauge(const SurfaceModel& model, const QuadDiff& Q, double lambda, double fd_step = 2e-3)
      : d_(std::make_shared<Data>(model)) {
    if (Q.pole_order() != 2) throw std::invalid_argument("so_gauge: Q must have a pole of order two");
    if (Q.c1 != 0.0 || Q.hol || std::abs(Q.c2.imag()) > 1e-14 * std::abs(Q.c2))
      throw validation_error("so_gauge: chart not adapted to sqrt(Q) (need Q = c dz^2/z^2 with c real)");
    if (!model.curvature_line_chart()) throw validation_error("so_gauge: chart is not a curvature-line chart");
    if (!(fd_step > 0.0)) throw std::invalid_argument("so_gauge: fd_step must be positive");
    d_->Q = Q;
    d_->c2 = Q.c2.real();
    d_->lambda = lambda;
    d_->lambda_eff = lambda * d_->c2;
    d_->h = fd_step;
    d_->xi = xi_lambda(d_->lambda_eff, model.n());
    d_->eigen = second_order_eigen(d_->lambda_eff, model.n());
  }

  const SurfaceModel& model() const { return d_->model; }
  const QuadDiff& quad_diff() const { return d_->Q; }
  double lambda() const { return d_->lambda; }
  double lambda_eff() const { return d_->lambda_eff; }
  double c2() const { return d_->c2; }
  const PurePoleForm& xi() const { return d_->xi; }
  const SecondOrderEigen& eigen() const { return d_->eigen; }
  int dim() const { return d_->model.dim(); }

  Mat frame(const PolarPoint& p) const { return d_->frame(p.z(), nullptr); }
  FrameResiduals frame_residuals(const PolarPoint& p) const {
    FrameResiduals r;
    d_->frame(p.z(), &r);
    return r;
  }

  // R o = o/|z|, R iota = |z| iota, rotation by phi in <t_u, t_v>, identity on the normals.
  Mat rotation(const PolarPoint& p) const {
    const int d = dim();
    Mat R = Mat::Identity(d, d);
    R(idx::o, idx::o) = 1.0 / p.r;
    R(idx::iota, idx::iota) = p.r;
    const double c = std::cos(p.phi), s = std::sin(p.phi);
    R(idx::tu, idx::tu) = c;
    R(idx::tv, idx::tu) = s;
    R(idx::tu, idx::tv) = -s;
    R(idx::tv, idx::tv) = c;
    return R;
  }

  Mat g(const PolarPoint& p) const { return frame(p) * rotation(p); }

  // lambda Omega for the given Q.
  FormField omega_form() const { return omega(d_->model, d_->Q).scaled(d_->lambda); }

  // g ⋉ lambda Omega - xi_lambda in polar components.
  PolarValue remainder(const PolarPoint& p) const { return d_->remainder(p); }

  // g ⋉ lambda Omega = xi_lambda + remainder.
  FormField psi() const {
    auto d = d_;
    return FormField::from_polar(dim(), [d](const PolarPoint& p) {
      PolarValue v = d->remainder(p);
      v.drho -= d->xi.xi_re;
      v.dphi += d->xi.xi_im;
      return v;
    });
  }

 private:
  struct Data {
    explicit Data(const SurfaceModel& m) : model(m) {}
    SurfaceModel model;
    QuadDiff Q;
    double c2 = 1.0, lambda = 0.0, lambda_eff = 0.0, h = 2e-3;
    PurePoleForm xi;
    SecondOrderEigen eigen;

    Mat frame(cplx z, FrameResiduals* res) const {
      const SurfaceJet j = model.jet_at(z);
      const LiftJet& L = j.lift;
      const int d = model.dim();
      const double mu2 = inner(L.fu, L.fu);
      if (!(mu2 > 0.0)) throw validation_error("so_gauge: frame construction degenerate (non-immersed point)");
      const double mu = std::sqrt(mu2);
      const double mu_u = inner(L.fuu, L.fu) / mu, mu_v = inner(L.fuv, L.fu) / mu;
      const Vec f = L.f / mu;
      const Vec a = (L.fu - (mu_u / mu) * L.f) / mu;
      const Vec b = (L.fv - (mu_v / mu) * L.f) / mu;
      // radial second derivative: the curvature direction eta = d/dr
      const double r = std::abs(z);
      const double c = r > 0.0 ? z.real() / r : 1.0, s = r > 0.0 ? z.imag() / r : 0.0;
      const Vec frr = c * c * L.fuu + 2.0 * c * s * L.fuv + s * s * L.fvv;
      Mat F = Mat::Zero(d, d);
      F.col(idx::o) = f;
      F.col(idx::tu) = a;
      F.col(idx::tv) = b;
      std::vector<Vec> normals;
      for (std::size_t i = 0; i < j.normals.size(); ++i) {
        const Vec& nb = j.normals[i];
        const Vec N = nb + (inner(nb, frr) / mu) * f;
        F.col(idx::normal(static_cast<int>(i) + 1)) = N;
        normals.push_back(N);
      }
      Vec y = Vec::Zero(d);
      y[idx::iota] = 1.0;
      y -= inner(y, a) * a + inner(y, b) * b;
      for (const Vec& N : normals) y -= inner(y, N) * N;
      const double yf = inner(y, f);
      if (!(std::abs(yf) > 1e-12 * y.norm() * f.norm()))
        throw validation_error("so_gauge: frame construction degenerate");
      y -= (inner(y, y) / (2.0 * yf)) * f;
      F.col(idx::iota) = y / (-yf);
      if (res) {
        res->lorentz = lorentz_residual(F);
        res->columns = 0.0;
        res->iota_tangent = std::max(std::abs(inner(F.col(idx::iota), a)), std::abs(inner(F.col(idx::iota), b)));
        res->flatness = std::max({std::abs(inner(a, a) - 1.0), std::abs(inner(b, b) - 1.0), std::abs(inner(a, b))});
        double cs = 0.0;
        for (const Vec& N : normals) cs = std::max(cs, std::abs(inner(N, frr)) / std::max(1.0, frr.norm()));
        res->curvature_sphere = cs;
        // F o and F (t_u - i t_v)/2 against the flat lift and its z-derivative
        const CVec fz = 0.5 * (a.cast<cplx>() - cplx(0, 1) * b.cast<cplx>());
        const CVec Fz = 0.5 * (F.col(idx::tu).cast<cplx>() - cplx(0, 1) * F.col(idx::tv).cast<cplx>());
        res->columns = std::max((F.col(idx::o) - f).norm(), (Fz - fz).norm());
      }
      return F;
    }

    Mat frame_at(double rho, double phi) const { return frame(std::polar(std::exp(rho), phi), nullptr); }

    PolarValue remainder(const PolarPoint& p) const {
      const double rho = p.rho(), phi = p.phi;
      const Mat F = frame_at(rho, phi);
      const Mat Fi = adjoint(F);
      auto D = [&](double er, double ep) {
        auto c = [&](double t) {
          return Mat((frame_at(rho + er * t, phi + ep * t) - frame_at(rho - er * t, phi - ep * t)) / (2.0 * t));
        };
        return Mat((4.0 * c(0.5 * h) - c(h)) / 3.0);
      };
      Mat Mr = Fi * D(1, 0), Mp = Fi * D(0, 1);
      // drop the o-column and iota-row: -iota ^ (t_u du + t_v dv) is part of xi_lambda
      for (Mat* m : {&Mr, &Mp}) {
        m->col(idx::o).setZero();
        m->row(idx::iota).setZero();
      }
      const int d = model.dim();
      Vec sc = Vec::Ones(d), isc = Vec::Ones(d);
      sc[idx::o] = 1.0 / p.r;
      sc[idx::iota] = p.r;
      isc[idx::o] = p.r;
      isc[idx::iota] = 1.0 / p.r;
      Mat Rot = Mat::Identity(d, d);
      const double c = std::cos(phi), s = std::sin(phi);
      Rot(idx::tu, idx::tu) = c;
      Rot(idx::tv, idx::tu) = s;
      Rot(idx::tu, idx::tv) = -s;
      Rot(idx::tv, idx::tv) = c;
      auto conj = [&](const Mat& m) {
        // R^{-1} m R with R = Rot diag(sc)
        Mat t = Rot.transpose() * m * Rot;
        return Mat(isc.asDiagonal() * t * sc.asDiagonal());
      };
      return PolarValue{conj(Mr), conj(Mp)};
    }
  };

  std::shared_ptr<Data> d_;
};

inline SecondOrderGauge so_gauge(const SurfaceModel& model, const QuadDiff& Q, double lambda) {
  return SecondOrderGauge(model, Q, lambda);
}

}  // namespace isothermic

#endif
