#ifndef ISOTHERMIC_FIRST_ORDER_HPP
#define ISOTHERMIC_FIRST_ORDER_HPP

#include <cmath>
#include <vector>

#include "connection.hpp"
#include "cover.hpp"
#include "errors.hpp"
#include "minkowski.hpp"
#include "polecore.hpp"
#include "surface.hpp"

namespace isothermic {

struct FirstOrderData {
  PurePoleForm xi;   // for lambda = 1
  cplx nu;           // tangent at s in the chart, nu_c = i / q_{-1}
  Vec fs;            // f(s)
  Vec dfs_nu;        // d_s f(nu)
  double dfs_nu_norm2 = 0.0;
};

// xi^Re + i xi^Im = -q_{-1} f(s) ^ f_zbar(s) / <f_z, f_zbar>(s), the pure pole part of Omega at a simple pole.
inline FirstOrderData fo_ppf(const SurfaceModel& model, const QuadDiff& Q) {
  if (Q.c2 != 0.0) throw std::invalid_argument("fo_ppf: Q has a pole of order two");
  if (Q.c1 == 0.0) throw validation_error("fo_ppf: residue q_{-1} vanishes");
  const SurfaceJet j = model.jet_at(0.0);
  FirstOrderData d;
  d.fs = j.f;
  const CVec c = (-Q.c1 / j.conf2) * j.fzb;
  d.xi = build_ppf(j.f, c.real(), j.f, c.imag());
  d.nu = cplx(0.0, 1.0) / Q.c1;
  d.dfs_nu = d.nu.real() * j.lift.fu + d.nu.imag() * j.lift.fv;
  d.dfs_nu_norm2 = inner(d.dfs_nu, d.dfs_nu);
  return d;
}

// (1 / 2 pi i) of the contour integral of Q / <dbar_s f(nu), df> over |z| = r.
inline cplx fo_residue(const SurfaceModel& model, const QuadDiff& Q, cplx nu, double r, int nodes = 256) {
  const SurfaceJet s = model.jet_at(0.0);
  const CVec a = std::conj(nu) * s.fzb;
  cplx sum = 0.0;
  for (int k = 0; k < nodes; ++k) {
    const double t = two_pi * k / nodes;
    const cplx z = std::polar(r, t);
    const SurfaceJet j = model.jet_at(z);
    sum += Q(z) / inner(a, j.fz) * z;  // dz = i z dt
  }
  return sum / static_cast<double>(nodes);
}

// max over a log-radial grid of |Omega - Xi| in chart components.
inline double fo_bounded_difference(const SurfaceModel& model, const QuadDiff& Q, const PurePoleForm& xi,
                                    double rmin, double rmax, int nr = 24, int nphi = 12) {
  const FormField om = omega(model, Q);
  const FormField xf = form_field(xi);
  double m = 0.0;
  for (int i = 0; i < nr; ++i) {
    const double r = rmin * std::pow(rmax / rmin, nr > 1 ? static_cast<double>(i) / (nr - 1) : 0.0);
    for (int k = 0; k < nphi; ++k) {
      const PolarPoint p{r, two_pi * k / nphi};
      const FormValue a = om.chart(p), b = xf.chart(p);
      m = std::max(m, std::max((a.du - b.du).norm(), (a.dv - b.dv).norm()));
    }
  }
  return m;
}

}  // namespace isothermic

#endif
