#include <gtest/gtest.h>

#include <isothermic/surface.hpp>

#include "support.hpp"

using namespace isothermic;
using namespace testing_support;

namespace {

SurfaceModel sech_model() { return SurfaceModel::revolution(Profile::sech()); }
SurfaceModel perturbed_model() { return SurfaceModel::revolution(Profile::perturbed(0.1)); }

std::vector<PolarPoint> sample_grid(double rmin, double rmax) {
  std::vector<PolarPoint> pts;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 6; ++j) pts.push_back({rmin + (rmax - rmin) * i / 4.0, 0.3 + j * 1.1});
  return pts;
}

}  // namespace

TEST(Surface, EuclideanLiftRoundTrip) {
  MinkSpace M;
  EXPECT_LT((euclidean_lift(Eigen::Vector3d::Zero(), 3) - M.o()).norm(), 1e-300);
  Vec f = euclidean_lift(Eigen::Vector3d(1, 0, 0), 3);
  EXPECT_LT((f - (M.o() + M.t_u() + 0.5 * M.iota())).norm(), 1e-15);
  for (int k = 0; k < 20; ++k) {
    Eigen::Vector3d x = Eigen::Vector3d::Random() * 3;
    Vec y = euclidean_lift(x, 3);
    EXPECT_NEAR(inner(y, y), 0.0, 1e-13);
    EXPECT_LT((affine_point(-2.5 * y) - x).norm(), 1e-13);
  }
  EXPECT_THROW(affine_point(M.iota()), validation_error);
}

TEST(Surface, SechRevolutionIsTheStereographicSphere) {
  // h = sech t, l = tanh t: same map as inverse stereographic projection.
  auto rev = sech_model();
  auto sph = SurfaceModel::umbilic_sphere();
  for (const auto& p : sample_grid(0.05, 1.0)) {
    LiftJet a = rev.lift_jet(p.z()), b = sph.lift_jet(p.z());
    EXPECT_LT((a.f - b.f).norm(), 1e-13);
    EXPECT_LT((a.fuu - b.fuu).norm(), 1e-12);
    EXPECT_LT((a.fuv - b.fuv).norm(), 1e-12);
  }
  // at t = 0 (|z| = 1): conf2 = |x_u|^2 / 2 with |x_u| = h(0)/|z| = 1.
  EXPECT_NEAR(rev.jet({1.0, 0.4}).conf2, 0.5, 1e-12);
}

TEST(Surface, FiniteDifferenceJetMatchesClosedForm) {
  auto sph = SurfaceModel::umbilic_sphere();
  auto fd = SurfaceModel::from_lift("fd-sphere", [sph](cplx z) { return sph.lift(z); });
  for (const auto& p : sample_grid(0.1, 0.9)) {
    LiftJet a = sph.lift_jet(p.z()), b = fd.lift_jet(p.z());
    EXPECT_LT((a.fu - b.fu).norm(), 1e-8);
    EXPECT_LT((a.fv - b.fv).norm(), 1e-8);
    EXPECT_LT((a.fuu - b.fuu).norm(), 1e-8);
    EXPECT_LT((a.fuv - b.fuv).norm(), 1e-8);
    EXPECT_LT((a.fvv - b.fvv).norm(), 1e-8);
    ASSERT_EQ(b.normals.size(), 1u);
    Vec na = a.normals[0], nb = b.normals[0];
    EXPECT_NEAR(std::abs(inner(na, nb)), 1.0, 1e-8);
  }
}

TEST(Surface, JetInvariants) {
  for (const auto& model : {SurfaceModel::umbilic_sphere(), sech_model(), perturbed_model(),
                            SurfaceModel::revolution(Profile::perturbed(0.1), 5)}) {
    for (const auto& p : sample_grid(0.02, 1.0)) {
      SurfaceJet j = model.jet(p);
      const double s = j.f.norm();
      EXPECT_NEAR(inner(j.f, j.f), 0.0, 1e-10 * s * s);
      EXPECT_LT(std::abs(inner(CVec(j.f.cast<cplx>()), j.fz)), 1e-12);
      EXPECT_LT(std::abs(inner(j.fz, j.fz)), 1e-12);
      EXPECT_GT(j.conf2, 0.0);
      ASSERT_EQ(static_cast<int>(j.normals.size()), model.n() - 2);
      for (std::size_t a = 0; a < j.normals.size(); ++a) {
        EXPECT_LT(std::abs(inner(j.normals[a], j.f)), 1e-12);
        EXPECT_LT(std::abs(inner(CVec(j.normals[a].cast<cplx>()), j.fz)), 1e-12);
        for (std::size_t b = 0; b < j.normals.size(); ++b)
          EXPECT_NEAR(inner(j.normals[a], j.normals[b]), a == b ? 1.0 : 0.0, 1e-12);
      }
    }
  }
  EXPECT_THROW(sech_model().jet({1.5, 0.0}), std::invalid_argument);
  EXPECT_THROW(sech_model().jet({0.0, 0.0}), std::invalid_argument);
}

TEST(Surface, RevolutionConformality) {
  // h(t) = A(e^{2t}) e^t, l(t) = L(e^{2t}); check h_t^2 + l_t^2 = h^2.
  for (const auto& model : {sech_model(), perturbed_model()}) {
    for (double t : {-6.0, -3.0, -1.0, -0.4, 0.0}) {
      auto hl = [&](double tt) {
        Eigen::Vector3d x = model.euclidean_point(std::exp(tt));
        return Eigen::Vector2d(x[0], x[2]);
      };
      const double h = 1e-4;
      Eigen::Vector2d d = (8 * (hl(t + h) - hl(t - h)) - (hl(t + 2 * h) - hl(t - 2 * h))) / (12 * h);
      const double H = hl(t)[0];
      EXPECT_NEAR(d.squaredNorm(), H * H, 1e-9);
    }
  }
}

TEST(Surface, PerturbedProfileAdmitsRealMeridian) {
  const Profile p = Profile::perturbed(0.1);
  for (double rho = 0.0; rho < 50.0; rho += 0.01) EXPECT_GT(p.l_prime_radicand(rho), 0.0) << rho;
}

TEST(Surface, HopfDifferential) {
  auto sph = SurfaceModel::umbilic_sphere();
  for (const auto& p : sample_grid(0.05, 1.0)) EXPECT_LT(std::abs(hopf_coeff(sph.jet(p), 0)), 1e-12);
  auto pert = perturbed_model();
  double hmax = 0.0;
  for (const auto& p : sample_grid(0.05, 1.0)) {
    SurfaceJet j = pert.jet(p);
    const cplx H = hopf_coeff(j, 0);
    hmax = std::max(hmax, std::abs(H));
    EXPECT_LT(std::abs(H - hopf_coeff_by_parts(j, 0)), 1e-9);
    // real in the curvature-line chart w = log z: H_w = H z^2
    const cplx z = p.z();
    EXPECT_LT(std::abs((H * z * z).imag()), 1e-9);
  }
  EXPECT_GT(hmax, 1e-3);
  // on the real-t axis, the dz^2 coefficient itself is real
  for (double r : {0.1, 0.5, 0.9}) EXPECT_LT(std::abs(hopf_coeff(pert.jet({r, 0.0}), 0).imag()), 1e-9);
}

TEST(Surface, FactorizationCheck) {
  auto grid = sample_grid(0.1, 1.0);
  auto r1 = factorization_check(SurfaceModel::umbilic_sphere(), QuadDiff::first_order(1.0), grid);
  EXPECT_TRUE(r1.isothermic);
  EXPECT_LT(r1.max_residual, 1e-12);
  auto r2 = factorization_check(perturbed_model(), QuadDiff::second_order(1.0), grid);
  EXPECT_TRUE(r2.isothermic);
  EXPECT_LE(r2.max_residual, 1e-7 * r2.scale);
  auto r3 = factorization_check(perturbed_model(), QuadDiff::second_order(cplx(0, 1)), grid);
  EXPECT_FALSE(r3.isothermic);
  EXPECT_GT(r3.max_residual, 1e-3);
  QuadDiff zq{0.0, 0.0, [](cplx) { return cplx(0.0); }, "0"};
  EXPECT_THROW(factorization_check(perturbed_model(), zq, {{0.5, 0.0}}), validation_error);
}

TEST(Surface, QuadDiffEvaluation) {
  QuadDiff q{2.0, cplx(0, 1), [](cplx z) { return z * z; }, "z^2"};
  const cplx z(0.3, -0.2);
  EXPECT_LT(std::abs(q(z) - (2.0 / (z * z) + cplx(0, 1) / z + z * z)), 1e-13);
  EXPECT_EQ(q.pole_order(), 2);
  EXPECT_EQ(QuadDiff::first_order(1.0).pole_order(), 1);
  EXPECT_EQ(QuadDiff::simple_zero().pole_order(), 0);
  EXPECT_LT(q.cauchy_riemann_residual({z, 0.5, cplx(0, 0.7)}), 1e-8);
  QuadDiff bad{0.0, 0.0, [](cplx z) { return std::conj(z); }, "zbar"};
  EXPECT_GT(bad.cauchy_riemann_residual({z}), 0.5);
  EXPECT_LT(std::abs(q.scaled(3.0)(z) - 3.0 * q(z)), 1e-12);
}

TEST(Surface, OmegaValues) {
  auto sph = SurfaceModel::umbilic_sphere();
  auto om = omega(sph, QuadDiff::first_order(1.0));
  for (const auto& p : sample_grid(0.05, 1.0)) {
    FormValue c = om.chart(p);
    EXPECT_LT(skew_residual(c.du), 1e-12 * std::max(1.0, c.du.norm()));
    EXPECT_LT(skew_residual(c.dv), 1e-12 * std::max(1.0, c.dv.norm()));
    // values in f ^ <f>^perp: they annihilate f and map into <f>^perp
    Vec f = sph.lift(p.z());
    EXPECT_LT((c.du * f).norm(), 1e-12 * c.du.norm());
    PolarValue pv = om.polar(p);
    PolarValue pv2 = to_polar(c, p);
    EXPECT_LT((pv.drho - pv2.drho).norm(), 1e-12 * std::max(1.0, pv.drho.norm()));
    EXPECT_LT((pv.dphi - pv2.dphi).norm(), 1e-12 * std::max(1.0, pv.dphi.norm()));
  }
  // zero case: Omega vanishes where Q_z does
  auto oz = omega(sph, QuadDiff::simple_zero());
  FormValue c0 = oz.chart({0.0, 0.0});
  EXPECT_EQ(c0.du.norm(), 0.0);
  EXPECT_THROW(om.chart({0.0, 0.0}), std::invalid_argument);
}

TEST(Surface, Closedness) {
  auto sph = SurfaceModel::umbilic_sphere();
  EXPECT_LE(closedness_residual(sph, QuadDiff::first_order(1.0), {0.5, 0.7}, 1e-3), 1e-5);
  auto pert = perturbed_model();
  EXPECT_LE(closedness_residual(pert, QuadDiff::second_order(1.0), {0.5, 0.7}, 1e-3), 1e-5);
  EXPECT_LE(closedness_residual(sech_model(), QuadDiff::second_order(1.0), {0.3, 2.0}, 1e-3), 1e-5);
  // decays at least like h^2 on the isothermic pair
  const double e1 = closedness_residual(pert, QuadDiff::second_order(1.0), {0.5, 0.7}, 1e-2);
  const double e2 = closedness_residual(pert, QuadDiff::second_order(1.0), {0.5, 0.7}, 5e-3);
  EXPECT_GT(std::log2(e1 / e2), 2.0);
  // negative control stays of order one
  const QuadDiff rot = QuadDiff::second_order(cplx(0, 1));
  const double n1 = closedness_residual(pert, rot, {0.5, 0.7}, 1e-2);
  const double n2 = closedness_residual(pert, rot, {0.5, 0.7}, 1e-3);
  EXPECT_GT(n2, 1e-2);
  EXPECT_NEAR(n1 / n2, 1.0, 0.05);
  EXPECT_THROW(closedness_residual(pert, rot, {0.999, 0.7}, 1e-2), std::invalid_argument);
}
