#include <gtest/gtest.h>

#include <isothermic/first_order.hpp>
#include <isothermic/second_order.hpp>
#include <isothermic/transforms.hpp>

#include "support.hpp"

using namespace isothermic;
using namespace testing_support;

namespace {

const SurfaceModel& sech() {
  static const SurfaceModel m = SurfaceModel::revolution(Profile::sech());
  return m;
}
const SurfaceModel& perturbed() {
  static const SurfaceModel m = SurfaceModel::revolution(Profile::perturbed(0.1));
  return m;
}
const SurfaceModel& sphere() {
  static const SurfaceModel m = SurfaceModel::umbilic_sphere();
  return m;
}

const QuadDiff Q2 = QuadDiff::second_order(1.0);
const QuadDiff Q1 = QuadDiff::first_order(1.0);
const PolarPoint P{0.5, 0.0};

double max_abs(const std::vector<cplx>& v) {
  double m = 0.0;
  for (auto x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// second-order gauge

TEST(Gauge, FrameIsLorentzAndAdapted) {
  for (const SurfaceModel* m : {&sech(), &perturbed()}) {
    const SecondOrderGauge G(*m, Q2, 0.375);
    for (double r : {0.02, 0.3, 0.8})
      for (double phi : {0.0, 1.3, -2.0}) {
        const FrameResiduals f = G.frame_residuals({r, phi});
        EXPECT_LT(f.lorentz, 1e-8);
        EXPECT_LT(f.columns, 1e-12);
        EXPECT_LT(f.iota_tangent, 1e-10);
        EXPECT_LT(f.flatness, 1e-10);
        EXPECT_LT(f.curvature_sphere, 1e-8);
      }
  }
}

TEST(Gauge, RemainderVanishesAtPole) {
  const SecondOrderGauge S(sech(), Q2, 0.625), T(perturbed(), Q2, 0.625);
  for (double r : {0.1, 0.03, 0.01}) {
    const PolarValue a = S.remainder({r, 0.7}), b = T.remainder({r, 0.7});
    EXPECT_LT(std::max(a.drho.norm(), a.dphi.norm()), 1e-9);
    EXPECT_LT(std::max(b.drho.norm(), b.dphi.norm()), 0.1 * r * r);
  }
}

TEST(Gauge, PsiMatchesGaugedOmega) {
  const SecondOrderGauge G(perturbed(), Q2, 0.625);
  GaugeField gf;
  gf.g = [G](const PolarPoint& p) { return G.g(p); };
  gf.fd_step = 1e-3;
  const FormField direct = gauge(G.omega_form(), gf);
  const FormField psi = G.psi();
  for (double r : {0.05, 0.4})
    for (double phi : {0.2, 2.5}) {
      const PolarValue a = direct.polar({r, phi}), b = psi.polar({r, phi});
      EXPECT_LT((a.drho - b.drho).norm(), 1e-7);
      EXPECT_LT((a.dphi - b.dphi).norm(), 1e-7);
    }
}

TEST(Gauge, RejectsUnadaptedChart) {
  EXPECT_THROW(SecondOrderGauge(sech(), QuadDiff::second_order(cplx(0.0, 1.0)), 0.3), validation_error);
  EXPECT_THROW(SecondOrderGauge(sech(), QuadDiff{1.0, 0.5, {}, ""}, 0.3), validation_error);
  EXPECT_THROW(SecondOrderGauge(sech(), Q1, 0.3), std::invalid_argument);
}

TEST(Gauge, XiLambdaEigenvectors) {
  for (double lam : {0.2, 0.375, 0.625, -1.5}) {
    const PurePoleForm xi = xi_lambda(lam);
    const SecondOrderEigen e = second_order_eigen(lam);
    const CMat re = xi.xi_re.cast<cplx>(), im = xi.xi_im.cast<cplx>();
    EXPECT_LT((re * e.v_plus - e.root_re * e.v_plus).norm(), 1e-10 * e.v_plus.norm());
    EXPECT_LT((re * e.v_minus + e.root_re * e.v_minus).norm(), 1e-10 * e.v_minus.norm());
    EXPECT_LT((im * e.w_plus - e.root_im * e.w_plus).norm(), 1e-10 * e.w_plus.norm());
    EXPECT_LT((im * e.w_minus + e.root_im * e.w_minus).norm(), 1e-10 * e.w_minus.norm());
    EXPECT_LT((xi.xi_re * xi.xi_im - xi.xi_im * xi.xi_re).norm(), 1e-12);
  }
}

TEST(Gauge, ScaledResidueShiftsLambda) {
  const SecondOrderGauge G(sech(), QuadDiff::second_order(2.0), 0.25);
  EXPECT_DOUBLE_EQ(G.lambda_eff(), 0.5);
  EXPECT_EQ(regime(QuadDiff::second_order(2.0), 0.25), PoleRegime::so_degenerate);
}

// ---------------------------------------------------------------------------------------------
// first-order pole

TEST(FirstOrder, PurePolePartAndTangent) {
  const FirstOrderData d = fo_ppf(sphere(), Q1);
  EXPECT_NEAR(std::abs(d.nu - cplx(0.0, 1.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(inner(d.fs, d.fs)), 0.0, 1e-12);
  EXPECT_GT(d.dfs_nu_norm2, 0.0);
  EXPECT_EQ(classify(d.xi).span_signature, SpanSignature::degenerate);
  EXPECT_THROW(fo_ppf(sphere(), QuadDiff::simple_zero()), validation_error);
}

TEST(FirstOrder, ResidueOfTangentForm) {
  const FirstOrderData d = fo_ppf(sphere(), Q1);
  const cplx res = fo_residue(sphere(), Q1, d.nu, 1e-5);
  EXPECT_NEAR(res.real(), 0.0, 1e-4);
  EXPECT_NEAR(res.imag(), 0.5, 1e-4);
}

TEST(FirstOrder, OmegaMinusPurePoleIsBounded) {
  const FirstOrderData d = fo_ppf(sphere(), Q1);
  const double near = fo_bounded_difference(sphere(), Q1, d.xi, 1e-6, 1e-4);
  const double far = fo_bounded_difference(sphere(), Q1, d.xi, 1e-2, 0.5);
  EXPECT_LT(near, 10.0 * std::max(far, 1.0));
}

TEST(FirstOrder, MonodromyStructure) {
  const StructureReport r = fo_monodromy_structure(sphere(), Q1, 0.5, P);
  EXPECT_LT(r.metric("spectrum_mismatch"), 1e-5);
  EXPECT_LT(r.metric("nilpotent_cube"), 1e-6 * std::pow(r.monodromy.norm(), 3));
  EXPECT_GT(r.metric("nilpotent_square"), 1e-3);
  EXPECT_LT(r.metric("invariant_distance_to_calapso_limit"), 1e-5);
  EXPECT_LT(r.metric("factorization_residual"), 1e-5);
  EXPECT_LT(r.metric("pure_pole_closed_form_residual"), 1e-10);
  const StructureReport r2 = fo_monodromy_structure(sphere(), Q1, 1.0, P);
  EXPECT_NEAR(r2.metric("wedge_coefficient") / r.metric("wedge_coefficient"), 2.0, 1e-5);
}

// ---------------------------------------------------------------------------------------------
// grids and transforms

TEST(Grid, LayoutAndValidation) {
  const GridSpec g{4, 5, two_pi, 0.1, 0.8};
  EXPECT_EQ(g.size(), 20);
  EXPECT_DOUBLE_EQ(g.radius(0), 0.1);
  EXPECT_DOUBLE_EQ(g.radius(3), 0.8);
  EXPECT_DOUBLE_EQ(g.angle(4), two_pi);
  EXPECT_DOUBLE_EQ(g.point(7).r, g.radius(1));
  EXPECT_DOUBLE_EQ(g.point(7).phi, g.angle(2));
  EXPECT_THROW((GridSpec{2, 2, 1.0, 0.0, 0.5}.validate(1.0)), validation_error);
  EXPECT_THROW((GridSpec{2, 2, 1.0, 0.1, 1.5}.validate(1.0)), validation_error);
}

TEST(Grid, SpanningTreeMatchesDirectPaths) {
  const FormField F = omega(perturbed(), Q2).scaled(0.375);
  const GridSpec g{3, 4, 4.0, 0.1, 0.9};
  const std::vector<Mat> G = spanning_tree_primitives(F, P, g);
  for (int k : {0, 5, 11}) {
    const Mat D = primitive(F, PathSpec::radial_then_arc(P, g.point(k))).value;
    EXPECT_LT((G[k] - D).norm(), 1e-8 * D.norm());
  }
}

TEST(Transforms, CalapsoAtBaseAndAtZeroLambda) {
  TransformOptions o;
  o.with_limit = false;
  const GridSpec g{2, 3, 2.0, 0.25, 0.5};
  const CalapsoResult c = calapso(perturbed(), Q2, 0.375, P, g, o);
  ASSERT_EQ(c.samples.size(), 6u);
  EXPECT_LT(proj_dist(c.samples[3].value, perturbed().lift(P.z())), 1e-12);
  const CalapsoResult z = calapso(perturbed(), Q2, 0.0, P, g, o);
  for (const auto& s : z.samples) EXPECT_LT(proj_dist(s.value, perturbed().lift(s.q.z())), 1e-12);
}

TEST(Transforms, DarbouxAtBaseIsInit) {
  TransformOptions o;
  o.with_limit = false;
  const GridSpec g{2, 3, 2.0, 0.25, 0.5};
  const Vec init = random_light_point(3, 7);
  const DarbouxResult d = darboux(perturbed(), Q2, 0.375, P, init, g, o);
  EXPECT_LT(proj_dist(d.samples[3].value, init), 1e-12);
  for (const auto& s : d.samples) EXPECT_LT(std::abs(inner(s.value, s.value)) / s.value.squaredNorm(), 1e-9);
}

TEST(Transforms, DarbouxAdmissibility) {
  TransformOptions o;
  o.with_limit = false;
  const GridSpec g{2, 3, 2.0, 0.25, 0.5};
  EXPECT_THROW(darboux(sech(), Q2, 0.375, P, sech().lift(P.z()), g, o), validation_error);
  EXPECT_THROW(darboux(sech(), Q2, 0.0, P, random_light_point(3, 1), g, o), validation_error);
  Vec spacelike = Vec::Zero(5);
  spacelike[idx::tu] = 1.0;
  EXPECT_THROW(darboux(sech(), Q2, 0.375, P, spacelike, g, o), validation_error);
  EXPECT_THROW(calapso(sech(), Q2, 0.375, {1.5, 0.0}, g, o), validation_error);
}

TEST(Transforms, NonIsothermicPairRejected) {
  TransformOptions o;
  o.with_limit = false;
  const GridSpec g{2, 3, 2.0, 0.25, 0.5};
  EXPECT_THROW(calapso(perturbed(), QuadDiff::second_order(cplx(0.0, 1.0)), 0.375, P, g, o), validation_error);
}

TEST(Transforms, LiftIsometry) {
  for (double lam : {0.375, -0.2})
    EXPECT_LT(calapso_lift_isometry(perturbed(), Q2, lam, P, {0.3, 1.0}), 1e-7);
}

TEST(Transforms, RandomLightPointIsSeeded) {
  const Vec a = random_light_point(3, 42), b = random_light_point(3, 42), c = random_light_point(3, 43);
  EXPECT_EQ(a, b);
  EXPECT_GT((a - c).norm(), 0.0);
  EXPECT_LT(std::abs(inner(a, a)), 1e-12 * a.squaredNorm());
}

// ---------------------------------------------------------------------------------------------
// limits

TEST(Limits, FirstKindCalapsoConvergesToPoint) {
  const LimitData L = calapso_limit(perturbed(), Q2, 0.375, P);
  EXPECT_EQ(L.regime, PoleRegime::so_first_kind);
  EXPECT_EQ(L.report.classification, LimitClass::converged_point);
  EXPECT_LT(L.report.final_distance, 1e-4);
}

TEST(Limits, SpacelikeCalapsoAccumulatesOnSphere) {
  const LimitData L = calapso_limit(perturbed(), Q2, 0.625, P);
  EXPECT_EQ(L.report.classification, LimitClass::converged_sphere);
  EXPECT_LT(L.report.final_distance, 1e-4);
  EXPECT_GE(L.report.oscillation, 1e-2);
}

TEST(Limits, DarbouxRandomInitConvergesToSurfacePoint) {
  for (double lam : {0.375, 0.625}) {
    const LimitData L = darboux_limit(perturbed(), Q2, lam, P, random_light_point(3, 11));
    EXPECT_EQ(L.report.classification, LimitClass::converged_point);
    EXPECT_LT(proj_dist(L.report.limit, perturbed().lift(0.0)), 1e-12);
    EXPECT_LT(L.report.final_distance, 1e-4);
  }
}

TEST(Limits, ResidualDeviationIsConsistent) {
  const SecondOrderGauge G(perturbed(), Q2, 0.625);
  const LimitResult L = residual_limit(G.psi(), G.xi(), P);
  for (double r : {0.2, 0.05}) {
    const PolarPoint q{r, 0.0};
    const Mat Lq = primitive(G.psi(), PathSpec{P, q}).value * ppf_primitive(G.xi(), q, P);
    const Mat E = residual_deviation(G, q);
    const Mat rhs = ppf_primitive(G.xi(), P, q) * (Mat::Identity(5, 5) + E) * ppf_primitive(G.xi(), q, P);
    EXPECT_LT((adjoint(Lq) * L.limit - rhs).norm(), 1e-8);
  }
}

TEST(Limits, LimitSetDarbouxHasTwoSubsequentialLimits) {
  for (const SurfaceModel* m : {&sech(), &perturbed()}) {
    const LimitSetDarbouxStudy st = darboux_limit_set_study(*m, Q2, 0.625, P);
    EXPECT_GT(st.beta, 0.0);
    EXPECT_LT(st.dist_a.back(), 1e-8);
    EXPECT_LT(st.dist_b.back(), 1e-8);
    EXPECT_GE(st.separation, 0.1);
    EXPECT_LT(st.direct_check, 1e-8);
    for (double e : st.residual_a) EXPECT_LT(e, 1e-6);
  }
}

TEST(Limits, LimitSphereExcludesW) {
  const SphereDescriptor sd = limit_sphere(perturbed(), Q2, 0.625, P, {}, 16, 16);
  EXPECT_EQ(sd.samples.size(), 256u);
  EXPECT_LT(std::abs(inner(sd.w_plus, sd.w_plus)) / sd.w_plus.squaredNorm(), 1e-10);
  EXPECT_LT(sphere_distance(sd.w_plus, sd.normals), 1e-10);
  EXPECT_LT(sphere_distance(sd.w_minus, sd.normals), 1e-10);
  for (const Vec& x : sd.samples) EXPECT_LT(sphere_distance(x, sd.normals), 1e-9);
  EXPECT_GT(sd.min_sample_distance_to_w, 1e-3);
  EXPECT_THROW(limit_sphere(perturbed(), Q2, 0.375, P), validation_error);
}

// ---------------------------------------------------------------------------------------------
// monodromy structure

TEST(Monodromy, FirstKindHalfTurn) {
  const StructureReport r = so_monodromy_structure(sech(), Q2, 0.375, P);
  EXPECT_LT(r.metric("spectrum_mismatch"), 1e-5);
  EXPECT_EQ(r.metric("minimal_period"), 2.0);
  EXPECT_LT(r.metric("power_residual"), 1e-6);
  EXPECT_LT(r.metric("k_invariance"), 1e-6);
}

TEST(Monodromy, SpacelikeEigendirections) {
  const StructureReport r = so_monodromy_structure(perturbed(), Q2, 0.625, P);
  EXPECT_LT(r.metric("spectrum_relative_mismatch"), 1e-4);
  EXPECT_LT(r.metric("w_plus_residual"), 1e-5);
  EXPECT_LT(r.metric("w_minus_residual"), 1e-5);
  EXPECT_LT(r.metric("factorization_residual"), 1e-6);
  EXPECT_NEAR(max_abs(r.eigenvalues), std::exp(std::numbers::pi), 1e-4 * std::exp(std::numbers::pi));
}

TEST(Monodromy, SecondKindTransfer) {
  const StructureReport r = so_monodromy_structure(perturbed(), Q2, -1.5, P);
  EXPECT_EQ(r.regime, "second-order-minkowski-second-kind");
  EXPECT_LT(r.metric("spectrum_mismatch"), 1e-5);
  EXPECT_LT(r.metric("k_invariance"), 1e-6);
}

TEST(Monodromy, RegimeDispatch) {
  EXPECT_EQ(regime(Q2, 0.375), PoleRegime::so_first_kind);
  EXPECT_EQ(regime(Q2, 0.625), PoleRegime::so_spacelike);
  EXPECT_EQ(regime(Q2, 0.5), PoleRegime::so_degenerate);
  EXPECT_EQ(regime(Q2, -1.5), PoleRegime::so_second_kind);
  EXPECT_EQ(regime(Q1, 0.5), PoleRegime::first_order);
  EXPECT_EQ(regime(QuadDiff::simple_zero(), 0.5), PoleRegime::regular);
}

// ---------------------------------------------------------------------------------------------
// pushforward, zero case, scaling

TEST(Pushforward, FirstOrder) {
  const LimitData L = calapso_limit(sphere(), Q1, 0.5, P);
  const PushforwardVerdict c = pushforward_check(sphere(), Q1, 0.5, 1, TransformKind::calapso, std::nullopt, P);
  EXPECT_FALSE(c.predicate);
  EXPECT_TRUE(c.agree());
  const PushforwardVerdict d = pushforward_check(sphere(), Q1, 0.5, 1, TransformKind::darboux, L.report.limit, P);
  EXPECT_TRUE(d.predicate);
  EXPECT_TRUE(d.agree());
  const PushforwardVerdict e =
      pushforward_check(sphere(), Q1, 0.5, 1, TransformKind::darboux, random_light_point(3, 5), P);
  EXPECT_FALSE(e.predicate);
  EXPECT_TRUE(e.agree());
}

TEST(Pushforward, SecondOrderCovers) {
  const PushforwardVerdict a = pushforward_check(sech(), Q2, 0.375, 1, TransformKind::calapso, std::nullopt, P);
  const PushforwardVerdict b = pushforward_check(sech(), Q2, 0.375, 2, TransformKind::calapso, std::nullopt, P);
  EXPECT_FALSE(a.predicate);
  EXPECT_TRUE(b.predicate);
  EXPECT_TRUE(a.agree());
  EXPECT_TRUE(b.agree());
  EXPECT_THROW(pushforward_check(sech(), Q2, 0.375, 0, TransformKind::calapso, std::nullopt, P), validation_error);
}

TEST(Pushforward, SpacelikeDarbouxFixedPoints) {
  const StructureReport r = so_monodromy_structure(perturbed(), Q2, 0.625, P);
  const PushforwardVerdict w =
      pushforward_check(perturbed(), Q2, 0.625, 1, TransformKind::darboux, r.vector("w_plus"), P);
  EXPECT_TRUE(w.predicate);
  EXPECT_TRUE(w.agree());
}

TEST(ZeroCase, TransformsExtendThroughZero) {
  const ZeroCaseReport z = zero_case_smoke(sphere(), QuadDiff::simple_zero(), 0.7, P, random_light_point(3, 3));
  EXPECT_LT(z.calapso_spread, 1e-6);
  EXPECT_LT(z.darboux_spread, 1e-6);
  EXPECT_LT(z.monodromy_residual, 1e-8);
  EXPECT_GE(z.fitted_order, 0.9);
  EXPECT_THROW(zero_case_smoke(sphere(), Q1, 0.7, P, random_light_point(3, 3)), validation_error);
}

TEST(Scaling, SpectralRescalingIsInvisible) {
  const GridSpec g{2, 3, 3.0, 0.2, 0.7};
  EXPECT_LT(scaling_covariance(perturbed(), Q2, 0.375, 2.5, P, random_light_point(3, 9), g), 1e-9);
}
