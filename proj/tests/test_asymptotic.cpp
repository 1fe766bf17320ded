#include <gtest/gtest.h>

#include <cmath>

#include "curvlab/asymptotic.hpp"

using namespace curvlab;

namespace {

MetricField flat_cube(int samples, double half = 1.0) {
    return sample_metric(cube_chart(3, samples, -half, half), [](const auto&) -> Matd { return Matd::identity(3); });
}

double bump(double r, double c) { return r < c ? std::pow(1.0 - r * r / (c * c), 4) : 0.0; }

CurvatureField radial_curvature(const ChartSpec& chart, double amplitude, double c) {
    CurvatureField R{sample_scalar(chart, [=](const auto& x) {
                         return amplitude * bump(std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]), c);
                     }),
                     Region(chart, true)};
    return R;
}

}  // namespace

TEST(Quadrature, GaussLegendreIsExactForPolynomials) {
    auto g = detail::gauss_legendre(8);
    for (int k = 0; k <= 15; ++k) {
        double s = 0.0;
        for (int i = 0; i < 8; ++i) s += g.w[i] * std::pow(g.x[i], k);
        EXPECT_NEAR(s, k % 2 ? 0.0 : 2.0 / (k + 1), 1e-14);
    }
    EXPECT_NEAR(detail::sphere_quadrature(6, 12, [](const Point3&) { return 1.0; }), 4.0 * kPi, 1e-13);
    EXPECT_NEAR(detail::sphere_quadrature(6, 12, [](const Point3& x) { return x[2] * x[2]; }), 4.0 * kPi / 3.0, 1e-13);
}

TEST(AdmMass, SchwarzschildFluxMatchesClosedForm) {
    auto s = schwarzschild(1.0);
    for (double r : {4.0, 20.0}) EXPECT_NEAR(adm_flux([&](const auto& x) { return s.metric_at(x); }, r), std::pow(1.0 + 0.5 / r, 3), 1e-8);
}

TEST(AdmMass, ExtrapolatesToTheMass) {
    for (double m : {1.0, 0.5, 0.25, -0.1, -0.5}) {
        auto rep = adm_mass(schwarzschild(m), {8.0, 16.0, 32.0, 64.0});
        EXPECT_FALSE(rep.divergent);
        EXPECT_NEAR(rep.mass, m, 1e-5 * std::abs(m)) << "m = " << m;
    }
}

TEST(AdmMass, IndependentOfTheRadiusSet) {
    auto s = schwarzschild(0.8);
    auto a = adm_mass(s, {8.0, 16.0, 32.0, 64.0});
    auto b = adm_mass(s, {16.0, 32.0, 64.0, 128.0});
    auto c = adm_mass(s, {10.0, 20.0, 40.0, 80.0});
    EXPECT_NEAR(a.mass, b.mass, 1e-5);
    EXPECT_NEAR(a.mass, c.mass, 1e-5);
}

TEST(AdmMass, FlagsGrowingFlux) {
    TensorFn g = [](const auto& x) {
        double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        return scaled(Matd::identity(3), 1.0 + 0.1 * r);
    };
    EXPECT_TRUE(adm_mass(g, {8.0, 16.0, 32.0, 64.0}).divergent);
    EXPECT_THROW(adm_mass(g, {8.0, 15.0}), std::invalid_argument);
}

TEST(AsymptoticModel, RejectsChartsInsideTheHorizonRadius) {
    auto s = schwarzschild(-1.0);
    EXPECT_DOUBLE_EQ(s.r_inner, 0.5);
    EXPECT_THROW(s.sample(cube_chart(3, 5, -1.0, 1.0)), std::invalid_argument);
    ChartSpec far = cube_chart(3, 5, 1.0, 2.0);
    EXPECT_NO_THROW(s.sample(far));
    EXPECT_THROW(schwarzschild(1.0, 4), std::invalid_argument);
}

TEST(Zeroing, NonnegativeCurvatureLeavesTheMetric) {
    auto g = flat_cube(13);
    auto z = conformal_zeroing(g, radial_curvature(g.chart(), 2.0, 0.5), zeroing_coefficient(3));
    EXPECT_EQ(z.max_deviation, 0.0);
    EXPECT_EQ(z.mass_shift, 0.0);
}

TEST(Zeroing, RemovesTheNegativePart) {
    auto g = flat_cube(25);
    auto R = radial_curvature(g.chart(), -3.0, 0.6);
    for (std::size_t p = 0; p < R.value.size(); ++p) R.value[p] += 0.5 * bump(std::abs(Grid(g.chart()).coords(p)[0] - 0.3), 0.2);
    auto z = conformal_zeroing(g, R, zeroing_coefficient(3));
    EXPECT_TRUE(z.solve.converged);
    EXPECT_GT(z.max_deviation, 0.0);
    double scale = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        EXPECT_GE(z.u[p], 1.0);
        if (!z.curvature.computed[p]) continue;
        double expect = std::max(R.value[p], 0.0) / std::pow(z.u[p], 4);
        EXPECT_NEAR(z.curvature.value[p], expect, 1e-8);
        EXPECT_GE(z.curvature.value[p], -1e-8);
        scale = std::max(scale, std::abs(z.curvature.value[p]));
    }
    EXPECT_GT(scale, 0.0);
    EXPECT_GT(z.mass_shift, 0.0);
}

TEST(Zeroing, MassShiftIsLinearForSmallSources) {
    auto g = flat_cube(17);
    auto a = conformal_zeroing(g, radial_curvature(g.chart(), -0.01, 0.5), 0.125);
    auto b = conformal_zeroing(g, radial_curvature(g.chart(), -0.02, 0.5), 0.125);
    EXPECT_NEAR(b.mass_shift / a.mass_shift, 2.0, 0.01);
    EXPECT_NEAR(b.max_deviation / a.max_deviation, 2.0, 0.01);
}

TEST(Zeroing, RejectsClosedChartsAndNonCoerciveSources) {
    auto torus = sample_metric(torus_chart(3, 6), [](const auto&) -> Matd { return Matd::identity(3); });
    CurvatureField R{ScalarField(torus.chart(), -1.0), Region(torus.chart(), true)};
    EXPECT_THROW(conformal_zeroing(torus, R, 0.125), std::invalid_argument);
    auto g = flat_cube(9);
    EXPECT_ANY_THROW(conformal_zeroing(g, CurvatureField{ScalarField(g.chart(), -1e4), Region(g.chart(), true)}, 0.125));
}

TEST(Green, FlatBallRecoversTheNewtonianCoefficient) {
    auto h = flat_cube(41);
    auto G = greens_function(h, {Point3{0, 0, 0}}, ScalarField(h.chart(), 0.0));
    EXPECT_TRUE(G.solve.converged);
    EXPECT_TRUE(G.positive);
    EXPECT_NEAR(G.coefficient[0], 1.0 / (32.0 * kPi), 0.02 / (32.0 * kPi));
    EXPECT_LT(G.offset[0], 0.0);
    EXPECT_GE(G.c_G, 1.0);
    EXPECT_TRUE(std::isfinite(G.c_G));
    EXPECT_NEAR(G.evaluate({0.4, 0.1, -0.2}), G.evaluate({-0.4, -0.1, 0.2}), 1e-12);
    EXPECT_DOUBLE_EQ(G.evaluate({0.05, 0, 0}), G.coefficient[0] / 0.05 + G.offset[0]);
    EXPECT_EQ(G.evaluate({2.0, 0, 0}), 0.0);
}

TEST(Green, PotentialLowersTheFunction) {
    auto h = flat_cube(25);
    auto G0 = greens_function(h, {Point3{0, 0, 0}}, ScalarField(h.chart(), 0.0));
    auto G1 = greens_function(h, {Point3{0, 0, 0}}, ScalarField(h.chart(), 5.0));
    for (std::size_t p = 0; p < h.size(); ++p) EXPECT_LE(G1.G[p], G0.G[p] + 1e-15);
}

TEST(Green, RejectsBadPoles) {
    auto h = flat_cube(21);
    ScalarField V(h.chart(), 0.0);
    EXPECT_THROW(greens_function(h, {Point3{0.03, 0, 0}}, V), std::invalid_argument);
    EXPECT_THROW(greens_function(h, {Point3{1.0, 0, 0}}, V), std::invalid_argument);
    EXPECT_THROW(greens_function(h, {Point3{0.9, 0, 0}}, V), std::invalid_argument);
}

TEST(Blowup, ScalarFlatAwayFromThePole) {
    auto h = flat_cube(25);
    auto G = greens_function(h, {Point3{0, 0, 0}}, ScalarField(h.chart(), 0.0));
    CurvatureField Rh{ScalarField(h.chart(), 0.0), Region(h.chart(), true)};
    auto b = conformal_blowup(h, G, 8.0, Rh);
    Grid grid(h.chart());
    std::size_t pole = 0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
        auto x = grid.coords(p);
        if (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < 1e-20) {
            pole = p;
            continue;
        }
        if (b.curvature.computed[p]) EXPECT_NEAR(b.curvature.value[p], 0.0, 1e-7);
    }
    EXPECT_GT(b.curvature.value[pole], 0.0);
    EXPECT_THROW(conformal_blowup(h, G, -1.0, Rh), std::invalid_argument);
}

TEST(Inversion, EquivalenceConstantStabilizes) {
    auto h = flat_cube(41);
    auto G = greens_function(h, {Point3{0, 0, 0}}, ScalarField(h.chart(), 0.0));
    auto Gf = [&G](const Point3& y) { return G.evaluate(y); };
    TensorFn flat = [](const auto&) -> Matd { return Matd::identity(3); };
    const double sigma = 8.0;
    auto rep = inversion_equivalence(inversion_pullback(flat, Gf, sigma), {512.0, 1024.0, 2048.0});
    EXPECT_TRUE(rep.stable);
    EXPECT_LT(rep.drift, 0.1);
    EXPECT_NEAR(rep.constants.back(), std::pow(sigma * G.coefficient[0], -4), 0.1 * rep.constants.back());

    auto control = inversion_equivalence(inversion_pullback(flat, Gf, 0.0), {512.0, 1024.0, 2048.0});
    EXPECT_FALSE(control.stable);
    EXPECT_NEAR(control.constants[1] / control.constants[0], 16.0, 1e-6);
}

TEST(Neck, SchwarzschildHorizon) {
    for (double m : {0.5, 1.0, 2.0}) {
        auto rep = minimal_sphere_search(schwarzschild(m), 50.0 * m);
        EXPECT_TRUE(rep.interior);
        EXPECT_NEAR(rep.r_min, 0.5 * m, 1e-6 * m);
        EXPECT_NEAR(rep.area_min, 16.0 * kPi * m * m, 1e-9 * m * m);
    }
}

TEST(Neck, AreaScalesWithTheSquaredMass) {
    double a = minimal_sphere_search(schwarzschild(0.5), 25.0).area_min;
    double b = minimal_sphere_search(schwarzschild(1.0), 50.0).area_min;
    double c = minimal_sphere_search(schwarzschild(2.0), 100.0).area_min;
    EXPECT_NEAR(b / a, 4.0, 0.04);
    EXPECT_NEAR(c / b, 4.0, 0.04);
}

TEST(Neck, RejectsUnorderedRadii) {
    EXPECT_THROW(minimal_sphere_search([](double r) { return r; }, {1.0, 3.0, 2.0}), std::invalid_argument);
    auto rep = minimal_sphere_search([](double r) { return 4.0 * kPi * r * r; }, log_radii(0.1, 1.0, 20));
    EXPECT_FALSE(rep.interior);
    EXPECT_DOUBLE_EQ(rep.r_min, 0.1);
    EXPECT_LE(rep.area_min, rep.areas.front());
}

TEST(Neck, NegativeMassHasNoNeck) {
    auto rep = minimal_sphere_search(schwarzschild(-1.0), 50.0);
    EXPECT_FALSE(rep.interior);
    EXPECT_NEAR(rep.r_min, 0.5, 1e-6);
}

TEST(Neck, BlowupNeckMatchesTheLeadingTerm) {
    auto h = flat_cube(41);
    auto G = greens_function(h, {Point3{0, 0, 0}}, ScalarField(h.chart(), 0.0));
    double A = G.coefficient[0], B = G.offset[0];
    for (double sigma : {8.0, 4.0, 2.0}) {
        auto rep = minimal_sphere_search(blowup_sphere_area(G, 0, sigma), log_radii(1e-3, 0.45, 80));
        ASSERT_TRUE(rep.interior) << sigma;
        double c = sigma * A / (1.0 + sigma * B);
        EXPECT_NEAR(rep.r_min, c, 0.03 * c) << sigma;
        EXPECT_NEAR(rep.area_min, 64.0 * kPi * c * c * std::pow(1.0 + sigma * B, 4), 0.03 * rep.area_min) << sigma;
    }
}

TEST(FirstVariation, MatchesTheRicciPairing) {
    auto s = schwarzschild(1.0);
    TensorFn g = [&s](const auto& x) { return s.metric_at(x); };
    TensorFn h = [](const auto& x) {
        double w = bump(std::abs(x[0] - 2.0), 0.8) * bump(std::abs(x[1]), 0.8) * bump(std::abs(x[2]), 0.8);
        Matd m(3);
        m(0, 0) = w;
        m(1, 1) = 0.5 * w;
        m(0, 1) = m(1, 0) = 0.3 * w;
        return m;
    };
    ChartSpec chart;
    chart.axes = {Axis{1.0, 3.0, 33, Boundary::clamped}, Axis{-1.0, 1.0, 33, Boundary::clamped},
                  Axis{-1.0, 1.0, 33, Boundary::clamped}};
    auto a = mass_first_variation(g, h, chart, 1e-3);
    auto b = mass_first_variation(g, h, chart, 5e-4);
    EXPECT_NEAR(a.ratio, FirstVariation::expected_ratio(), 0.05 * std::abs(FirstVariation::expected_ratio()));
    EXPECT_NEAR(a.measured, b.measured, 0.05 * std::abs(a.measured));
}

TEST(Neck, BlowupNeckShrinksWithSigma) {
    auto h = flat_cube(25);
    auto G = greens_function(h, {Point3{0, 0, 0}}, ScalarField(h.chart(), 0.0));
    double prev_area = kInfinity, prev_r = kInfinity;
    for (double sigma : {8.0, 4.0, 2.0, 1.0, 0.5}) {
        auto rep = minimal_sphere_search(blowup_sphere_area(G, 0, sigma), log_radii(1e-4, 0.45, 120));
        ASSERT_TRUE(rep.interior) << sigma;
        EXPECT_LT(rep.area_min, prev_area);
        EXPECT_LT(rep.r_min, prev_r);
        prev_area = rep.area_min;
        prev_r = rep.r_min;
    }
    EXPECT_LT(prev_area, 0.01);
}

TEST(Green, LinearInTheSource) {
    auto h = flat_cube(25);
    ScalarField V(h.chart(), 0.0);
    Point3 a{-0.25, 0, 0}, b{0.25, 0.25, 0};
    GreenOptions opt;
    opt.buffer_cells = 2;
    opt.fit_fraction = 0.9;
    auto Ga = greens_function(h, {a}, V, opt), Gb = greens_function(h, {b}, V, opt), Gab = greens_function(h, {a, b}, V, opt);
    double scale = 0.0;
    for (std::size_t p = 0; p < h.size(); ++p) scale = std::max(scale, Gab.G[p]);
    for (std::size_t p = 0; p < h.size(); ++p) EXPECT_NEAR(Gab.G[p], Ga.G[p] + Gb.G[p], 1e-9 * scale);
}

TEST(Blowup, PositiveCurvatureStaysPositive) {
    // Round sphere in stereographic coordinates: R = 6.
    auto h = sample_metric(cube_chart(3, 25, -1.0, 1.0), [](const auto& x) {
        double w = 2.0 / (1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        return scaled(Matd::identity(3), w * w);
    });
    auto Rh = scalar_curvature(h);
    ScalarField V = truncation_potential(Rh, 1.0);
    auto G = greens_function(h, {Point3{0, 0, 0}}, V);
    EXPECT_TRUE(G.positive);
    auto b = conformal_blowup(h, G, 4.0, Rh);
    Grid grid(h.chart());
    std::size_t checked = 0;
    for (std::size_t p = 0; p < h.size(); ++p) {
        if (!b.curvature.computed[p] || !G.positive) continue;
        auto x = grid.coords(p);
        bool pole = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < 1e-20;
        ASSERT_GE(Rh.value[p], 1.0);
        EXPECT_GT(b.curvature.value[p], 0.0);
        double f = b.factor[p];
        double expect = (Rh.value[p] + 4.0 * (Rh.value[p] - V[p]) * G.G[p]) / std::pow(f, 5);
        if (!pole) EXPECT_NEAR(b.curvature.value[p], expect, 1e-6 * std::abs(expect));
        ++checked;
    }
    EXPECT_GT(checked, 1000u);
}

TEST(Inversion, PerturbedBallMetricStaysUniformlyEuclidean) {
    TensorFn ball = [](const auto& x) {
        Matd m = Matd::identity(3);
        m(0, 0) = 1.0 + 0.2 * x[1] * x[1];
        m(1, 2) = m(2, 1) = 0.1 * x[0];
        return m;
    };
    auto h = sample_metric(cube_chart(3, 33, -1.0, 1.0), ball);
    auto G = greens_function(h, {Point3{0, 0, 0}}, ScalarField(h.chart(), 0.0));
    EXPECT_NEAR(G.coefficient[0], 1.0 / (32.0 * kPi), 0.1 / (32.0 * kPi));
    auto rep = inversion_equivalence(inversion_pullback(ball, [&G](const Point3& y) { return G.evaluate(y); }, 8.0),
                                     {512.0, 1024.0, 2048.0, 4096.0});
    EXPECT_TRUE(rep.stable);
    for (double c : rep.constants) EXPECT_TRUE(std::isfinite(c));
}

namespace {

RingModel ring(bool varying, double background) {
    LinkFn beta = varying ? LinkFn([](const LinkPoint& y) { return -0.5 + 0.1 * std::cos(y[0]); })
                          : LinkFn([](const LinkPoint&) { return -0.5; });
    return edge_ring(1.0, 0.05, beta, background);
}

SweepResolution ring_resolution() {
    SweepResolution res;
    res.core_fraction = 1e-3;
    res.t_step = 0.03;
    res.n_y = 8;
    return res;
}

}  // namespace

TEST(RingMass, ShellCurvatureMatchesTheAngleDeficit) {
    for (bool varying : {false, true}) {
        auto sh = ring_shell_mass(ring(varying, 0.0));
        EXPECT_NEAR(sh.signed_mass, sh.oracle_signed, 2e-3 * std::abs(sh.oracle_signed));
        EXPECT_NEAR(sh.oracle_signed, -0.25 * kPi, 1e-12);
        EXPECT_GE(sh.negative_mass, -sh.signed_mass);
    }
}

TEST(RingMass, ConstantAngleGivesAConstantColumn) {
    auto st = mass_convergence_study(ring(false, 1.0), SmoothingParams{}, {0.4, 0.2, 0.1}, ring_resolution());
    EXPECT_NEAR(st.background, 1.0, 1e-4);
    for (const auto& r : st.rows) {
        EXPECT_LT(r.shift, 1e-9);
        EXPECT_NEAR(r.mass, st.rows.front().mass, 1e-9);
    }
    EXPECT_GE(st.extrapolated, 1.0);
}

TEST(RingMass, VaryingAngleConvergesAboveAPositiveFloor) {
    auto st = mass_convergence_study(ring(true, 0.0), SmoothingParams{}, {0.4, 0.2, 0.1, 0.05}, ring_resolution());
    EXPECT_TRUE(st.converged(0.02));
    EXPECT_GT(st.floor, 0.0);
    for (const auto& r : st.rows) EXPECT_GT(r.shift, 0.0);
    EXPECT_THROW(mass_convergence_study(ring(true, 0.0), SmoothingParams{}, {0.4, 0.2}, ring_resolution()),
                 std::invalid_argument);
}

TEST(RingMass, ConformalFactorTendsToOne) {
    EdgeData d;
    d.beta = [](const LinkPoint&) { return -0.5; };
    d.h = [](const auto& x) -> Matd {
        Matd m(3);
        m(0, 0) = -0.4 / x[0];
        m(1, 1) = -0.1 * x[0];
        return m;
    };
    SweepResolution res = ring_resolution();
    double prev = kInfinity;
    for (double e : {0.2, 0.1, 0.05, 0.025}) {
        SmoothingParams p;
        p.epsilon = e;
        auto z = smoothed_tube_zeroing(d, p, 1.25 * e, res);
        EXPECT_GT(z.max_deviation, 0.0);
        EXPECT_LT(z.max_deviation, 0.7 * prev);
        prev = z.max_deviation;
    }
}
