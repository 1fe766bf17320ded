#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "curvlab/desingularize.hpp"

using namespace curvlab;

namespace {

EdgeData half_angle_edge() {
    EdgeData d;
    d.n = 3;
    d.eta = 0.9;
    d.link_lengths = {1.0};
    d.beta = [](const LinkPoint&) { return -0.5; };
    return d;
}

// Perturbation r^{1+eta} h = r^eta (a dr^2 + b r^2 dtheta^2), saturating the crude perturbation bound.
EdgeData decay_model() {
    EdgeData d = half_angle_edge();
    d.h = [](const auto& x) {
        Matd m(3);
        m(0, 0) = -0.4 / x[0];
        m(1, 1) = -0.1 * x[0];
        return m;
    };
    return d;
}

double max_abs(const CurvatureField& f, const Region& extra) {
    double m = 0.0;
    for (std::size_t i = 0; i < f.value.size(); ++i)
        if (f.computed[i] && extra[i]) m = std::max(m, std::abs(f.value[i]));
    return m;
}

}  // namespace

TEST(Cutoff, PaperConstraints) {
    CutoffSpec z;
    EXPECT_EQ(cutoff_zeta(z, 0.2), 0.0);
    EXPECT_EQ(cutoff_zeta(z, 0.9), 1.0);
    EXPECT_DOUBLE_EQ(cutoff_zeta_derivative(z, 0.5), 1.0);
    EXPECT_EQ(cutoff_zeta(z, 3.0), 1.0);
    for (int i = 0; i <= 900; ++i) {
        double x = i / 900.0;
        double d = cutoff_zeta_derivative(z, x);
        EXPECT_GE(d, 0.0);
        EXPECT_LE(d, 6.0);
        if (x >= 4.0 / 9.0 && x <= 5.0 / 9.0) EXPECT_DOUBLE_EQ(d, 1.0);
    }
}

TEST(Cutoff, FrozenCoefficientsSolveHermiteConditions) {
    // Independent solve of p(L) = 4/9, p'(L) = 1 for p = a s^2 + b s^3, L = 1/9.
    const double L = 1.0 / 9.0, A = 4.0 / 9.0;
    double det = L * L * 3.0 * L * L - L * L * L * 2.0 * L;
    double a = (A * 3.0 * L * L - L * L * L * 1.0) / det;
    double b = (L * L * 1.0 - 2.0 * L * A) / det;
    CutoffSpec z;
    EXPECT_NEAR(z.a, a, 1e-9);
    EXPECT_NEAR(z.b, b, 1e-9);
}

TEST(Cutoff, ContinuouslyDifferentiableAtKnots) {
    CutoffSpec z;
    for (double k : {1.0 / 3.0, 4.0 / 9.0, 5.0 / 9.0, 2.0 / 3.0}) {
        const double e = 1e-9;
        EXPECT_NEAR(z.value(k - e), z.value(k + e), 1e-7);
        EXPECT_NEAR(z.derivative(k - e), z.derivative(k + e), 1e-6);
        EXPECT_NEAR((z.value(k + e) - z.value(k - e)) / (2 * e), z.derivative(k), 1e-5);
    }
}

TEST(Cutoff, RejectsInvalidCoefficients) {
    EXPECT_THROW(CutoffSpec(100.0, -567.0), std::invalid_argument);
}

TEST(Profile, PaperValuesForHalfAngle) {
    const double eps = 0.02, rho = 0.7;
    EXPECT_EQ(profile_at(-0.5, rho, eps, 0.1 * eps * rho).f, 1.0);
    EXPECT_EQ(profile_at(-0.5, rho, eps, 0.9 * eps * rho).f, 2.0);
    // On the linear band zeta' = 1, so eps rho d_r f = (1+beta)^{-1} - 1 and r d_r f = x ((1+beta)^{-1} - 1).
    EXPECT_NEAR(profile_at(-0.5, rho, eps, 0.5 * eps * rho).r_df, 0.5, 1e-12);
    for (double x : {4.0 / 9.0, 0.5, 5.0 / 9.0}) EXPECT_NEAR(profile_at(-0.5, rho, eps, x * eps * rho).r_df / x, 1.0, 1e-12);
    EXPECT_THROW(profile_at(-1.0, rho, eps, 0.1), std::invalid_argument);
}

TEST(Profile, MonotoneBoundsForAnglesUpToFullTurn) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> B(-0.8, 0.0), X(0.0, 1.5);
    for (int i = 0; i < 2000; ++i) {
        double beta = B(rng);
        auto pv = profile_at(beta, 1.0, 1.0, X(rng));
        EXPECT_GE(pv.f, 1.0);
        EXPECT_GE(pv.r_df, 0.0);
        // r d_r f = x zeta'(x) ((1+beta)^{-1} - 1) <= 6 for the angles where the jump is at most 6 / max(x zeta').
        EXPECT_LE(pv.r_df, 6.0 * std::max(1.0, 1.0 / (1.0 + beta) - 1.0));
    }
}

TEST(SmoothedMetric, TrivialConeIsUnchanged) {
    EdgeData d = half_angle_edge();
    d.beta = [](const LinkPoint&) { return 0.0; };
    ChartSpec chart = polar_chart(1e-4, 0.5, 61, 8, {1.0}, 5, true);
    auto g = edge_metric(d, chart);
    auto gh = smoothed_metric(d, SmoothingParams{0.1}, chart);
    EXPECT_EQ(g.g.comps, gh.g.comps);
}

TEST(SmoothedMetric, ExteriorBitwiseAndFlatCore) {
    EdgeData d = half_angle_edge();
    const double eps = 0.1;
    ChartSpec chart = polar_chart(1e-3, 0.3, 121, 8, {1.0}, 5, false);
    auto g = edge_metric(d, chart);
    auto gh = smoothed_metric(d, SmoothingParams{eps}, chart);
    Grid grid(chart);
    for (std::size_t p = 0; p < grid.size(); ++p) {
        double r = grid.radius(p);
        if (r >= eps) {
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) EXPECT_EQ(g.g.get(p, i, j), gh.g.get(p, i, j));
        } else if (r <= eps / 3.0) {
            EXPECT_DOUBLE_EQ(gh.g.get(p, 0, 0), 0.25);
            EXPECT_DOUBLE_EQ(gh.g.get(p, 1, 1), 0.25 * r * r);
            EXPECT_DOUBLE_EQ(gh.g.get(p, 2, 2), 1.0);
        }
    }
}

TEST(SmoothedMetric, AxisSmoothOnCartesianPatch) {
    EdgeData d = half_angle_edge();
    ChartSpec chart;
    chart.axes = {Axis{-0.02, 0.02, 41, Boundary::clamped}, Axis{-0.02, 0.02, 41, Boundary::clamped},
                  Axis{0.0, 1.0, 5, Boundary::periodic}};
    auto gh = smoothed_metric_cartesian(d, SmoothingParams{0.1}, chart);
    auto R = scalar_curvature(gh);
    Region all(chart, true);
    // The core r <= eps rho / 3 contains the whole patch, where the metric is a constant multiple of flat.
    EXPECT_LT(max_abs(R, all), 1e-6);
}

TEST(SmoothedMetric, RejectsChartMissingTheCore) {
    EdgeData d = half_angle_edge();
    ChartSpec chart = polar_chart(0.05, 0.3, 41, 8, {1.0}, 5, false);
    EXPECT_THROW(smoothed_metric(d, SmoothingParams{0.1}, chart), std::invalid_argument);
}

TEST(SliceCurvature, ConstantProfileIsFlat) {
    ChartSpec chart = polar_chart(0.1, 0.9, 41, 8, {1.0}, 6, false);
    auto R = slice_scalar_curvature(ScalarField(chart, 1.7), {}, [](const LinkPoint&) { return Matd::identity(1); }, chart);
    EXPECT_EQ(max_abs(R, Region(chart, true)), 0.0);
}

TEST(SliceCurvature, RadialProfileMatchesClosedFormAndStencil) {
    auto run = [](int nr) {
        ChartSpec chart = polar_chart(0.2, 0.8, nr, 8, {1.0}, 6, false);
        auto fr = [](double r) { return 1.0 + 0.5 * r * r; };
        ScalarField f = sample_polar_scalar(chart, [&](const auto& x) { return fr(x[0]); });
        auto Rs = slice_scalar_curvature(f, {}, [](const LinkPoint&) { return Matd::identity(1); }, chart);
        auto Rg = scalar_curvature(simple_form_metric(f, {}, Matd::identity(1), chart));
        Grid grid(chart);
        double closed = 0.0, dual = 0.0;
        for (std::size_t p = 0; p < grid.size(); ++p) {
            double r = grid.radius(p), F = fr(r);
            if (Rs.computed[p]) closed = std::max(closed, std::abs(Rs.value[p] - 2.0 * r / (r * F * F * F)));
            if (Rg.computed[p] && r > 0.3) dual = std::max(dual, std::abs(Rs.value[p] - Rg.value[p]));
        }
        return std::pair{closed, dual};
    };
    auto [c1, d1] = run(61);
    auto [c2, d2] = run(121);
    EXPECT_LT(c2, 1e-4);
    EXPECT_LT(d2, 1e-2);
    EXPECT_GT(std::log2(d1 / d2), 1.7);
    EXPECT_LT(c1, 1e-4);
}

TEST(SliceCurvature, LinkDependentProfileMatchesStencil) {
    auto run = [](int nr, int ny) {
        ChartSpec chart = polar_chart(0.3, 0.8, nr, 8, {1.0}, ny, false);
        ScalarField f = sample_polar_scalar(chart, [](const auto& x) {
            return 1.2 + 0.2 * x[0] * x[0] * std::cos(2 * kPi * x[2]);
        });
        auto omega = [](const LinkPoint& y) {
            Matd m(1);
            m(0, 0) = 1.0 + 0.3 * std::sin(2 * kPi * y[0]);
            return m;
        };
        auto Rs = slice_scalar_curvature(f, {}, omega, chart);
        // Same metric sampled with a link-dependent omega for the stencil path.
        Grid grid(chart);
        TensorField t(chart);
        for (std::size_t p = 0; p < grid.size(); ++p) {
            double r = grid.radius(p);
            Matd m(3);
            m(0, 0) = f[p] * f[p];
            m(1, 1) = r * r;
            m(2, 2) = omega({grid.coord(p, 2), 0.0})(0, 0);
            t.put(p, m);
        }
        auto Rg = scalar_curvature(MetricField(t));
        double e = 0.0;
        for (std::size_t p = 0; p < grid.size(); ++p)
            if (Rg.computed[p] && grid.radius(p) > 0.4) e = std::max(e, std::abs(Rs.value[p] - Rg.value[p]));
        return e;
    };
    double e1 = run(41, 24), e2 = run(81, 48);
    EXPECT_LT(e2, 5e-2);
    EXPECT_GT(std::log2(e1 / e2), 1.7);
}

TEST(SliceCurvature, MiddleBandMainTermIsPositive) {
    const double eps = 0.3;
    EdgeData d = half_angle_edge();
    ChartSpec chart = polar_chart(0.01, 0.4, 400, 8, {1.0}, 5, false);
    ScalarField f = smoothing_profile(d, SmoothingParams{eps}, chart);
    auto Rs = slice_scalar_curvature(f, {}, [](const LinkPoint&) { return scaled(Matd::identity(1), 4.0); }, chart);
    Grid grid(chart);
    for (std::size_t p = 0; p < grid.size(); ++p) {
        double r = grid.radius(p);
        if (!Rs.computed[p]) continue;
        EXPECT_GE(Rs.value[p], -1e-9);
        if (r >= 4.0 / 9.0 * eps + 1e-3 && r <= 5.0 / 9.0 * eps - 1e-3) {
            double F = f[p];
            EXPECT_NEAR(Rs.value[p] * r * r, 2.0 * (r / eps) * (2.0 - 1.0) / (F * F * F), 1e-3);
        }
    }
}

TEST(SliceCurvature, RejectsTwist) {
    ChartSpec chart = polar_chart(0.1, 0.9, 21, 8, {1.0}, 6, false);
    EXPECT_THROW(slice_scalar_curvature(ScalarField(chart, 1.0), [](const LinkPoint&) { return LinkPoint{0.1, 0.0}; },
                                        [](const LinkPoint&) { return Matd::identity(1); }, chart),
                 std::invalid_argument);
}

TEST(Residual, RadialProfileResidualVanishesUnderRefinement) {
    auto run = [](int nr) {
        ChartSpec chart = polar_chart(1e-3, 0.5, nr, 8, {1.0}, 5, true);
        ScalarField f = sample_polar_scalar(chart, [](const auto& x) { return 1.0 + 0.5 * std::sin(3.0 * x[0]); });
        auto res = warped_curvature_residual(simple_form_metric(f, {}, Matd::identity(1), chart), f, 0.9);
        return max_abs(res, Region(chart, true));
    };
    double a = run(81), b = run(161);
    EXPECT_LT(b, 2.5e-3);
    EXPECT_GT(std::log2(a / b), 1.7);
}

TEST(Conclusions, TrivialConeHasNoNegativePart) {
    EdgeData d = half_angle_edge();
    d.beta = [](const LinkPoint&) { return 0.0; };
    SweepResolution res;
    res.t_step = 0.05;
    auto rep = verify_conclusions(d, SmoothingParams{}, {0.01, 0.005}, 0.01, res);
    for (const auto& r : rep.rows) {
        // Only rounding noise remains: the log-polar stencil is exact for the flat cone.
        EXPECT_LT(r.negative_norm, 1e-5);
        EXPECT_TRUE(std::isnan(r.band_min_eps2_R));
        EXPECT_EQ(r.exterior_residual, 0.0);
    }
}

TEST(Conclusions, DecayExponentAndConcentration) {
    std::vector<double> eps;
    for (int k = 0; k < 6; ++k) eps.push_back(1e-2 * std::pow(2.0, -k));
    auto rep = verify_conclusions(decay_model(), SmoothingParams{}, eps, 1e-2);
    EXPECT_NEAR(rep.expected_exponent, 0.15, 1e-12);
    EXPECT_NEAR(rep.decay_exponent, 0.15, 0.015);
    double lo = 1e300, hi = -1e300;
    for (const auto& r : rep.rows) {
        EXPECT_EQ(r.exterior_residual, 0.0);
        EXPECT_NEAR(r.c1, 4.0, 0.1);
        EXPECT_GT(r.band_min_eps2_R, 0.0);
        EXPECT_GT(r.exterior_min_R, 0.0);
        lo = std::min(lo, r.band_min_eps2_R);
        hi = std::max(hi, r.band_min_eps2_R);
    }
    EXPECT_LT(hi / lo, 1.2);
}

TEST(Conclusions, SweepIsThreadCountIndependent) {
    std::vector<double> eps{4e-3, 2e-3, 1e-3};
    SweepResolution one, three;
    one.t_step = three.t_step = 0.05;
    three.threads = 3;
    auto a = verify_conclusions(decay_model(), SmoothingParams{}, eps, 1e-2, one);
    auto b = verify_conclusions(decay_model(), SmoothingParams{}, eps, 1e-2, three);
    for (std::size_t i = 0; i < eps.size(); ++i) EXPECT_EQ(a.rows[i].negative_norm, b.rows[i].negative_norm);
}

TEST(Conclusions, RejectsEpsilonOutsideRange) {
    EXPECT_THROW(verify_conclusions(decay_model(), SmoothingParams{}, {0.02}, 0.01), std::invalid_argument);
    EXPECT_THROW(verify_conclusions(decay_model(), SmoothingParams{}, {0.0}, 0.01), std::invalid_argument);
}

TEST(Conclusions, ThresholdMeetsTolerance) {
    SweepResolution res;
    res.t_step = 0.05;
    const double gamma = 1.0;
    SmoothingParams p;
    double e1 = epsilon_threshold(decay_model(), p, gamma, 1e-2, res, 20);
    p.epsilon = e1;
    EXPECT_LE(smoothing_row(decay_model(), p, res).negative_norm, gamma);
    p.epsilon = e1 * 1.05;
    EXPECT_GT(smoothing_row(decay_model(), p, res).negative_norm, gamma);
}

TEST(Skeleton, TubeRadiusIsHalfTheBoundaryDistance) {
    SkeletonPiece a{{{0, 0, 0}, {1, 0, 0}}};
    auto sk = build_skeleton({a});
    EXPECT_DOUBLE_EQ(skeleton_tube_radius(sk, {0.25, 0, 0}), 0.125);
    EXPECT_DOUBLE_EQ(skeleton_tube_radius(sk, {0.5, 0, 0}), 0.25);
}
