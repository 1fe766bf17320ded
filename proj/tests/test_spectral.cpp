#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "curvlab/spectral.hpp"

using namespace curvlab;

namespace {

MetricField flat_torus(int n, int samples) {
    return sample_metric(torus_chart(n, samples), [n](const auto&) -> Matd { return Matd::identity(n); });
}

MetricField wavy_torus(int samples) {
    return sample_metric(torus_chart(3, samples), [](const auto& x) {
        Matd m = Matd::identity(3);
        double w = 1.0 + 0.2 * std::sin(2.0 * kPi * x[0]) * std::cos(2.0 * kPi * x[1]);
        m(0, 0) = w;
        m(1, 1) = 1.0 / w;
        m(2, 2) = 1.0 + 0.1 * std::sin(2.0 * kPi * x[2]);
        return m;
    });
}

ScalarField random_field(const ChartSpec& c, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> U(lo, hi);
    ScalarField f(c);
    for (double& v : f.values) v = U(rng);
    return f;
}

// Round S^2 x S^1 as a doubled polar chart: r in (0, pi), both radial ends reflecting.
MetricField round_sphere_product(int nr) {
    auto c = polar_chart(0.0, kPi, nr, 16, {1.0}, 5, false, Boundary::reflecting);
    return sample_polar_metric(c, [](const auto& x) {
        Matd m = Matd::identity(3);
        m(1, 1) = std::sin(x[0]) * std::sin(x[0]);
        return m;
    });
}

}  // namespace

TEST(Truncation, IdentityBelowScaleAndCapAbove) {
    EXPECT_DOUBLE_EQ(truncate_phi(-3.0, 1.0), -3.0);
    EXPECT_DOUBLE_EQ(truncate_phi(0.7, 1.0), 0.7);
    EXPECT_DOUBLE_EQ(truncate_phi(5.0, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(truncate_phi(2.0, 1.0), 1.75);
    EXPECT_THROW(truncate_phi(1.0, 0.0), std::invalid_argument);
}

TEST(Truncation, MonotoneBelowIdentityAndC1) {
    for (double s : {0.1, 1.0, 37.0}) {
        double prev = -kInfinity;
        for (int i = 0; i <= 4000; ++i) {
            double x = -s + 5.0 * s * i / 4000.0;
            double p = truncate_phi(x, s);
            EXPECT_LE(p, x + 1e-15 * s);
            EXPECT_GE(p, prev);
            EXPECT_LE(p, 2.0 * s);
            prev = p;
        }
        for (double knot : {s, 3.0 * s}) {
            double d = 1e-7 * s;
            double left = (truncate_phi(knot, s) - truncate_phi(knot - d, s)) / d;
            double right = (truncate_phi(knot + d, s) - truncate_phi(knot, s)) / d;
            EXPECT_NEAR(left, right, 1e-6);
            EXPECT_NEAR(truncate_phi_derivative(knot - d, s), truncate_phi_derivative(knot + d, s), 1e-6);
        }
    }
}

TEST(Truncation, WeightProfile) {
    const double eps = 0.01, q = 1.6;
    const double top = std::pow(eps, -2.0 / q);
    EXPECT_DOUBLE_EQ(weight_zeta(0.0, eps, q), top);
    EXPECT_DOUBLE_EQ(weight_zeta(eps, eps, q), top);
    EXPECT_DOUBLE_EQ(weight_zeta(2.0 * eps, eps, q), 1.0);
    EXPECT_DOUBLE_EQ(weight_zeta(1.0, eps, q), 1.0);
    double prev = top;
    for (int i = 0; i <= 200; ++i) {
        double z = weight_zeta(eps * (1.0 + i / 200.0), eps, q);
        EXPECT_LE(z, prev);
        EXPECT_GE(z, 1.0);
        EXPECT_LE(z, top);
        prev = z;
    }
}

TEST(ConjugateGradient, SolvesTridiagonalSystem) {
    const int n = 50;
    LinearOp A = [&](const std::vector<double>& x, std::vector<double>& y) {
        y.resize(n);
        for (int i = 0; i < n; ++i) y[i] = 3.0 * x[i] - (i > 0 ? x[i - 1] : 0.0) - (i + 1 < n ? x[i + 1] : 0.0);
    };
    std::vector<double> xs(n), b(n), x;
    for (int i = 0; i < n; ++i) xs[i] = std::sin(0.3 * i);
    A(xs, b);
    auto st = conjugate_gradient(A, b, x, 1e-14, 500);
    EXPECT_TRUE(st.converged);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(x[i], xs[i], 1e-12);
}

TEST(Eigenpair, ConstantPotentialGivesConstantEigenfunction) {
    auto g = wavy_torus(8);
    ScalarField chi(g.chart(), 2.5);
    auto r = principal_eigenpair(g, chi);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.lambda, 2.5, 1e-10);
    EXPECT_NEAR(r.harnack_c0, 1.0, 1e-8);
    EXPECT_LT(r.residual, 1e-8);
    EXPECT_NEAR(integrate(ScalarField(r.u), g, 2.0), 1.0, 1e-10);
}

TEST(Eigenpair, ShiftIdentity) {
    std::mt19937_64 rng(11);
    auto g = wavy_torus(8);
    auto chi = random_field(g.chart(), rng, -1.0, 3.0);
    auto base = principal_eigenpair(g, chi);
    for (double c : {0.5, -2.0, 10.0}) {
        ScalarField shifted = chi;
        for (double& v : shifted.values) v += c;
        auto r = principal_eigenpair(g, shifted);
        EXPECT_NEAR(r.lambda, base.lambda + c, 1e-10 * (1.0 + std::abs(r.lambda)));
    }
}

TEST(Eigenpair, MonotoneInPotential) {
    std::mt19937_64 rng(5);
    auto g = flat_torus(3, 8);
    for (int trial = 0; trial < 10; ++trial) {
        auto chi1 = random_field(g.chart(), rng, -2.0, 2.0);
        auto bump = random_field(g.chart(), rng, 0.0, 1.0);
        ScalarField chi2 = chi1;
        for (std::size_t i = 0; i < chi2.size(); ++i) chi2[i] += bump[i];
        double l1 = principal_eigenpair(g, chi1).lambda;
        double l2 = principal_eigenpair(g, chi2).lambda;
        EXPECT_LE(l1, l2 + 1e-10 * (1.0 + std::abs(l2)));
    }
}

TEST(Eigenpair, PositiveEigenfunctionAndSmallResidual) {
    std::mt19937_64 rng(3);
    auto g = wavy_torus(10);
    auto chi = random_field(g.chart(), rng, -5.0, 5.0);
    auto r = principal_eigenpair(g, chi);
    EXPECT_TRUE(r.converged);
    EXPECT_LT(r.residual, 1e-8);
    for (double v : r.u.values) EXPECT_GT(v, 0.0);
    EXPECT_GE(r.harnack_c0, 1.0);
}

TEST(Eigenpair, LowerBoundHolds) {
    std::mt19937_64 rng(17);
    auto g = wavy_torus(8);
    for (int trial = 0; trial < 5; ++trial) {
        auto chi = random_field(g.chart(), rng, -1.0, 4.0);
        auto r = principal_eigenpair(g, chi);
        double lb = eigen_lower_bound(chi, r.harnack_c0, g);
        EXPECT_GE(r.lambda, lb - 1e-10);
    }
}

TEST(Eigenpair, MatchesDenseOneDimensionalReference) {
    // chi depends on x only, so a fine grid in x with a coarse transverse grid is the reference.
    auto solve = [](int nx) {
        ChartSpec c = torus_chart(3, 5);
        c.axes[0].samples = nx;
        auto g = sample_metric(c, [](const auto&) -> Matd { return Matd::identity(3); });
        auto chi = sample_scalar(c, [](const auto& x) { return 1.0 + 0.1 * std::sin(2.0 * kPi * x[0]); });
        return principal_eigenpair(g, chi).lambda;
    };
    double ref = solve(256);
    double coarse = solve(16);
    EXPECT_NEAR(coarse, ref, 1e-6 * std::abs(ref));
    // second-order perturbation theory: 1 - (0.1^2 / 2) / (8 (2 pi)^2)
    EXPECT_NEAR(ref, 1.0 - 0.005 / (8.0 * 4.0 * kPi * kPi), 1e-8);
}

TEST(Eigenpair, RejectsOpenChart) {
    auto g = sample_metric(cube_chart(3, 6, 0.0, 1.0), [](const auto&) -> Matd { return Matd::identity(3); });
    ScalarField chi(g.chart(), 1.0);
    EXPECT_THROW(principal_eigenpair(g, chi), std::invalid_argument);
}

TEST(Eigenpair, DoubledPolarChartSphereProduct) {
    auto g = round_sphere_product(40);
    ScalarField chi(g.chart(), 2.0);
    auto r = principal_eigenpair(g, chi);
    EXPECT_NEAR(r.lambda, 2.0, 1e-10);
    // mean-zero potential: the constant test function gives lambda < 0
    auto chi2 = sample_polar_scalar(g.chart(), [](const auto& x) { return std::cos(x[0]); });
    auto r2 = principal_eigenpair(g, chi2);
    EXPECT_LT(r2.lambda, 0.0);
    EXPECT_GT(r2.lambda, -1.0);
}

TEST(Eigenpair, EmpiricalCoercivityThreshold) {
    auto g = flat_torus(3, 8);
    ScalarField plus(g.chart(), 1.0);
    auto bump = sample_scalar(g.chart(), [](const auto& x) {
        double d2 = 0.0;
        for (int k = 0; k < 3; ++k) d2 += (x[k] - 0.5) * (x[k] - 0.5);
        return std::exp(-d2 / 0.02);
    });
    double d0 = empirical_delta0(g, plus, bump, 200.0);
    EXPECT_GT(d0, 0.0);
    double vol = volume(g, Region(g.chart(), true));
    EXPECT_LT(d0, 10.0 * vol);
}

TEST(Budget, TruncationAndSigns) {
    auto g = flat_torus(3, 6);
    ScalarField R(g.chart()), zeta(g.chart(), 1.0);
    for (std::size_t i = 0; i < R.size(); ++i) R[i] = (i % 2) ? 10.0 : -0.5;
    auto b = positivity_budget(g, R, zeta, 2.0, Region(g.chart(), true));
    EXPECT_NEAR(b.positive, 0.5 * 2.0, 1e-12);
    EXPECT_NEAR(b.negative, 0.5 * 0.5, 1e-12);
    EXPECT_NEAR(b.weighted_negative, 16.0 * 0.25, 1e-12);
    EXPECT_NEAR(b.net, 2.0 * 0.5 - 4.0, 1e-12);
    EXPECT_FALSE(b.positive_net());
}

TEST(Pipeline, DeclinesScalarFlatFullAngleModel) {
    PscModel m;
    m.g = flat_torus(3, 6);
    m.R = ScalarField(m.g.chart(), 0.0);
    m.zeta = ScalarField(m.g.chart(), 1.0);
    m.scalar_flat = true;
    m.full_angles = true;
    auto r = psc_pipeline(m);
    EXPECT_TRUE(r.declined);
}

TEST(Pipeline, PositiveModelStaysPositive) {
    PscModel m;
    m.g = round_sphere_product(40);
    m.R = ScalarField(m.g.chart(), 2.0);
    m.zeta = ScalarField(m.g.chart(), 1.0);
    auto r = psc_pipeline(m);
    ASSERT_FALSE(r.declined);
    ASSERT_FALSE(r.budget_failed);
    EXPECT_GT(r.spectral.lambda, 0.0);
    EXPECT_GT(r.min_curvature, 0.0);
}

TEST(Pipeline, TransformedCurvatureIdentity) {
    std::mt19937_64 rng(23);
    PscModel m;
    m.g = wavy_torus(8);
    m.R = random_field(m.g.chart(), rng, -0.2, 6.0);
    m.zeta = random_field(m.g.chart(), rng, 1.0, 2.0);
    auto r = psc_pipeline(m);
    ASSERT_FALSE(r.budget_failed);
    ScalarField chi = truncated_curvature(m.R, m.zeta);
    for (std::size_t i = 0; i < chi.size(); ++i) {
        double u = r.spectral.u[i];
        double expect = (m.R[i] - chi[i] + r.spectral.lambda) / (u * u * u * u);
        EXPECT_NEAR(r.curvature[i], expect, 1e-7 * (1.0 + std::abs(expect)));
    }
    EXPECT_GT(r.min_curvature, 0.0);
}

namespace {

EdgeData half_angle_tube() {
    EdgeData d;
    d.beta = [](const LinkPoint&) { return -0.5; };
    return d;
}

}  // namespace

TEST(TubeBudget, InjectionAmplitudeHitsTargetNorm) {
    auto d = half_angle_tube();
    SmoothingParams p;
    for (double gamma : {1e-3, 1e-2}) {
        auto row = budget_row(d, p, gamma, 1.0, SweepResolution{});
        EXPECT_NEAR(row.negative_norm / gamma, 1.0, 0.05);
    }
}

TEST(TubeBudget, ZeroGammaHasNoNegativeColumn) {
    auto d = half_angle_tube();
    SmoothingParams p;
    auto row = budget_row(d, p, 0.0, 2.0, SweepResolution{});
    EXPECT_LT(row.budget.weighted_negative, 1e-6 * row.budget.positive);
    EXPECT_TRUE(row.budget.positive_net());
}

TEST(TubeBudget, BothColumnsScaleLikeEpsilonPower) {
    auto d = half_angle_tube();
    SmoothingParams p;
    std::vector<double> eps;
    for (int k = 0; k < 4; ++k) eps.push_back(1e-2 * std::pow(2.0, -k));
    auto st = budget_study(d, p, eps, 1.5, 0.5);
    EXPECT_GT(st.gamma_threshold, 0.0);
    EXPECT_TRUE(st.net_positive_below_threshold);
    EXPECT_NEAR(st.positive_exponent, st.expected_exponent, 0.1 * st.expected_exponent);
    EXPECT_NEAR(st.negative_exponent, st.expected_exponent, 0.1 * st.expected_exponent);
    EXPECT_LT(std::abs(st.positive_exponent - st.negative_exponent), 0.1 * std::abs(st.negative_exponent));
    // above the threshold the net turns negative
    SmoothingParams pmin = p;
    pmin.epsilon = eps.back();
    EXPECT_LT(budget_row(d, pmin, 2.0 * st.gamma_threshold, 1.5, SweepResolution{}).budget.net, 0.0);
}

TEST(TubeBudget, RejectsNonConstantModel) {
    auto d = half_angle_tube();
    d.beta = [](const LinkPoint& y) { return -0.5 + 0.1 * std::sin(2.0 * kPi * y[0]); };
    EXPECT_THROW(budget_study(d, SmoothingParams{}, {0.01, 0.005}, 1.0, 0.5), std::invalid_argument);
}

TEST(Pipeline, DoubledHalfAngleTubeBecomesPositive) {
    auto d = half_angle_tube();
    SmoothingParams p;
    p.epsilon = 0.1;
    SweepResolution res;
    res.core_fraction = 1e-3;
    res.t_step = 0.025;
    auto m = doubled_tube_model(d, p, res);
    auto r = psc_pipeline(m);
    ASSERT_FALSE(r.declined);
    ASSERT_FALSE(r.budget_failed);
    EXPECT_TRUE(r.spectral.converged);
    EXPECT_GT(r.spectral.lambda, 0.0);
    EXPECT_GE(r.spectral.lambda, r.lower_bound - 1e-10);
    EXPECT_GT(r.min_curvature, 0.0);
}

TEST(Pipeline, DoubledSmoothTubeDeclines) {
    EdgeData d;
    d.beta = [](const LinkPoint&) { return 0.0; };
    SweepResolution res;
    res.core_fraction = 1e-3;
    auto m = doubled_tube_model(d, SmoothingParams{0.1, 1.6, 0.1}, res);
    EXPECT_TRUE(psc_pipeline(m).declined);
}
