#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "curvlab/curvature.hpp"
#include "curvlab/edge_models.hpp"
#include "curvlab/measure.hpp"
#include "curvlab/parallel.hpp"

namespace curvlab {

/// C^1 piecewise-cubic cutoff: 0 on [0, 1/3], a cubic ramp on [1/3, 4/9], the identity on
/// [4/9, 5/9], the mirrored ramp on [5/9, 2/3], and 1 on [2/3, 1].
/// The ramp is p(s) = a s^2 + b s^3 for s = x - 1/3, with p(1/9) = 4/9 and p'(1/9) = 1.
struct CutoffSpec {
    double a = 99.0;
    double b = -567.0;

    static constexpr double kLo = 1.0 / 3.0, kInLo = 4.0 / 9.0, kInHi = 5.0 / 9.0, kHi = 2.0 / 3.0;

    CutoffSpec() { validate(); }
    CutoffSpec(double qa, double qb) : a(qa), b(qb) { validate(); }

    double ramp(double s) const { return (a + b * s) * s * s; }
    double ramp_d(double s) const { return (2.0 * a + 3.0 * b * s) * s; }

    double value(double x) const {
        if (x <= kLo) return 0.0;
        if (x < kInLo) return ramp(x - kLo);
        if (x <= kInHi) return x;
        if (x < kHi) return 1.0 - ramp(kHi - x);
        return 1.0;
    }

    double derivative(double x) const {
        if (x <= kLo) return 0.0;
        if (x < kInLo) return ramp_d(x - kLo);
        if (x <= kInHi) return 1.0;
        if (x < kHi) return ramp_d(kHi - x);
        return 0.0;
    }

    void validate() const {
        const double L = kInLo - kLo;
        auto fail = [](const char* what) { throw std::invalid_argument(std::string("cutoff: ") + what); };
        if (std::abs(ramp(L) - kInLo) > 1e-12) fail("ramp does not reach the linear band");
        if (std::abs(ramp_d(L) - 1.0) > 1e-12) fail("ramp slope does not match the linear band");
        for (int i = 0; i <= 2000; ++i) {
            double x = i / 2000.0;
            double d = derivative(x);
            if (d < -1e-12 || d > 6.0) fail("derivative leaves [0, 6]");
            double v = value(x);
            if (v < 0.0 || v > 1.0) fail("value leaves [0, 1]");
        }
    }
};

inline double cutoff_zeta(const CutoffSpec& spec, double x) { return spec.value(std::min(std::max(x, 0.0), 1.0)); }
inline double cutoff_zeta_derivative(const CutoffSpec& spec, double x) {
    return x >= 1.0 ? 0.0 : spec.derivative(std::max(x, 0.0));
}

struct SmoothingParams {
    double epsilon = 0.01;
    double q = 1.6;
    double delta = 0.1;

    static SmoothingParams with_exponent(int n, double q, double epsilon) { return {epsilon, q, q - 0.5 * n}; }

    void validate(const EdgeData& d) const {
        if (!(epsilon > 0.0)) throw std::invalid_argument("smoothing: epsilon must be positive");
        if (!(q > 0.5 * d.n && q < d.n)) throw std::invalid_argument("smoothing: q must lie in (n/2, n)");
        if (std::abs(q - (0.5 * d.n + delta)) > 1e-12) throw std::invalid_argument("smoothing: q must equal n/2 + delta");
        if (!(q * (d.eta - 2.0) + 2.0 > 0.0)) throw std::invalid_argument("smoothing: q (eta - 2) + 2 must be positive");
    }
};

/// f_eps = 1 + zeta(r / (eps rho)) ((1 + beta)^{-1} - 1) and r d_r f_eps at one point.
struct ProfileValue {
    double f = 1.0;
    double r_df = 0.0;
};

inline ProfileValue profile_at(double beta, double rho, double eps, double r, const CutoffSpec& z = {}) {
    if (!(beta > -1.0)) throw std::invalid_argument("smoothing profile: beta <= -1");
    double x = r / (eps * rho);
    double jump = 1.0 / (1.0 + beta) - 1.0;
    return {1.0 + cutoff_zeta(z, x) * jump, x * cutoff_zeta_derivative(z, x) * jump};
}

inline ScalarField smoothing_profile(const EdgeData& d, const SmoothingParams& p, const ChartSpec& chart) {
    const int m = d.link_dim();
    return sample_polar_scalar(chart, [&](const auto& x) {
        LinkPoint y = link_point(x, m);
        return profile_at(d.beta(y), d.rho(y), p.epsilon, x[0]).f;
    });
}

/// Polar components of the smoothed metric
///   (beta+1)^2 f^2 dr^2 + (beta+1)^2 r^2 (dtheta + sigma)^2 + omega + (beta+1)^2 f^2 r^{1+eta} h,
/// written as g + k (dr^2 + r^{1+eta} h) with k = (beta+1)^2 f^2 - 1, which vanishes where f = (beta+1)^{-1}.
inline Matd smoothed_components(const EdgeData& d, double eps, const std::array<double, kMaxDim>& x) {
    Matd g = edge_components(d, x);
    LinkPoint y = link_point(x, d.link_dim());
    double beta = d.beta(y);
    double z = cutoff_zeta(CutoffSpec{}, x[0] / (eps * d.rho(y)));
    double s = beta * (1.0 - z);
    double k = s * (2.0 + s);
    if (k == 0.0) return g;
    g(0, 0) += k;
    if (d.h) {
        Matd h = d.h(x);
        double w = k * std::pow(x[0], 1.0 + d.eta);
        for (int i = 0; i < d.n; ++i)
            for (int j = 0; j < d.n; ++j) g(i, j) += w * h(i, j);
    }
    return g;
}

inline MetricField smoothed_metric(const EdgeData& d, const SmoothingParams& p, const ChartSpec& chart) {
    d.validate();
    detail::require_polar(chart, "smoothed_metric");
    if (chart.dim() != d.n) throw std::invalid_argument("smoothed_metric: chart dimension differs from edge data");
    require_tube(d, chart, "smoothed_metric");
    Grid grid(chart);
    double r_first = grid.radius(0);
    double r_last = detail::chart_r_max(chart);
    double rho_min = min_over_link(d, d.rho), rho_max = max_over_link(d, d.rho);
    if (r_first > p.epsilon * rho_min / 3.0 || r_last < p.epsilon * rho_max)
        throw std::invalid_argument("smoothed_metric: chart must reach inside eps rho / 3 and out to eps rho");
    return sample_polar_metric(chart, [&](const auto& x) { return smoothed_components(d, p.epsilon, x); });
}

/// Smoothed metric on a cartesian patch (x1, x2, y...) around the axis.
inline MetricField smoothed_metric_cartesian(const EdgeData& d, const SmoothingParams& p, const ChartSpec& chart) {
    d.validate();
    if (chart.style != ChartStyle::cartesian || chart.dim() != d.n)
        throw std::invalid_argument("smoothed_metric_cartesian: needs a cartesian chart of the edge dimension");
    const int n = d.n;
    return sample_metric(chart, [&](const auto& X) {
        double r = std::hypot(X[0], X[1]);
        std::array<double, kMaxDim> x = X;
        LinkPoint y = link_point(X, d.link_dim());
        if (r == 0.0) {
            double b = d.beta(y) + 1.0;
            Matd e(n);
            e(0, 0) = e(1, 1) = b * b;
            for (int i = 0; i < n - 2; ++i)
                for (int j = 0; j < n - 2; ++j) e(2 + i, 2 + j) = d.omega(i, j);
            return e;
        }
        double th = std::atan2(X[1], X[0]);
        x[0] = r;
        x[1] = th;
        Matd pc = smoothed_components(d, p.epsilon, x);
        Matd j = Matd::identity(n);
        j(0, 0) = std::cos(th);
        j(1, 0) = std::sin(th);
        j(0, 1) = -r * std::sin(th);
        j(1, 1) = r * std::cos(th);
        Matd ji = inverse(j);
        return transpose(ji) * pc * ji;
    });
}

/// Centred d_r of a field on a polar-style chart (margin >= 1 on the radial axis).
inline ScalarField radial_derivative(const ScalarField& f) {
    Grid grid(f.chart);
    ScalarField out(f.chart, 0.0);
    const double h = grid.h(0);
    for (std::size_t p = 0; p < grid.size(); ++p) {
        long a = grid.neighbor(p, 0, 1), b = grid.neighbor(p, 0, -1);
        if (a < 0 || b < 0) continue;
        double d = (f[a] - f[b]) / (2.0 * h);
        out[p] = f.chart.style == ChartStyle::log_polar ? d / grid.radius(p) : d;
    }
    return out;
}

using LinkMetricFn = std::function<Matd(const LinkPoint&)>;

/// Scalar curvature of f^2 dr^2 + r^2 dtheta^2 + omega_t by the slicing reduction
///   R = R(omega_t) + 2 r^{-1} f^{-3} d_r f - 2 f^{-1} Lap_slice f.
/// Requires sigma = 0; a two-dimensional link must carry a constant omega_t.
inline CurvatureField slice_scalar_curvature(const ScalarField& f, const LinkFormFn& sigma, const LinkMetricFn& omega_t,
                                             const ChartSpec& chart) {
    detail::require_polar(chart, "slice_scalar_curvature");
    if (!(f.chart == chart)) throw std::invalid_argument("slice_scalar_curvature: f sampled on a different chart");
    const int n = chart.dim(), m = n - 2;
    Grid grid(chart);
    if (sigma) {
        for (std::size_t p = 0; p < grid.size(); ++p) {
            LinkPoint s = sigma(link_point(grid.coords(p), m));
            if (s[0] != 0.0 || s[1] != 0.0)
                throw std::invalid_argument("slice_scalar_curvature: sigma != 0; use scalar_curvature on the sampled metric");
        }
    }
    if (m == 2) {
        Matd o0 = omega_t({0.0, 0.0});
        for (std::size_t p = 0; p < grid.size(); ++p) {
            Matd o = omega_t(link_point(grid.coords(p), m));
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    if (o(i, j) != o0(i, j)) throw std::invalid_argument("slice_scalar_curvature: two-dimensional link needs constant omega");
        }
    }
    ScalarField df = radial_derivative(f);
    CurvatureField out{ScalarField(chart, 0.0), Region(chart, false)};
    const double ht = grid.h(1);
    for (std::size_t p = 0; p < grid.size(); ++p) {
        if (grid.neighbor(p, 0, 1) < 0 || grid.neighbor(p, 0, -1) < 0) continue;
        double r = grid.radius(p);
        double fp = f[p];
        double lap = (f[grid.neighbor(p, 1, 1)] - 2.0 * fp + f[grid.neighbor(p, 1, -1)]) / (ht * ht * r * r);
        auto x = grid.coords(p);
        LinkPoint y = link_point(x, m);
        if (m == 1) {
            // (1/sqrt w) d_y (w^{-1/2} d_y f) with w = omega_t(y).
            double hy = grid.h(2);
            LinkPoint yp = y, ym = y;
            yp[0] += 0.5 * hy;
            ym[0] -= 0.5 * hy;
            double ap = 1.0 / std::sqrt(omega_t(yp)(0, 0)), am = 1.0 / std::sqrt(omega_t(ym)(0, 0));
            double w = omega_t(y)(0, 0);
            lap += (ap * (f[grid.neighbor(p, 2, 1)] - fp) - am * (fp - f[grid.neighbor(p, 2, -1)])) / (hy * hy * std::sqrt(w));
        } else if (m == 2) {
            Matd oi = inverse(omega_t(y));
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    int ai = 2 + i, aj = 2 + j;
                    double hi = grid.h(ai), hj = grid.h(aj);
                    double d2;
                    if (i == j) {
                        d2 = (f[grid.neighbor(p, ai, 1)] - 2.0 * fp + f[grid.neighbor(p, ai, -1)]) / (hi * hi);
                    } else {
                        auto at = [&](int si, int sj) {
                            return f[grid.neighbor(static_cast<std::size_t>(grid.neighbor(p, ai, si)), aj, sj)];
                        };
                        d2 = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * hi * hj);
                    }
                    lap += oi(i, j) * d2;
                }
        }
        out.value[p] = 2.0 * df[p] / (r * fp * fp * fp) - 2.0 * lap / fp;
        out.computed.mask[p] = 1;
    }
    return out;
}

/// Weighted residual r^{2-eta} |R(g) - 2 r^{-1} f^{-3} d_r f| on nodes where the stencil curvature exists.
inline CurvatureField warped_curvature_residual(const MetricField& g_simple, const ScalarField& f, double eta) {
    auto R = scalar_curvature(g_simple);
    ScalarField df = radial_derivative(f);
    Grid grid(g_simple.chart());
    CurvatureField out{ScalarField(g_simple.chart(), 0.0), R.computed};
    for (std::size_t p = 0; p < grid.size(); ++p) {
        if (!R.computed[p]) continue;
        double r = grid.radius(p);
        double main = 2.0 * df[p] / (r * f[p] * f[p] * f[p]);
        out.value[p] = std::pow(r, 2.0 - eta) * std::abs(R.value[p] - main);
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Sweep over epsilon.

struct SweepResolution {
    double t_step = 0.02;          // log-radial spacing
    double core_fraction = 1e-6;   // innermost radius as a fraction of eps rho
    double outer_fraction = 1.25;  // outermost radius as a fraction of eps rho
    int n_theta = 5;
    int n_y = 5;
    int threads = 1;
};

/// Log-polar chart covering [core_fraction, outer_fraction] * eps * rho.
inline ChartSpec smoothing_chart(const EdgeData& d, double eps, const SweepResolution& res) {
    double lo = eps * min_over_link(d, d.rho) * res.core_fraction;
    double hi = eps * max_over_link(d, d.rho) * res.outer_fraction;
    int nr = static_cast<int>(std::ceil(std::log(hi / lo) / res.t_step)) + 1;
    return polar_chart(lo, hi, nr, res.n_theta, d.link_lengths, res.n_y, true);
}

struct SmoothingRow {
    double epsilon = 0.0;
    double negative_norm = 0.0;       // ||R(g_eps)_-||_{L^q(g)}
    double band_min_eps2_R = 0.0;     // min of eps^2 R(g_eps) on [4/9, 5/9] eps rho; NaN without beta < 0
    double c1 = 1.0;                  // uniform equivalence constant of g and g_eps
    double exterior_residual = 0.0;   // max component difference for r >= eps rho
    double exterior_min_R = 0.0;      // min R(g_eps) for r >= eps rho
    double min_f = 1.0;
    double min_r_df = 0.0, max_r_df = 0.0;
};

struct SmoothingReport {
    std::vector<SmoothingRow> rows;
    double decay_exponent = std::numeric_limits<double>::quiet_NaN();
    double expected_exponent = 0.0;  // (q (eta - 2) + 2) / q
};

inline SmoothingRow smoothing_row(const EdgeData& d, const SmoothingParams& p, const SweepResolution& res) {
    ChartSpec chart = smoothing_chart(d, p.epsilon, res);
    MetricField g = edge_metric(d, chart);
    MetricField gh = smoothed_metric(d, p, chart);
    auto R = scalar_curvature(gh);
    Grid grid(chart);
    const int m = d.link_dim();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    SmoothingRow row;
    row.epsilon = p.epsilon;
    ScalarField neg(chart, 0.0);
    Region exterior(chart, false);
    double band = std::numeric_limits<double>::infinity();
    bool any_band = false;
    row.exterior_min_R = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < grid.size(); ++q) {
        LinkPoint y = link_point(grid.coords(q), m);
        double er = p.epsilon * d.rho(y);
        double r = grid.radius(q);
        if (r >= er) exterior.mask[q] = 1;
        if (!R.computed[q]) continue;
        neg[q] = std::max(-R.value[q], 0.0);
        if (r >= er) row.exterior_min_R = std::min(row.exterior_min_R, R.value[q]);
        if (d.beta(y) < 0.0 && r >= CutoffSpec::kInLo * er && r <= CutoffSpec::kInHi * er) {
            band = std::min(band, p.epsilon * p.epsilon * R.value[q]);
            any_band = true;
        }
    }
    row.negative_norm = integrate(neg, g, R.computed, p.q);
    row.band_min_eps2_R = any_band ? band : nan;
    row.c1 = uniform_equivalence(g, gh);
    row.exterior_residual = max_component_difference(g, gh, exterior);

    row.min_f = std::numeric_limits<double>::infinity();
    row.min_r_df = std::numeric_limits<double>::infinity();
    row.max_r_df = -std::numeric_limits<double>::infinity();
    for (const auto& y : link_samples(d, std::max(res.n_y, 1)))
        for (int i = 0; i <= 400; ++i) {
            double x = 1.2 * i / 400.0;
            auto pv = profile_at(d.beta(y), d.rho(y), p.epsilon, x * p.epsilon * d.rho(y));
            row.min_f = std::min(row.min_f, pv.f);
            row.min_r_df = std::min(row.min_r_df, pv.r_df);
            row.max_r_df = std::max(row.max_r_df, pv.r_df);
        }
    return row;
}

/// Evaluates the smoothing conclusions for each epsilon in the sweep; eps values must lie in (0, eps_max].
inline SmoothingReport verify_conclusions(const EdgeData& d, const SmoothingParams& base, const std::vector<double>& eps_sweep,
                                          double eps_max, const SweepResolution& res = {}) {
    d.validate();
    for (double e : eps_sweep)
        if (!(e > 0.0 && e <= eps_max)) throw std::invalid_argument("verify_conclusions: epsilon outside (0, eps_max]");
    SmoothingReport rep;
    rep.expected_exponent = (base.q * (d.eta - 2.0) + 2.0) / base.q;
    rep.rows.resize(eps_sweep.size());
    parallel_for(eps_sweep.size(), res.threads, [&](std::size_t i) {
        SmoothingParams p = base;
        p.epsilon = eps_sweep[i];
        p.validate(d);
        rep.rows[i] = smoothing_row(d, p, res);
    });
    std::vector<double> xs, ys;
    for (const auto& r : rep.rows)
        if (r.negative_norm > 0.0) {
            xs.push_back(r.epsilon);
            ys.push_back(r.negative_norm);
        }
    if (xs.size() >= 2 && xs.size() == rep.rows.size()) rep.decay_exponent = loglog_slope(xs, ys);
    return rep;
}

/// Largest eps in (0, eps_hi] with ||R(g_eps)_-||_{L^q} <= gamma, by bisection in log eps.
inline double epsilon_threshold(const EdgeData& d, const SmoothingParams& base, double gamma, double eps_hi,
                                const SweepResolution& res = {}, int iterations = 30) {
    auto norm = [&](double e) {
        SmoothingParams p = base;
        p.epsilon = e;
        return smoothing_row(d, p, res).negative_norm;
    };
    if (norm(eps_hi) <= gamma) return eps_hi;
    double hi = eps_hi, lo = eps_hi;
    for (int k = 0; k < 60 && norm(lo) > gamma; ++k) lo *= 0.5;
    if (norm(lo) > gamma) throw std::runtime_error("epsilon_threshold: no epsilon meets gamma");
    for (int it = 0; it < iterations; ++it) {
        double mid = std::sqrt(lo * hi);
        (norm(mid) <= gamma ? lo : hi) = mid;
    }
    return lo;
}

/// Tube radius for one piece of a multi-piece skeleton: half the distance to the singular set.
inline double skeleton_tube_radius(const Skeleton& sk, const Point3& x) { return 0.5 * sk.distance_to_singular_set(x); }

}  // namespace curvlab
