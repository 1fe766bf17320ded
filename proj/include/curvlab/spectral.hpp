#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "curvlab/curvature.hpp"
#include "curvlab/desingularize.hpp"
#include "curvlab/measure.hpp"
#include "curvlab/parallel.hpp"

namespace curvlab {

/// phi(x; s): x below s, 2s above 3s, and s (1 + 2u - u^2) with u = (x - s) / (2s) in between.
/// The middle piece is the cubic Hermite interpolant with end slopes 1 and 0; its cubic term vanishes.
inline double truncate_phi(double x, double s) {
    if (!(s > 0.0)) throw std::invalid_argument("truncate_phi: scale must be positive");
    if (x <= s) return x;
    if (x >= 3.0 * s) return 2.0 * s;
    double u = (x - s) / (2.0 * s);
    return s * (1.0 + 2.0 * u - u * u);
}

inline double truncate_phi_derivative(double x, double s) {
    if (x <= s) return 1.0;
    if (x >= 3.0 * s) return 0.0;
    return 1.0 - (x - s) / (2.0 * s);
}

/// zeta(x; eps) as a function of the distance d to the skeleton: eps^{-2/q} within eps, 1 beyond 2 eps,
/// and a smoothstep blend in between.
inline double weight_zeta(double dist, double eps, double q) {
    if (!(eps > 0.0)) throw std::invalid_argument("weight_zeta: eps must be positive");
    const double top = std::pow(eps, -2.0 / q);
    if (dist <= eps) return top;
    if (dist >= 2.0 * eps) return 1.0;
    double s = (dist - eps) / eps;
    double t = s * s * (3.0 - 2.0 * s);
    return top * (1.0 - t) + t;
}

// ---------------------------------------------------------------------------------------------
// Conjugate gradients for a symmetric positive definite operator.

struct CgStats {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

using LinearOp = std::function<void(const std::vector<double>&, std::vector<double>&)>;

/// Preconditioned CG; `diag` (optional) is the Jacobi preconditioner.
inline CgStats conjugate_gradient(const LinearOp& A, const std::vector<double>& b, std::vector<double>& x, double tol,
                                  int max_iter, const std::vector<double>* diag = nullptr) {
    const std::size_t n = b.size();
    if (x.size() != n) x.assign(n, 0.0);
    std::vector<double> r(n), z(n), p(n), Ap(n);
    A(x, Ap);
    double bb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = b[i] - Ap[i];
        bb += b[i] * b[i];
    }
    auto precondition = [&] {
        for (std::size_t i = 0; i < n; ++i) z[i] = diag ? r[i] / (*diag)[i] : r[i];
    };
    precondition();
    p = z;
    double rz = 0.0, rr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        rz += r[i] * z[i];
        rr += r[i] * r[i];
    }
    CgStats st;
    const double bn = std::sqrt(bb);
    if (bn == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        st.converged = true;
        return st;
    }
    for (st.iterations = 0; st.iterations < max_iter; ++st.iterations) {
        st.relative_residual = std::sqrt(rr) / bn;
        if (st.relative_residual <= tol) {
            st.converged = true;
            return st;
        }
        A(p, Ap);
        double pAp = 0.0;
        for (std::size_t i = 0; i < n; ++i) pAp += p[i] * Ap[i];
        if (!(pAp > 0.0)) throw std::domain_error("conjugate_gradient: operator not positive definite");
        double alpha = rz / pAp;
        rr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * Ap[i];
            rr += r[i] * r[i];
        }
        precondition();
        double rz_new = 0.0;
        for (std::size_t i = 0; i < n; ++i) rz_new += r[i] * z[i];
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    st.relative_residual = std::sqrt(rr) / bn;
    st.converged = st.relative_residual <= tol;
    return st;
}

// ---------------------------------------------------------------------------------------------
// Principal eigenpair of -a Lap_g + chi.

struct SpectralOptions {
    double tolerance = 1e-10;  // on successive eigenvalues, relative to 1 + |lambda|
    double residual_tolerance = 1e-8;  // on ||K u - lambda M u|| / ||M u||
    double cg_tolerance = 1e-13;
    int max_iterations = 200;
    int max_cg_iterations = 20000;
};

struct SpectralResult {
    double lambda = 0.0;
    ScalarField u;  // positive, unit discrete L^2(g) norm
    double harnack_c0 = 1.0;
    int iterations = 0;
    int cg_iterations = 0;
    bool converged = false;
    double residual = 0.0;  // ||K u - lambda M u|| / ||M u||
};

/// Discrete conformal-Laplacian pencil K = w (a (-sqrt g Lap) + sqrt g chi), M = w sqrt g,
/// with w the coordinate cell volume; both symmetric on closed charts.
class ConformalOperator {
public:
    ConformalOperator(const MetricField& g, const ScalarField& chi) : lap_(g), chi_(chi.values) {
        if (!g.chart().closed()) throw std::invalid_argument("principal_eigenpair: chart must be closed (no clamped axes)");
        if (!(chi.chart == g.chart())) throw std::invalid_argument("principal_eigenpair: chi sampled on a different chart");
        for (double c : chi_)
            if (!std::isfinite(c)) throw std::invalid_argument("principal_eigenpair: chi must be finite");
        const Grid& grid = lap_.grid();
        mass_.resize(grid.size());
        for (std::size_t p = 0; p < grid.size(); ++p) mass_[p] = grid.cell_weight(p) * lap_.volume_density()[p];
        a_ = conformal_laplacian_coefficient(g.dim());
    }

    const std::vector<double>& mass() const { return mass_; }
    const FluxLaplacian& laplacian() const { return lap_; }
    double coefficient() const { return a_; }

    /// diagonal of K - mu M
    std::vector<double> shifted_diagonal(double mu) const {
        const Grid& grid = lap_.grid();
        std::vector<double> d(mass_.size());
        for (std::size_t p = 0; p < d.size(); ++p)
            d[p] = -a_ * grid.cell_weight(p) * lap_.diagonal_at(p) + mass_[p] * (chi_[p] - mu);
        return d;
    }

    /// out = (K - mu M) u
    void apply_shifted(const std::vector<double>& u, double mu, std::vector<double>& out) const {
        out.resize(u.size());
        const Grid& grid = lap_.grid();
        for (std::size_t p = 0; p < u.size(); ++p)
            out[p] = -a_ * grid.cell_weight(p) * lap_.apply_at(u, p) + mass_[p] * (chi_[p] - mu) * u[p];
    }

private:
    FluxLaplacian lap_;
    std::vector<double> chi_;
    std::vector<double> mass_;
    double a_ = 0.0;
};

/// Smallest eigenvalue of -(4(n-1)/(n-2)) Lap_g + chi by shifted inverse iteration with CG solves,
/// starting from the constant vector. The shift is min chi - 1, which keeps the shifted pencil positive definite.
inline SpectralResult principal_eigenpair(const MetricField& g, const ScalarField& chi, const SpectralOptions& opt = {}) {
    ConformalOperator op(g, chi);
    const std::size_t N = g.size();
    const auto& M = op.mass();
    double mu = *std::min_element(chi.values.begin(), chi.values.end()) - 1.0;
    LinearOp A = [&](const std::vector<double>& x, std::vector<double>& y) { op.apply_shifted(x, mu, y); };
    const std::vector<double> diag = op.shifted_diagonal(mu);

    auto mnorm = [&](const std::vector<double>& x) {
        double s = 0.0;
        for (std::size_t i = 0; i < N; ++i) s += M[i] * x[i] * x[i];
        return std::sqrt(s);
    };
    std::vector<double> x(N, 1.0), b(N), y(N), Ax(N);
    double nx = mnorm(x);
    for (double& v : x) v /= nx;

    SpectralResult res;
    double lambda_prev = std::numeric_limits<double>::quiet_NaN();
    auto residual_of = [&](double q) {
        double rn = 0.0, mn = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double r = Ax[i] - q * M[i] * x[i];
            rn += r * r;
            mn += (M[i] * x[i]) * (M[i] * x[i]);
        }
        return std::sqrt(rn / mn);
    };
    for (res.iterations = 1; res.iterations <= opt.max_iterations; ++res.iterations) {
        for (std::size_t i = 0; i < N; ++i) b[i] = M[i] * x[i];
        y = x;
        CgStats st = conjugate_gradient(A, b, y, opt.cg_tolerance, opt.max_cg_iterations, &diag);
        res.cg_iterations += st.iterations;
        double ny = mnorm(y);
        for (std::size_t i = 0; i < N; ++i) x[i] = y[i] / ny;
        A(x, Ax);
        double q = 0.0;
        for (std::size_t i = 0; i < N; ++i) q += x[i] * Ax[i];
        res.lambda = mu + q;
        res.residual = residual_of(q);
        if (std::abs(res.lambda - lambda_prev) < opt.tolerance * (1.0 + std::abs(res.lambda)) &&
            res.residual <= opt.residual_tolerance) {
            res.converged = true;
            break;
        }
        lambda_prev = res.lambda;
    }
    if (res.iterations > opt.max_iterations) res.iterations = opt.max_iterations;

    double sum = 0.0;
    for (double v : x) sum += v;
    if (sum < 0.0)
        for (double& v : x) v = -v;
    res.u = ScalarField(g.chart());
    res.u.values = x;
    double lo = *std::min_element(x.begin(), x.end()), hi = *std::max_element(x.begin(), x.end());
    res.harnack_c0 = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();

    return res;
}

/// c0^{-2} Vol^{-1} (int chi_+ - c0^4 int chi_-) with the same discrete weights as the eigenproblem.
inline double eigen_lower_bound(const ScalarField& chi, double c0, const MetricField& g) {
    if (!(c0 >= 1.0)) throw std::invalid_argument("eigen_lower_bound: c0 must be >= 1");
    Region all(g.chart(), true);
    ScalarField pos(chi.chart), neg(chi.chart);
    for (std::size_t i = 0; i < chi.size(); ++i) {
        pos[i] = std::max(chi[i], 0.0);
        neg[i] = std::max(-chi[i], 0.0);
    }
    double vol = volume(g, all);
    return (integrate_signed(pos, g, all) - std::pow(c0, 4) * integrate_signed(neg, g, all)) / (c0 * c0 * vol);
}

/// Empirical coercivity threshold: with chi = chi_plus - t * bump, the largest ||t bump||_{L^{n/2}}
/// for which the principal eigenvalue stays positive.
inline double empirical_delta0(const MetricField& g, const ScalarField& chi_plus, const ScalarField& bump, double t_max,
                               int iterations = 30) {
    auto lambda_at = [&](double t) {
        ScalarField chi = chi_plus;
        for (std::size_t i = 0; i < chi.size(); ++i) chi[i] -= t * bump[i];
        SpectralOptions o;
        o.tolerance = 1e-9;
        return principal_eigenpair(g, chi, o).lambda;
    };
    double lo = 0.0, hi = t_max;
    if (lambda_at(lo) <= 0.0) return 0.0;
    if (lambda_at(hi) > 0.0) lo = hi;
    else
        for (int i = 0; i < iterations; ++i) {
            double mid = 0.5 * (lo + hi);
            (lambda_at(mid) > 0.0 ? lo : hi) = mid;
        }
    ScalarField tb = bump;
    for (double& v : tb.values) v *= lo;
    return integrate(tb, g, 0.5 * g.dim());
}

// ---------------------------------------------------------------------------------------------
// Budget of the truncated curvature.

struct BudgetReport {
    double positive = 0.0;           // int phi(R; zeta)_+ dVol
    double negative = 0.0;           // int phi(R; zeta)_- dVol
    double c0 = 1.0;
    double weighted_negative = 0.0;  // c0^4 * negative
    double net = 0.0;
    bool positive_net() const { return net > 0.0; }
};

inline ScalarField truncated_curvature(const ScalarField& R, const ScalarField& zeta) {
    ScalarField chi(R.chart);
    for (std::size_t i = 0; i < R.size(); ++i) chi[i] = truncate_phi(R[i], zeta[i]);
    return chi;
}

inline BudgetReport positivity_budget(const MetricField& ghat, const ScalarField& R, const ScalarField& zeta, double c0,
                                      const Region& region) {
    BudgetReport b;
    b.c0 = c0;
    ScalarField chi = truncated_curvature(R, zeta);
    ScalarField pos(chi.chart), neg(chi.chart);
    for (std::size_t i = 0; i < chi.size(); ++i) {
        pos[i] = std::max(chi[i], 0.0);
        neg[i] = std::max(-chi[i], 0.0);
    }
    b.positive = integrate_signed(pos, ghat, region);
    b.negative = integrate_signed(neg, ghat, region);
    b.weighted_negative = std::pow(c0, 4) * b.negative;
    b.net = b.positive - b.weighted_negative;
    return b;
}

// ---------------------------------------------------------------------------------------------
// Conformal positivity pipeline on a closed chart.

struct PscModel {
    MetricField g;       // closed chart
    ScalarField R;       // R(g) at every node
    ScalarField zeta;    // truncation weight at every node
    bool scalar_flat = false;   // R == 0 away from the skeleton
    bool full_angles = false;   // every cone angle equals 2 pi
};

struct PscResult {
    bool declined = false;
    bool budget_failed = false;
    std::string message;
    BudgetReport budget;
    SpectralResult spectral;
    MetricField metric;
    ScalarField curvature;
    double min_curvature = 0.0;
    double lower_bound = 0.0;
};

/// chi = phi(R; zeta), principal eigenpair, then u^{4/(n-2)} g with R = u^{-4/(n-2)} (R - chi + lambda)
/// evaluated through the conformal-change formula with the same discrete Laplacian.
inline PscResult psc_pipeline(const PscModel& m, const SpectralOptions& opt = {}) {
    PscResult out;
    if (m.scalar_flat && m.full_angles) {
        out.declined = true;
        out.message = "scalar-flat model without cone angle deficit: no positive curvature to redistribute";
        return out;
    }
    ScalarField chi = truncated_curvature(m.R, m.zeta);
    out.spectral = principal_eigenpair(m.g, chi, opt);
    out.lower_bound = eigen_lower_bound(chi, out.spectral.harnack_c0, m.g);
    out.budget = positivity_budget(m.g, m.R, m.zeta, out.spectral.harnack_c0, Region(m.g.chart(), true));
    if (!out.budget.positive_net()) {
        out.budget_failed = true;
        out.message = "net truncated-curvature budget is not positive";
        return out;
    }
    CurvatureField rg{m.R, Region(m.g.chart(), true)};
    auto conf = conformal_transform(m.g, out.spectral.u, rg);
    out.metric = conf.metric;
    out.curvature = conf.curvature.value;
    out.min_curvature = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < out.curvature.size(); ++i) out.min_curvature = std::min(out.min_curvature, out.curvature[i]);
    return out;
}

// ---------------------------------------------------------------------------------------------
// Tube models with constant cone data: R(g) = 0 outside the axis.

namespace detail {

inline void require_constant_tube(const EdgeData& d, const char* who) {
    d.validate();
    if (d.h) throw std::invalid_argument(std::string(who) + ": tube model needs h = 0");
    for (const auto& y : link_samples(d, 5)) {
        LinkPoint s = d.sigma(y);
        if (s[0] != 0.0 || s[1] != 0.0) throw std::invalid_argument(std::string(who) + ": tube model needs sigma = 0");
    }
    if (min_over_link(d, d.beta) != max_over_link(d, d.beta) || min_over_link(d, d.rho) != max_over_link(d, d.rho))
        throw std::invalid_argument(std::string(who) + ": tube model needs constant beta and rho");
    if (d.link_dim() > 0)
        for (int i = 0; i < d.link_dim(); ++i)
            for (int j = 0; j < d.link_dim(); ++j)
                if (d.omega(i, j) != (i == j ? 1.0 : 0.0))
                    throw std::invalid_argument(std::string(who) + ": tube model needs a flat unit link metric");
}

// Core bump psi(x) = (1 - x^2 / c^2)^4 on x < c, with c = 0.3 inside the flat core x < 1/3.
constexpr double kBumpRadius = 0.3;

inline double core_bump(double x) {
    if (x >= kBumpRadius) return 0.0;
    double s = 1.0 - x * x / (kBumpRadius * kBumpRadius);
    return s * s * s * s;
}

// -(psi'' + psi' / x) for the bump above.
inline double core_bump_minus_laplacian(double x) {
    if (x >= kBumpRadius) return 0.0;
    double c2 = kBumpRadius * kBumpRadius, s = x * x / c2;
    return -(1.0 - s) * (1.0 - s) * (64.0 * s - 16.0) / c2;
}

}  // namespace detail

/// Amplitude A of v = 1 + A psi(r / (eps rho)) for which the linearized curvature -8 v^{-5} Lap v of
/// v^4 g_eps has L^q(g_eps) norm of its negative part equal to gamma.
inline double injection_amplitude(const EdgeData& d, double eps, double q, double gamma) {
    const double B = std::pow(1.0 + d.beta({0.0, 0.0}), 2.0), rho = d.rho({0.0, 0.0});
    const int nq = 4000;
    double I = 0.0;
    for (int i = 0; i <= nq; ++i) {
        double x = detail::kBumpRadius * i / nq;
        double w = (i == 0 || i == nq) ? 0.5 : 1.0;
        double neg = std::max(-detail::core_bump_minus_laplacian(x) * 8.0 / B, 0.0);
        I += w * std::pow(neg, q) * B * x;
    }
    I *= detail::kBumpRadius / nq * 2.0 * kPi;
    for (double L : d.link_lengths) I *= L;
    // ||R_-||_q = A (eps rho)^{-2} I^{1/q} (eps rho)^{2/q}
    double unit = std::pow(I, 1.0 / q) * std::pow(eps * rho, 2.0 / q - 2.0);
    return gamma / unit;
}

/// v^4 g_eps on a smoothing chart.
inline MetricField injected_metric(const EdgeData& d, const SmoothingParams& p, double amplitude, const ChartSpec& chart) {
    MetricField gh = smoothed_metric(d, p, chart);
    if (amplitude == 0.0) return gh;
    Grid grid(chart);
    const double er = p.epsilon * d.rho({0.0, 0.0});
    TensorField t(chart);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double v = 1.0 + amplitude * detail::core_bump(grid.radius(i) / er);
        t.put(i, scaled(gh.at(i), std::pow(v, 4)));
    }
    return MetricField(std::move(t));
}

inline ScalarField skeleton_weight(const ChartSpec& chart, double eps, double q) {
    Grid grid(chart);
    ScalarField z(chart);
    for (std::size_t i = 0; i < grid.size(); ++i) z[i] = weight_zeta(grid.radius(i), eps, q);
    return z;
}

struct BudgetRow {
    double epsilon = 0.0;
    double gamma = 0.0;
    double negative_norm = 0.0;  // measured ||R_-||_{L^q(g)} of the injected metric
    BudgetReport budget;
};

inline BudgetRow budget_row(const EdgeData& d, const SmoothingParams& p, double gamma, double c0, const SweepResolution& res) {
    ChartSpec chart = smoothing_chart(d, p.epsilon, res);
    MetricField g = injected_metric(d, p, injection_amplitude(d, p.epsilon, p.q, gamma), chart);
    auto R = scalar_curvature(g);
    ScalarField zeta = skeleton_weight(chart, p.epsilon, p.q);
    BudgetRow row;
    row.epsilon = p.epsilon;
    row.gamma = gamma;
    row.budget = positivity_budget(g, R.value, zeta, c0, R.computed);
    ScalarField neg(chart, 0.0);
    for (std::size_t i = 0; i < neg.size(); ++i)
        if (R.computed[i]) neg[i] = std::max(-R.value[i], 0.0);
    row.negative_norm = integrate(neg, g, R.computed, p.q);
    return row;
}

struct BudgetStudy {
    std::vector<BudgetRow> rows;
    double positive_exponent = std::numeric_limits<double>::quiet_NaN();
    double negative_exponent = std::numeric_limits<double>::quiet_NaN();
    double expected_exponent = 0.0;  // 2 - 2/q
    double gamma_threshold = 0.0;    // at the smallest epsilon; net > 0 below it
    bool net_positive_below_threshold = false;
};

/// Largest gamma with positive net budget at one epsilon, by bisection in log gamma.
inline double budget_gamma_threshold(const EdgeData& d, const SmoothingParams& p, double c0, const SweepResolution& res,
                                     int iterations = 16) {
    auto net = [&](double gm) { return budget_row(d, p, gm, c0, res).budget.net; };
    if (!(net(0.0) > 0.0)) return 0.0;
    double lo = 1e-3, hi = 1e-3;
    while (net(lo) <= 0.0 && lo > 1e-12) lo *= 0.1;
    hi = lo;
    while (net(hi) > 0.0 && hi < 1e12) hi *= 10.0;
    for (int i = 0; i < iterations; ++i) {
        double mid = std::sqrt(lo * hi);
        (net(mid) > 0.0 ? lo : hi) = mid;
    }
    return lo;
}

/// Budget columns over an epsilon sweep at gamma = gamma_fraction * threshold, the threshold measured at the smallest epsilon.
inline BudgetStudy budget_study(const EdgeData& d, const SmoothingParams& base, const std::vector<double>& eps_sweep, double c0,
                                double gamma_fraction, const SweepResolution& res = {}) {
    detail::require_constant_tube(d, "budget_study");
    if (eps_sweep.size() < 2) throw std::invalid_argument("budget_study: need at least two epsilon values");
    BudgetStudy st;
    st.expected_exponent = 2.0 - 2.0 / base.q;
    SmoothingParams pmin = base;
    pmin.epsilon = *std::min_element(eps_sweep.begin(), eps_sweep.end());
    pmin.validate(d);
    st.gamma_threshold = budget_gamma_threshold(d, pmin, c0, res);
    const double gamma = gamma_fraction * st.gamma_threshold;
    st.rows.resize(eps_sweep.size());
    parallel_for(eps_sweep.size(), res.threads, [&](std::size_t i) {
        SmoothingParams p = base;
        p.epsilon = eps_sweep[i];
        p.validate(d);
        st.rows[i] = budget_row(d, p, gamma, c0, res);
    });
    std::vector<double> xs, yp, yn;
    st.net_positive_below_threshold = true;
    for (const auto& r : st.rows) {
        xs.push_back(r.epsilon);
        yp.push_back(r.budget.positive);
        yn.push_back(r.budget.weighted_negative);
        st.net_positive_below_threshold = st.net_positive_below_threshold && r.budget.positive_net();
    }
    st.positive_exponent = loglog_slope(xs, yp);
    if (gamma > 0.0) st.negative_exponent = loglog_slope(xs, yn);
    return st;
}

/// Closed doubled tube: log-polar chart with reflecting radial ends, r in (core_fraction eps rho, rho).
/// R(g_eps) comes from the stencil; nodes without a stencil value lie in the flat core or the flat exterior, where R = 0.
inline PscModel doubled_tube_model(const EdgeData& d, const SmoothingParams& p, const SweepResolution& res) {
    detail::require_constant_tube(d, "doubled_tube_model");
    p.validate(d);
    const double rho = d.rho({0.0, 0.0});
    double lo = p.epsilon * rho * res.core_fraction;
    int nr = static_cast<int>(std::ceil(std::log(rho / lo) / res.t_step));
    ChartSpec chart = polar_chart(lo, rho, nr, res.n_theta, d.link_lengths, res.n_y, true, Boundary::reflecting);
    PscModel m;
    m.g = smoothed_metric(d, p, chart);
    auto R = scalar_curvature(m.g);
    m.R = ScalarField(chart, 0.0);
    for (std::size_t i = 0; i < m.R.size(); ++i)
        if (R.computed[i]) m.R[i] = R.value[i];
    m.zeta = skeleton_weight(chart, p.epsilon, p.q);
    m.scalar_flat = true;
    m.full_angles = d.beta({0.0, 0.0}) == 0.0;
    return m;
}

}  // namespace curvlab
