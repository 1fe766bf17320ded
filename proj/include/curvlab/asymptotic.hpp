#pragma once

#include <algorithm>
#include <array>
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
#include "curvlab/spectral.hpp"

namespace curvlab {

using RadialFn = std::function<double(double)>;

namespace detail {

struct GaussRule {
    std::vector<double> x, w;
};

// Gauss-Legendre nodes and weights on [-1, 1].
inline GaussRule gauss_legendre(int n) {
    GaussRule g;
    g.x.resize(n);
    g.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        g.x[i] = x;
        g.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return g;
}

// Quadrature over the unit sphere: Gauss-Legendre in cos(theta), uniform in phi.
template <class F>
double sphere_quadrature(int n_polar, int n_azimuth, F&& f) {
    GaussRule gl = gauss_legendre(n_polar);
    double s = 0.0;
    for (int i = 0; i < n_polar; ++i) {
        double ct = gl.x[i], st = std::sqrt(1.0 - ct * ct);
        for (int j = 0; j < n_azimuth; ++j) {
            double ph = 2.0 * kPi * (j + 0.5) / n_azimuth;
            s += gl.w[i] * f(Point3{st * std::cos(ph), st * std::sin(ph), ct});
        }
    }
    return s * 2.0 * kPi / n_azimuth;
}

inline double norm3(const Point3& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }

inline std::array<double, kMaxDim> to_point(const Point3& x) { return {x[0], x[1], x[2], 0.0}; }

}  // namespace detail

// ---------------------------------------------------------------------------------------------
// Conformally flat radial models.

/// phi(r)^{4/(n-2)} delta on r > r_inner.
struct AsymptoticModel {
    int n = 3;
    RadialFn phi = [](double) { return 1.0; };
    RadialFn dphi = [](double) { return 0.0; };
    double r_inner = 0.0;
    double decay_order = 1.0;

    double factor(double r) const { return std::pow(phi(r), 4.0 / (n - 2)); }

    Matd metric_at(const std::array<double, kMaxDim>& x) const {
        double r = 0.0;
        for (int k = 0; k < n; ++k) r += x[k] * x[k];
        r = std::sqrt(r);
        if (!(r > r_inner)) throw std::domain_error("asymptotic model evaluated at r <= " + std::to_string(r_inner));
        return scaled(Matd::identity(n), factor(r));
    }

    /// Area of the coordinate sphere of radius r.
    double sphere_area(double r) const {
        if (n != 3) throw std::invalid_argument("sphere_area: n = 3 only");
        return 4.0 * kPi * r * r * factor(r);
    }

    MetricField sample(const ChartSpec& chart) const {
        if (chart.style != ChartStyle::cartesian || chart.dim() != n)
            throw std::invalid_argument("asymptotic model: needs a cartesian chart of matching dimension");
        Grid grid(chart);
        for (std::size_t p = 0; p < grid.size(); ++p) {
            auto x = grid.coords(p);
            double r = 0.0;
            for (int k = 0; k < n; ++k) r += x[k] * x[k];
            if (!(std::sqrt(r) > r_inner))
                throw std::invalid_argument("asymptotic model: chart touches r <= " + std::to_string(r_inner));
        }
        return sample_metric(chart, [this](const auto& x) { return metric_at(x); });
    }
};

/// (1 + m / 2r)^4 delta; for m < 0 the chart must stay outside r = -m/2.
inline AsymptoticModel schwarzschild(double m, int n = 3) {
    if (n != 3) throw std::invalid_argument("schwarzschild: only n = 3 is supported");
    AsymptoticModel a;
    a.n = n;
    a.phi = [m](double r) { return 1.0 + m / (2.0 * r); };
    a.dphi = [m](double r) { return -m / (2.0 * r * r); };
    a.r_inner = m < 0.0 ? -0.5 * m : 0.0;
    return a;
}

// ---------------------------------------------------------------------------------------------
// ADM mass by flux quadrature.

struct MassOptions {
    int n_polar = 24;
    int n_azimuth = 48;
    double fd_step = 1e-4;  // relative to the radius
};

struct MassReport {
    std::vector<double> radii;
    std::vector<double> flux;  // m(r) per radius
    double mass = std::numeric_limits<double>::quiet_NaN();
    double extrapolation_residual = 0.0;  // |mass - m(r_max)|
    bool divergent = false;
};

/// (1 / 16 pi) \oint (d_j g_ij - d_i g_jj) nu^i dA over the coordinate sphere of radius r (n = 3).
inline double adm_flux(const TensorFn& g, double r, const MassOptions& opt = {}) {
    const double s = opt.fd_step * r;
    double total = detail::sphere_quadrature(opt.n_polar, opt.n_azimuth, [&](const Point3& nu) {
        Point3 x{r * nu[0], r * nu[1], r * nu[2]};
        std::array<Matd, 3> dg;
        for (int k = 0; k < 3; ++k) {
            Point3 xp = x, xm = x;
            xp[k] += s;
            xm[k] -= s;
            Matd a = g(detail::to_point(xp)), b = g(detail::to_point(xm));
            dg[k] = Matd(3);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) dg[k](i, j) = (a(i, j) - b(i, j)) / (2.0 * s);
        }
        double v = 0.0;
        for (int i = 0; i < 3; ++i) {
            double t = 0.0;
            for (int j = 0; j < 3; ++j) t += dg[j](i, j) - dg[i](j, j);
            v += t * nu[i];
        }
        return v * r * r;
    });
    return total / (16.0 * kPi);
}

/// Flux masses at radii r, 2r, 4r, ... with Richardson extrapolation in 1/r.
inline MassReport adm_mass(const TensorFn& g, const std::vector<double>& radii, const MassOptions& opt = {}) {
    if (radii.empty()) throw std::invalid_argument("adm_mass: no radii");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (std::abs(radii[i] / radii[i - 1] - 2.0) > 1e-12) throw std::invalid_argument("adm_mass: radii must double");
    MassReport rep;
    rep.radii = radii;
    for (double r : radii) rep.flux.push_back(adm_flux(g, r, opt));
    for (double f : rep.flux)
        if (!std::isfinite(f)) rep.divergent = true;
    for (std::size_t i = 2; i < rep.flux.size(); ++i) {
        double d1 = std::abs(rep.flux[i - 1] - rep.flux[i - 2]), d2 = std::abs(rep.flux[i] - rep.flux[i - 1]);
        if (d2 > 0.75 * d1 && d2 > 1e-12 * (1.0 + std::abs(rep.flux[i]))) rep.divergent = true;
    }
    rep.mass = richardson(rep.flux, 2.0, 1, 1);
    rep.extrapolation_residual = std::abs(rep.mass - rep.flux.back());
    return rep;
}

inline MassReport adm_mass(const AsymptoticModel& m, const std::vector<double>& radii, const MassOptions& opt = {}) {
    if (m.n != 3) throw std::invalid_argument("adm_mass: n = 3 only");
    return adm_mass([&m](const auto& x) { return m.metric_at(x); }, radii, opt);
}

// ---------------------------------------------------------------------------------------------
// Dirichlet problems on charts with clamped axes.

namespace detail {

// w (-coef sqrt(g) Lap + sqrt(g) V) on nodes with margin >= 1; boundary values are held at zero.
class DirichletOperator {
public:
    // fixed: nodes carrying Dirichlet data; by default the nodes with margin 0.
    DirichletOperator(const MetricField& g, double coef, std::vector<double> V, const Region* fixed = nullptr)
        : lap_(g), coef_(coef), V_(std::move(V)) {
        const Grid& grid = lap_.grid();
        if (fixed) {
            if (!(fixed->chart == g.chart())) throw std::invalid_argument("Dirichlet region on a different chart");
            if (fixed->count() == 0) throw std::invalid_argument("Dirichlet region is empty");
        } else if (g.chart().closed()) {
            throw std::invalid_argument("Dirichlet problem needs at least one clamped axis");
        }
        interior_.resize(grid.size());
        mass_.resize(grid.size());
        diag_.resize(grid.size());
        for (std::size_t p = 0; p < grid.size(); ++p) {
            interior_[p] = (fixed ? !(*fixed)[p] : grid.margin(p) >= 1) ? 1 : 0;
            mass_[p] = grid.cell_weight(p) * lap_.volume_density()[p];
            diag_[p] = interior_[p] ? -coef_ * grid.cell_weight(p) * lap_.diagonal_at(p) + mass_[p] * V_[p] : 1.0;
        }
    }

    void apply(const std::vector<double>& x, std::vector<double>& y) const {
        const Grid& grid = lap_.grid();
        masked_.assign(x.begin(), x.end());
        for (std::size_t p = 0; p < x.size(); ++p)
            if (!interior_[p]) masked_[p] = 0.0;
        y.resize(x.size());
        for (std::size_t p = 0; p < x.size(); ++p)
            y[p] = interior_[p] ? -coef_ * grid.cell_weight(p) * lap_.apply_at(masked_, p) + mass_[p] * V_[p] * x[p] : x[p];
    }

    CgStats solve(const std::vector<double>& b, std::vector<double>& x, double tol, int max_iter) const {
        LinearOp A = [this](const std::vector<double>& u, std::vector<double>& v) { apply(u, v); };
        return conjugate_gradient(A, b, x, tol, max_iter, &diag_);
    }

    bool interior(std::size_t p) const { return interior_[p] != 0; }
    const std::vector<double>& mass() const { return mass_; }
    const FluxLaplacian& laplacian() const { return lap_; }

private:
    FluxLaplacian lap_;
    double coef_;
    std::vector<double> V_;
    std::vector<char> interior_;
    std::vector<double> mass_, diag_;
    mutable std::vector<double> masked_;
};

}  // namespace detail

/// c_n = (n - 2) / (4 (n - 1)).
inline double zeroing_coefficient(int n) { return (n - 2.0) / (4.0 * (n - 1.0)); }

struct ZeroingResult {
    ScalarField u;
    MetricField metric;
    CurvatureField curvature;    // R(u^{4/(n-2)} g) by the conformal formula
    CgStats solve;
    double max_deviation = 0.0;  // ||u - 1||_inf
    double source_integral = 0.0;  // int R_- u dVol
    double mass_shift = 0.0;     // 2 c_n / (4 pi) * source_integral for n = 3
};

/// Solves Lap_g u + c_n R_- u = 0 with u = 1 on the clamped chart boundary, R_- = max(-R, 0).
/// Nodes without a curvature value carry R_- = 0. The solution satisfies u >= 1 and
/// R(u^{4/(n-2)} g) = u^{-4/(n-2)} R_+ where R is computed.
/// `fixed` selects the Dirichlet nodes; by default the chart boundary.
inline ZeroingResult conformal_zeroing(const MetricField& g, const CurvatureField& R, double c_n, double tol = 1e-12,
                                       int max_iter = 50000, const Region* fixed = nullptr) {
    if (!(R.value.chart == g.chart())) throw std::invalid_argument("conformal_zeroing: curvature on a different chart");
    const std::size_t N = g.size();
    std::vector<double> neg(N, 0.0), V(N);
    for (std::size_t p = 0; p < N; ++p) {
        if (R.computed[p]) neg[p] = std::max(-R.value[p], 0.0);
        V[p] = -c_n * neg[p];
    }
    detail::DirichletOperator op(g, 1.0, V, fixed);
    std::vector<double> b(N, 0.0), v(N, 0.0);
    for (std::size_t p = 0; p < N; ++p)
        if (op.interior(p)) b[p] = op.mass()[p] * c_n * neg[p];
    ZeroingResult out;
    try {
        out.solve = op.solve(b, v, tol, max_iter);
    } catch (const std::domain_error&) {
        throw std::domain_error("conformal_zeroing: Lap + c_n R_- is not coercive on this chart");
    }
    if (!out.solve.converged) throw std::runtime_error("conformal_zeroing: CG did not converge");
    out.u = ScalarField(g.chart(), 1.0);
    for (std::size_t p = 0; p < N; ++p) {
        if (op.interior(p)) out.u[p] += v[p];
        out.max_deviation = std::max(out.max_deviation, std::abs(out.u[p] - 1.0));
    }
    ScalarField src(g.chart());
    for (std::size_t p = 0; p < N; ++p) src[p] = neg[p] * out.u[p];
    out.source_integral = integrate_signed(src, g, Region(g.chart(), true));
    out.mass_shift = g.dim() == 3 ? 2.0 * c_n * out.source_integral / (4.0 * kPi) : std::numeric_limits<double>::quiet_NaN();
    auto conf = conformal_transform(g, out.u, R);
    out.metric = conf.metric;
    out.curvature = conf.curvature;
    return out;
}

// ---------------------------------------------------------------------------------------------
// Green's function of -8 Lap + V with Dirichlet data, and the blowup it generates.

struct GreenOptions {
    double cg_tolerance = 1e-12;
    int max_cg_iterations = 50000;
    int buffer_cells = 3;        // excluded around each pole in fits and bounds
    double fit_fraction = 0.5;   // fits and bounds out to this fraction of the pole-boundary distance
    int annuli = 8;
};

struct AnnulusBound {
    std::size_t pole = 0;
    double d_lo = 0.0, d_hi = 0.0;
    double min_Gd = 0.0, max_Gd = 0.0;
};

struct GreenResult {
    ScalarField G;
    std::vector<Point3> poles;
    std::vector<double> coefficient;  // fitted A in G ~ A / d + B near each pole
    std::vector<double> offset;       // fitted B
    std::vector<AnnulusBound> annuli;
    double c_G = 0.0;                 // c_G^{-1} <= G d <= c_G on every sampled annulus
    bool positive = false;
    double buffer = 0.0;              // radius of the excluded ball around each pole
    CgStats solve;

    /// Trilinear interpolation of G, replaced by the fitted A / d + B inside the excluded balls.
    double evaluate(const Point3& x) const {
        for (std::size_t k = 0; k < poles.size(); ++k) {
            double d = detail::norm3({x[0] - poles[k][0], x[1] - poles[k][1], x[2] - poles[k][2]});
            if (d < buffer) {
                if (d == 0.0) return std::numeric_limits<double>::infinity();
                return coefficient[k] / d + offset[k];
            }
        }
        Grid grid(G.chart);
        std::array<int, 3> i0{};
        std::array<double, 3> t{};
        for (int k = 0; k < 3; ++k) {
            const Axis& a = G.chart.axes[k];
            double s = (x[k] - a.lower) / a.spacing();
            if (s < 0.0 || s > a.samples - 1) return 0.0;
            int i = std::min(static_cast<int>(std::floor(s)), a.samples - 2);
            i0[k] = i;
            t[k] = s - i;
        }
        double v = 0.0;
        for (int c = 0; c < 8; ++c) {
            double w = 1.0;
            std::size_t node = 0;
            for (int k = 0; k < 3; ++k) {
                int bit = (c >> k) & 1;
                w *= bit ? t[k] : 1.0 - t[k];
                node = node * G.chart.axes[k].samples + static_cast<std::size_t>(i0[k] + bit);
            }
            v += w * G[node];
        }
        return v;
    }
};

/// Solves -8 Lap_h G + V G = sum of unit point masses, each on a single pole node, with G = 0 on the boundary.
inline GreenResult greens_function(const MetricField& h, const std::vector<Point3>& poles, const ScalarField& V,
                                   const GreenOptions& opt = {}) {
    const ChartSpec& chart = h.chart();
    if (h.dim() != 3 || chart.style != ChartStyle::cartesian)
        throw std::invalid_argument("greens_function: needs a three-dimensional cartesian chart");
    for (const auto& a : chart.axes)
        if (a.boundary != Boundary::clamped) throw std::invalid_argument("greens_function: all axes must be clamped");
    if (!(V.chart == chart)) throw std::invalid_argument("greens_function: potential on a different chart");
    if (poles.empty()) throw std::invalid_argument("greens_function: no poles");
    Grid grid(chart);
    const double hmax = std::max({grid.h(0), grid.h(1), grid.h(2)});
    std::vector<std::size_t> pole_nodes;
    for (const auto& p : poles) {
        std::size_t node = 0;
        for (int k = 0; k < 3; ++k) {
            const Axis& a = chart.axes[k];
            double s = (p[k] - a.lower) / a.spacing();
            long i = std::lround(s);
            if (std::abs(s - i) > 1e-9) throw std::invalid_argument("greens_function: pole must sit on a node");
            if (i < 1 + opt.buffer_cells || i > a.samples - 2 - opt.buffer_cells)
                throw std::invalid_argument("greens_function: pole on or too close to the boundary");
            node = node * a.samples + static_cast<std::size_t>(i);
        }
        pole_nodes.push_back(node);
    }
    detail::DirichletOperator op(h, 8.0, V.values);
    std::vector<double> b(grid.size(), 0.0), x(grid.size(), 0.0);
    for (std::size_t n : pole_nodes) b[n] += 1.0;

    GreenResult res;
    res.solve = op.solve(b, x, opt.cg_tolerance, opt.max_cg_iterations);
    res.G = ScalarField(chart);
    res.G.values = x;
    res.poles = poles;
    res.buffer = opt.buffer_cells * hmax;
    res.positive = true;
    for (std::size_t p = 0; p < grid.size(); ++p)
        if (op.interior(p) && !(x[p] > 0.0)) res.positive = false;

    double cg = 1.0;
    for (std::size_t k = 0; k < poles.size(); ++k) {
        double dist_b = kInfinity;
        for (int a = 0; a < 3; ++a)
            dist_b = std::min({dist_b, poles[k][a] - chart.axes[a].lower, chart.axes[a].upper - poles[k][a]});
        for (std::size_t j = 0; j < poles.size(); ++j)
            if (j != k) dist_b = std::min(dist_b, 0.5 * detail::norm3({poles[j][0] - poles[k][0], poles[j][1] - poles[k][1],
                                                                       poles[j][2] - poles[k][2]}));
        const double d_lo = res.buffer, d_hi = opt.fit_fraction * dist_b;
        if (!(d_hi > d_lo)) throw std::invalid_argument("greens_function: chart too coarse for the pole buffer");
        std::vector<AnnulusBound> ann(opt.annuli);
        for (int a = 0; a < opt.annuli; ++a) {
            ann[a].pole = k;
            ann[a].d_lo = d_lo * std::pow(d_hi / d_lo, static_cast<double>(a) / opt.annuli);
            ann[a].d_hi = d_lo * std::pow(d_hi / d_lo, static_cast<double>(a + 1) / opt.annuli);
            ann[a].min_Gd = kInfinity;
            ann[a].max_Gd = -kInfinity;
        }
        double s1 = 0, sd = 0, sdd = 0, sy = 0, sdy = 0;
        for (std::size_t p = 0; p < grid.size(); ++p) {
            auto c = grid.coords(p);
            double d = detail::norm3({c[0] - poles[k][0], c[1] - poles[k][1], c[2] - poles[k][2]});
            if (d < d_lo || d > d_hi) continue;
            double y = x[p] * d;
            s1 += 1;
            sd += d;
            sdd += d * d;
            sy += y;
            sdy += d * y;
            int a = std::min(opt.annuli - 1, static_cast<int>(opt.annuli * std::log(d / d_lo) / std::log(d_hi / d_lo)));
            ann[a].min_Gd = std::min(ann[a].min_Gd, y);
            ann[a].max_Gd = std::max(ann[a].max_Gd, y);
        }
        double det = s1 * sdd - sd * sd;
        double A = (sy * sdd - sd * sdy) / det, B = (s1 * sdy - sd * sy) / det;
        res.coefficient.push_back(A);
        res.offset.push_back(B);
        for (const auto& an : ann) {
            if (!std::isfinite(an.min_Gd)) continue;
            if (!(an.min_Gd > 0.0)) res.positive = false;
            cg = std::max({cg, an.max_Gd, 1.0 / an.min_Gd});
            res.annuli.push_back(an);
        }
    }
    res.c_G = cg;
    return res;
}

/// phi(R; s) at nodes where R is computed, 0 elsewhere: the potential of the Green's function problem.
inline ScalarField truncation_potential(const CurvatureField& R, double s = 1.0) {
    ScalarField V(R.value.chart, 0.0);
    for (std::size_t p = 0; p < V.size(); ++p)
        if (R.computed[p]) V[p] = truncate_phi(R.value[p], s);
    return V;
}

struct BlowupResult {
    MetricField metric;
    ScalarField factor;          // 1 + sigma G
    CurvatureField curvature;    // by the conformal formula
};

/// h_sigma = (1 + sigma G)^4 h with R(h_sigma) = (1 + sigma G)^{-5} (-8 Lap_h (1 + sigma G) + R(h) (1 + sigma G)).
inline BlowupResult conformal_blowup(const MetricField& h, const GreenResult& G, double sigma_blow, const CurvatureField& Rh) {
    if (!(sigma_blow >= 0.0)) throw std::invalid_argument("conformal_blowup: sigma_blow must be nonnegative");
    if (!(G.G.chart == h.chart())) throw std::invalid_argument("conformal_blowup: Green's function on a different chart");
    BlowupResult out;
    out.factor = ScalarField(h.chart());
    Grid grid(h.chart());
    for (std::size_t p = 0; p < out.factor.size(); ++p) {
        out.factor[p] = 1.0 + sigma_blow * G.G[p];
        if (!(out.factor[p] > 0.0)) throw std::domain_error("conformal_blowup: 1 + sigma G <= 0 at " + grid.describe(p));
    }
    auto conf = conformal_transform(h, out.factor, Rh);
    out.metric = conf.metric;
    out.curvature = conf.curvature;
    return out;
}

// ---------------------------------------------------------------------------------------------
// Inversion chart around a pole.

/// Pullback of (1 + sigma G)^4 h through x -> x / |x|^2, as a metric on |x| > 1.
inline TensorFn inversion_pullback(const TensorFn& ball_metric, const std::function<double(const Point3&)>& G, double sigma_blow) {
    return [=](const std::array<double, kMaxDim>& x) {
        Point3 X{x[0], x[1], x[2]};
        double r2 = X[0] * X[0] + X[1] * X[1] + X[2] * X[2];
        Point3 y{X[0] / r2, X[1] / r2, X[2] / r2};
        Matd hy = ball_metric(detail::to_point(y));
        Matd J(3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) J(i, j) = ((i == j ? 1.0 : 0.0) - 2.0 * X[i] * X[j] / r2) / r2;
        Matd m(3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) s += J(a, i) * hy(a, b) * J(b, j);
                m(i, j) = s;
            }
        double f = 1.0 + sigma_blow * G(y);
        return scaled(m, f * f * f * f);
    };
}

struct InversionReport {
    std::vector<double> outer_radii;
    std::vector<double> constants;  // sup over 1 <= |x| <= R of max(lambda_max, 1 / lambda_min)
    double drift = 0.0;             // largest relative change between consecutive radii
    bool stable = false;            // drift below the tolerance
};

/// Uniform-equivalence constant of the exterior metric to delta on shells 1 <= |x| <= R for each R.
inline InversionReport inversion_equivalence(const TensorFn& exterior, const std::vector<double>& outer_radii,
                                             double drift_tolerance = 0.1, int radial_samples = 64, int n_polar = 8,
                                             int n_azimuth = 16) {
    InversionReport rep;
    rep.outer_radii = outer_radii;
    detail::GaussRule gl = detail::gauss_legendre(n_polar);
    for (double R : outer_radii) {
        if (!(R > 1.0)) throw std::invalid_argument("inversion_equivalence: outer radius must exceed 1");
        double c = 1.0;
        for (int i = 0; i <= radial_samples; ++i) {
            double r = std::pow(R, static_cast<double>(i) / radial_samples);
            for (int a = 0; a < n_polar; ++a) {
                double ct = gl.x[a], st = std::sqrt(1.0 - ct * ct);
                for (int b = 0; b < n_azimuth; ++b) {
                    double ph = 2.0 * kPi * (b + 0.5) / n_azimuth;
                    auto ev = symmetric_eigenvalues(exterior({r * st * std::cos(ph), r * st * std::sin(ph), r * ct, 0.0}));
                    double lo = std::min({ev[0], ev[1], ev[2]}), hi = std::max({ev[0], ev[1], ev[2]});
                    if (!(lo > 0.0)) throw std::domain_error("inversion_equivalence: metric not positive definite");
                    c = std::max({c, hi, 1.0 / lo});
                }
            }
        }
        rep.constants.push_back(c);
    }
    for (std::size_t i = 1; i < rep.constants.size(); ++i)
        rep.drift = std::max(rep.drift, std::abs(rep.constants[i] / rep.constants[i - 1] - 1.0));
    rep.stable = std::isfinite(rep.drift) && rep.drift < drift_tolerance;
    return rep;
}

// ---------------------------------------------------------------------------------------------
// Minimal coordinate spheres.

struct NeckReport {
    std::vector<double> radii, areas;
    double r_min = 0.0;
    double area_min = 0.0;
    double enclosure_radius = 0.0;  // outer end of the searched range
    bool interior = false;  // false: the minimizer is the inner boundary
};

/// Minimizes A(r) over [r_lo, r_hi]: log-spaced scan, golden-section refinement, then bisection on dA/dr.
inline NeckReport minimal_sphere_search(const std::function<double(double)>& area, const std::vector<double>& radii) {
    if (radii.size() < 3) throw std::invalid_argument("minimal_sphere_search: need at least three radii");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1])) throw std::invalid_argument("minimal_sphere_search: radii must increase");
    NeckReport rep;
    rep.radii = radii;
    rep.enclosure_radius = radii.back();
    for (double r : radii) rep.areas.push_back(area(r));
    std::size_t k = static_cast<std::size_t>(std::min_element(rep.areas.begin(), rep.areas.end()) - rep.areas.begin());
    if (k == 0 || k + 1 == radii.size()) {
        rep.r_min = radii[k];
        rep.area_min = rep.areas[k];
        rep.interior = false;
        return rep;
    }
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = radii[k - 1], b = radii[k + 1];
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = area(c), fd = area(d);
    for (int it = 0; it < 60 && (b - a) > 1e-7 * b; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = area(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = area(d);
        }
    }
    auto slope = [&](double r) {
        double s = 1e-6 * r;
        return (area(r + s) - area(r - s)) / (2.0 * s);
    };
    double lo = a, hi = b;
    if (slope(lo) < 0.0 && slope(hi) > 0.0)
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi);
            (slope(mid) < 0.0 ? lo : hi) = mid;
        }
    rep.r_min = 0.5 * (lo + hi);
    rep.area_min = area(rep.r_min);
    rep.interior = true;
    return rep;
}

inline std::vector<double> log_radii(double r_lo, double r_hi, int samples) {
    std::vector<double> r(samples);
    for (int i = 0; i < samples; ++i) r[i] = r_lo * std::pow(r_hi / r_lo, static_cast<double>(i) / (samples - 1));
    return r;
}

inline NeckReport minimal_sphere_search(const AsymptoticModel& m, double r_hi, int samples = 200) {
    double lo = m.r_inner > 0.0 ? m.r_inner * (1.0 + 1e-9) : 1e-3 * r_hi;
    return minimal_sphere_search([&m](double r) { return m.sphere_area(r); }, log_radii(lo, r_hi, samples));
}

/// Coordinate-sphere area around a pole for (1 + sigma G)^4 delta.
inline std::function<double(double)> blowup_sphere_area(const GreenResult& G, std::size_t pole, double sigma_blow,
                                                        int n_polar = 12, int n_azimuth = 24) {
    Point3 c = G.poles.at(pole);
    return [=, &G](double r) {
        return r * r * detail::sphere_quadrature(n_polar, n_azimuth, [&](const Point3& nu) {
                   double f = 1.0 + sigma_blow * G.evaluate({c[0] + r * nu[0], c[1] + r * nu[1], c[2] + r * nu[2]});
                   return f * f * f * f;
               });
    };
}

// ---------------------------------------------------------------------------------------------
// First variation of the mass.

struct FirstVariation {
    double t = 0.0;
    double measured = 0.0;        // d/dt m(u_t^4 g_t) by a symmetric difference
    double ricci_pairing = 0.0;   // int <Ric(g), h> dVol_g
    double ratio = 0.0;           // measured / ricci_pairing
    static double expected_ratio() { return -1.0 / (16.0 * kPi); }
};

/// g_t = g - t h with h compactly supported in the chart interior. To first order the scalar-flat conformal
/// metric u_t^4 g_t has mass m(g) - (1/16 pi) int R(g_t) dVol_{g_t}, which is differentiated symmetrically in t.
inline FirstVariation mass_first_variation(const TensorFn& g, const TensorFn& h, const ChartSpec& chart, double t) {
    if (chart.dim() != 3) throw std::invalid_argument("mass_first_variation: n = 3 only");
    auto curvature_integral = [&](double s) {
        MetricField gs = sample_metric(chart, [&](const auto& x) {
            Matd a = g(x), b = h(x);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) a(i, j) -= s * b(i, j);
            return a;
        });
        auto R = scalar_curvature(gs);
        return integrate_signed(R.value, gs, R.computed);
    };
    FirstVariation fv;
    fv.t = t;
    fv.measured = -(curvature_integral(t) - curvature_integral(-t)) / (2.0 * t) / (16.0 * kPi);
    MetricField g0 = sample_metric(chart, g);
    TensorField ht = sample_tensor(chart, h);
    auto ric = ricci(g0);
    ScalarField pair = tensor_inner(g0, ric.value, ht);
    fv.ricci_pairing = integrate_signed(pair, g0, ric.computed);
    fv.ratio = fv.measured / fv.ricci_pairing;
    return fv;
}

// ---------------------------------------------------------------------------------------------
// Smoothed edge rings in an asymptotically flat end.

/// A ring of radius a carrying `edge` along its arclength y (link length 2 pi a), inside Schwarzschild of
/// mass `background_mass`. The ring is modelled by a straight tube in (r, theta, y); on rho <= r <= K rho the
/// cone angle opens to 2 pi, so the exterior of the shell is the background.
struct RingModel {
    EdgeData edge;
    double ring_radius = 1.0;
    double background_mass = 0.0;
    double shell_ratio = 4.0;  // K
};

inline RingModel edge_ring(double ring_radius, double tube_radius, LinkFn beta, double background_mass = 0.0) {
    if (!(tube_radius > 0.0 && 4.0 * tube_radius < ring_radius))
        throw std::invalid_argument("edge_ring: the opening shell must stay inside the ring radius");
    RingModel m;
    m.edge.n = 3;
    m.edge.link_lengths = {2.0 * kPi * ring_radius};
    m.edge.beta = std::move(beta);
    m.edge.rho = [tube_radius](const LinkPoint&) { return tube_radius; };
    m.ring_radius = ring_radius;
    m.background_mass = background_mass;
    return m;
}

/// Angular factor on the opening shell: (1 + beta) at r = rho, 1 at r = K rho, quintic in log r between.
inline double ring_angle_factor(double beta, double rho, double K, double r) {
    double x = std::min(std::max(std::log(r / rho) / std::log(K), 0.0), 1.0);
    double s = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
    return (1.0 + beta) * (1.0 - s) + s;
}

struct RingShell {
    double negative_mass = 0.0;  // (1/16 pi) int R_- dVol over the shell
    double signed_mass = 0.0;    // (1/16 pi) int R dVol over the shell
    double oracle_signed = 0.0;  // (1/4) int beta dy
};

/// Curvature carried by the opening shell rho <= r <= K rho. Raising its negative part to zero by a conformal
/// factor close to 1 adds negative_mass to the mass, to first order.
inline RingShell ring_shell_mass(const RingModel& m, int nr = 241, int ntheta = 5, int ny = 16) {
    m.edge.validate();
    if (m.edge.h) throw std::invalid_argument("ring_shell_mass: the perturbation h must vanish on the shell");
    if (!(m.shell_ratio > 1.0)) throw std::invalid_argument("ring_shell_mass: shell ratio must exceed 1");
    const double rho = m.edge.rho({0.0, 0.0}), K = m.shell_ratio;
    const double L = m.edge.link_lengths[0];
    const double dr = (K - 1.0) * rho / (nr - 1);
    ChartSpec chart = polar_chart(rho - 2.0 * dr, K * rho + 2.0 * dr, nr + 4, ntheta, {L}, ny, false);
    const EdgeData& d = m.edge;
    MetricField g = sample_polar_metric(chart, [&](const auto& x) {
        double w = ring_angle_factor(d.beta(link_point(x, 1)), rho, K, x[0]) * x[0];
        Matd c = Matd::identity(3);
        c(1, 1) = w * w;
        return c;
    });
    auto R = scalar_curvature(g);
    Grid grid(chart);
    const auto& vol = FluxLaplacian(g).volume_density();
    double neg = 0.0, sgn = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
        int i = grid.index(p, 0) - 1;
        if (i < 1 || i > nr) continue;
        if (!R.computed[p]) throw std::logic_error("ring_shell_mass: curvature missing inside the shell");
        double w = grid.cell_weight(p) * vol[p] * ((i == 1 || i == nr) ? 0.5 : 1.0);
        neg += w * std::max(-R.value[p], 0.0);
        sgn += w * R.value[p];
    }
    RingShell out;
    out.negative_mass = neg / (16.0 * kPi);
    out.signed_mass = sgn / (16.0 * kPi);
    const int nq = 1024;
    double ib = 0.0;
    for (int k = 0; k < nq; ++k) ib += d.beta({L * k / nq, 0.0});
    out.oracle_signed = 0.25 * ib * L / nq;
    return out;
}

/// Conformal zeroing of R(g_eps)_- on the doubled tube r in (core eps rho, r_outer), u = 1 on the outer layer.
inline ZeroingResult smoothed_tube_zeroing(const EdgeData& d, const SmoothingParams& p, double r_outer,
                                           const SweepResolution& res = {}) {
    p.validate(d);
    const double rho = min_over_link(d, d.rho);
    if (!(r_outer >= p.epsilon * max_over_link(d, d.rho) && r_outer <= rho * (1.0 + 1e-12)))
        throw std::invalid_argument("smoothed_tube_zeroing: outer radius must lie in [eps rho, rho]");
    double lo = p.epsilon * rho * res.core_fraction;
    int nr = static_cast<int>(std::ceil(std::log(r_outer / lo) / res.t_step));
    ChartSpec chart = polar_chart(lo, r_outer, nr, res.n_theta, d.link_lengths, res.n_y, true, Boundary::reflecting);
    MetricField g = smoothed_metric(d, p, chart);
    auto R = scalar_curvature(g);
    Grid grid(chart);
    Region fixed(chart, false);
    for (std::size_t q = 0; q < grid.size(); ++q)
        if (grid.index(q, 0) == nr - 1) fixed.mask[q] = 1;
    return conformal_zeroing(g, R, zeroing_coefficient(3), 1e-12, 50000, &fixed);
}

struct MassRow {
    double epsilon = 0.0;
    double shift = 0.0;          // mass added by zeroing R(g_eps)_- in the tube
    double max_deviation = 0.0;  // ||u_eps - 1||_inf
    double mass = 0.0;
};

struct MassStudy {
    double background = 0.0;  // flux mass of the background
    RingShell shell;
    std::vector<MassRow> rows;
    double extrapolated = std::numeric_limits<double>::quiet_NaN();
    double spread = 0.0;      // (max - min) of the last three masses over |extrapolated|
    double floor = 0.0;       // smallest mass in the sweep
    bool converged(double tol = 0.02) const { return spread < tol; }
};

/// Masses of u_eps^4 g_eps across the sweep, to first order in the conformal corrections:
/// m_background + shell.negative_mass + shift(eps). eps values are processed in the given order.
inline MassStudy mass_convergence_study(const RingModel& m, const SmoothingParams& base, const std::vector<double>& eps_sweep,
                                        const SweepResolution& res = {}) {
    if (eps_sweep.size() < 3) throw std::invalid_argument("mass_convergence_study: need at least three epsilon values");
    m.edge.validate();
    MassStudy st;
    st.background = m.background_mass == 0.0 ? 0.0 : adm_mass(schwarzschild(m.background_mass), {16.0, 32.0, 64.0, 128.0}).mass;
    st.shell = ring_shell_mass(m);
    const double rho = min_over_link(m.edge, m.edge.rho);
    st.rows.resize(eps_sweep.size());
    parallel_for(eps_sweep.size(), res.threads, [&](std::size_t i) {
        SmoothingParams p = base;
        p.epsilon = eps_sweep[i];
        auto z = smoothed_tube_zeroing(m.edge, p, rho, res);
        st.rows[i].epsilon = p.epsilon;
        st.rows[i].shift = z.mass_shift;
        st.rows[i].max_deviation = z.max_deviation;
    });
    st.floor = kInfinity;
    for (auto& r : st.rows) {
        r.mass = st.background + st.shell.negative_mass + r.shift;
        st.floor = std::min(st.floor, r.mass);
    }
    const std::size_t k = st.rows.size();
    double a = st.rows[k - 3].mass, b = st.rows[k - 2].mass, c = st.rows[k - 1].mass;
    double den = (c - b) - (b - a);
    st.extrapolated = c;
    if (std::abs(den) > 1e-14 * (1.0 + std::abs(c)) && std::abs(c - b) < std::abs(b - a))
        st.extrapolated = c - (c - b) * (c - b) / den;
    st.spread = (std::max({a, b, c}) - std::min({a, b, c})) / std::abs(st.extrapolated);
    return st;
}

}  // namespace curvlab
