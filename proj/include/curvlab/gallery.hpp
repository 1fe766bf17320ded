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
#include "curvlab/spectral.hpp"

namespace curvlab {

// ---------------------------------------------------------------------------------------------
// Smoothed cone cap.

struct CapStudy {
    double beta = 0.0;
    std::vector<int> cells;       // radial cells per ninth of eps rho
    std::vector<double> values;   // int K dA over the cap per refinement
    double extrapolated = 0.0;
    double expected = 0.0;        // -2 pi beta
    double observed_order = std::numeric_limits<double>::quiet_NaN();
};

/// Gauss curvature integral of (beta+1)^2 (f_eps^2 dr^2 + r^2 dtheta^2) over r <= eps rho.
/// The curvature lives on [1/3, 2/3] eps rho; the chart covers [1/9, 8/9] eps rho plus two guard cells,
/// with every cutoff breakpoint on a node.
inline double cap_curvature_integral(double beta, double eps, double rho, int cells_per_ninth, int n_theta = 5) {
    if (!(beta > -1.0)) throw std::invalid_argument("cap_curvature_integral: beta must exceed -1");
    if (cells_per_ninth < 2) throw std::invalid_argument("cap_curvature_integral: need at least two cells per ninth");
    const double er = eps * rho;
    const double h = er / (9.0 * cells_per_ninth);
    const int nr = 7 * cells_per_ninth + 1 + 4;
    ChartSpec chart = polar_chart(er / 9.0 - 2.0 * h, 8.0 * er / 9.0 + 2.0 * h, nr, n_theta, {}, 0, false);
    const double b = (1.0 + beta) * (1.0 + beta);
    MetricField g = sample_polar_metric(chart, [&](const auto& x) {
        double f = profile_at(beta, rho, eps, x[0]).f;
        Matd m(2);
        m(0, 0) = b * f * f;
        m(1, 1) = b * x[0] * x[0];
        return m;
    });
    auto R = scalar_curvature(g);
    Grid grid(chart);
    double s = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
        int i = grid.index(p, 0);
        if (i < 2 || i > nr - 3) continue;
        double w = (i == 2 || i == nr - 3) ? 0.5 : 1.0;
        s += w * grid.cell_weight(p) * std::sqrt(determinant(g.at(p))) * 0.5 * R.value[p];
    }
    return s;
}

inline CapStudy cap_curvature_study(double beta, double eps = 0.1, double rho = 1.0, int base_cells = 8, int refinements = 3) {
    if (refinements < 2) throw std::invalid_argument("cap_curvature_study: need at least two refinements");
    CapStudy st;
    st.beta = beta;
    st.expected = -2.0 * kPi * beta;
    for (int k = 0; k < refinements; ++k) {
        st.cells.push_back(base_cells << k);
        st.values.push_back(cap_curvature_integral(beta, eps, rho, st.cells.back()));
    }
    st.extrapolated = richardson(st.values, 2.0, 2, 2);
    const std::size_t n = st.values.size();
    if (n >= 3) {
        double d1 = st.values[n - 3] - st.values[n - 2], d2 = st.values[n - 2] - st.values[n - 1];
        if (d1 != 0.0 && d2 != 0.0) st.observed_order = std::log2(std::abs(d1 / d2));
    }
    return st;
}

// ---------------------------------------------------------------------------------------------
// Gauss-Bonnet with cone points.

struct ConePoint {
    double beta = 0.0;
    int patch = 0;
    double x = 0.0, y = 0.0;       // chart coordinates of the cone point in its patch
    double cap_radius = 0.0;       // coordinate radius of the smoothed disk around it
};

/// A chart of the surface and its partition-of-unity weight.
struct SurfacePatch {
    MetricField g;
    ScalarField weight;
};

/// Closed surface covered by weighted patches; cone points are smoothed inside their caps.
struct ConeSurface {
    std::string name;
    std::vector<SurfacePatch> patches;
    std::vector<ConePoint> cones;
    int euler = 0;
};

struct GaussBonnetReport {
    double total = 0.0;                 // int K dA over the surface
    double regular = 0.0;               // int K dA outside the caps
    std::vector<double> caps;           // int K dA over each cap
    double deficit = 0.0;               // 2 pi sum beta
    double euler_residual = 0.0;        // |total - 2 pi chi|
    double residual = 0.0;              // |regular - 2 pi sum beta - 2 pi chi|
    double cap_error = 0.0;             // max |cap_i + 2 pi beta_i|
};

namespace detail {

inline double periodic_offset(double d, const Axis& a) {
    if (a.boundary != Boundary::periodic) return d;
    double L = a.upper - a.lower;
    d = std::fmod(d, L);
    if (d > 0.5 * L) d -= L;
    if (d < -0.5 * L) d += L;
    return d;
}

}  // namespace detail

inline GaussBonnetReport gauss_bonnet_check(const ConeSurface& s) {
    if (s.patches.empty()) throw std::invalid_argument("gauss_bonnet_check: no patches");
    for (const auto& c : s.cones) {
        if (!(c.beta > -1.0)) throw std::invalid_argument("gauss_bonnet_check: cone beta must exceed -1");
        if (!(c.cap_radius > 0.0)) throw std::invalid_argument("gauss_bonnet_check: cap radius must be positive");
        if (c.patch < 0 || c.patch >= static_cast<int>(s.patches.size()))
            throw std::invalid_argument("gauss_bonnet_check: cone refers to a missing patch");
    }
    GaussBonnetReport rep;
    rep.caps.assign(s.cones.size(), 0.0);
    for (std::size_t k = 0; k < s.patches.size(); ++k) {
        const auto& P = s.patches[k];
        const ChartSpec& chart = P.g.chart();
        if (P.g.dim() != 2) throw std::invalid_argument("gauss_bonnet_check: patches must be two-dimensional");
        if (!(P.weight.chart == chart)) throw std::invalid_argument("gauss_bonnet_check: patch weight on a different chart");
        auto R = scalar_curvature(P.g);
        Grid grid(chart);
        for (std::size_t p = 0; p < grid.size(); ++p) {
            double w = P.weight[p];
            if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("gauss_bonnet_check: patch weight outside [0, 1]");
            if (w == 0.0) continue;
            if (!R.computed[p])
                throw std::invalid_argument("gauss_bonnet_check: patch weight reaches " + grid.describe(p) +
                                            " where the curvature stencil is unavailable");
            int owner = -1;
            auto x = grid.coords(p);
            for (std::size_t c = 0; c < s.cones.size(); ++c) {
                if (s.cones[c].patch != static_cast<int>(k)) continue;
                double dx = detail::periodic_offset(x[0] - s.cones[c].x, chart.axes[0]);
                double dy = detail::periodic_offset(x[1] - s.cones[c].y, chart.axes[1]);
                if (std::hypot(dx, dy) < s.cones[c].cap_radius) {
                    if (owner >= 0) throw std::invalid_argument("gauss_bonnet_check: caps overlap");
                    owner = static_cast<int>(c);
                }
            }
            double v = w * grid.cell_weight(p) * std::sqrt(determinant(P.g.at(p))) * 0.5 * R.value[p];
            rep.total += v;
            if (owner >= 0)
                rep.caps[owner] += v;
            else
                rep.regular += v;
        }
    }
    double sb = 0.0;
    for (std::size_t k = 0; k < s.cones.size(); ++k) {
        sb += s.cones[k].beta;
        rep.cap_error = std::max(rep.cap_error, std::abs(rep.caps[k] + 2.0 * kPi * s.cones[k].beta));
    }
    rep.deficit = 2.0 * kPi * sb;
    rep.euler_residual = std::abs(rep.total - 2.0 * kPi * s.euler);
    rep.residual = std::abs(rep.regular - rep.deficit - 2.0 * kPi * s.euler);
    return rep;
}

/// Weight of the stereographic patch at coordinate radius s; w(s) + w(1/s) = 1, w = 1 for s <= e^{-tau}.
inline double stereographic_weight(double s, double tau = 0.4) {
    if (s <= 0.0) return 1.0;
    double t = std::log(s) / tau;
    if (t <= -1.0) return 1.0;
    if (t >= 1.0) return 0.0;
    // Odd C^2 step on [-1, 1].
    double u = 0.5 * (t + 1.0);
    double S = 2.0 * u * u * u * (10.0 - 15.0 * u + 6.0 * u * u) - 1.0;
    return 0.5 * (1.0 - S);
}

/// Unit round sphere from two stereographic patches (2 / (1 + |x|^2))^2 delta on [-L, L]^2.
inline ConeSurface round_sphere_surface(int samples, double tau = 0.4) {
    const double L = std::exp(tau) + 0.25;
    ConeSurface s;
    s.name = "round sphere";
    for (int k = 0; k < 2; ++k) {
        ChartSpec chart = cube_chart(2, samples, -L, L);
        SurfacePatch P;
        P.g = sample_metric(chart, [](const auto& x) {
            double w = 2.0 / (1.0 + x[0] * x[0] + x[1] * x[1]);
            return scaled(Matd::identity(2), w * w);
        });
        P.weight = sample_scalar(chart, [tau](const auto& x) { return stereographic_weight(std::hypot(x[0], x[1]), tau); });
        s.patches.push_back(std::move(P));
    }
    s.euler = 2;
    return s;
}

/// Unit flat torus with smoothed cone points: e^{2w} (dx^2 + dy^2) with Lap w = 2 pi sum beta_i psi_i, where
/// psi_i is a unit-mass bump of radius 2/3 cap_radius. Requires sum beta_i = 0.
inline ConeSurface cone_torus_surface(const std::vector<ConePoint>& cones, int samples) {
    double sb = 0.0;
    for (const auto& c : cones) sb += c.beta;
    if (std::abs(sb) > 1e-12) throw std::invalid_argument("cone_torus_surface: cone parameters must sum to zero on a torus");
    ChartSpec chart = torus_chart(2, samples);
    Grid grid(chart);
    const std::size_t N = grid.size();
    const double cell = grid.cell_weight(0);
    std::vector<double> rhs(N, 0.0);
    for (const auto& c : cones) {
        const double s = 2.0 * c.cap_radius / 3.0;
        std::vector<double> bump(N, 0.0);
        double mass = 0.0;
        for (std::size_t p = 0; p < N; ++p) {
            auto x = grid.coords(p);
            double d = std::hypot(detail::periodic_offset(x[0] - c.x, chart.axes[0]), detail::periodic_offset(x[1] - c.y, chart.axes[1]));
            if (d < s) bump[p] = std::pow(1.0 - d * d / (s * s), 4);
            mass += bump[p] * cell;
        }
        if (!(mass > 0.0)) throw std::invalid_argument("cone_torus_surface: cap not resolved by the grid");
        // -Lap w = -2 pi beta psi, weighted by the cell measure.
        for (std::size_t p = 0; p < N; ++p) rhs[p] -= 2.0 * kPi * c.beta * bump[p] / mass * cell;
    }
    MetricField flat = sample_metric(chart, [](const auto&) -> Matd { return Matd::identity(2); });
    FluxLaplacian lap(flat);
    std::vector<double> diag(N);
    for (std::size_t p = 0; p < N; ++p) diag[p] = -cell * lap.diagonal_at(p);
    LinearOp A = [&](const std::vector<double>& u, std::vector<double>& y) {
        lap.apply(u, y);
        for (double& v : y) v *= -cell;
    };
    std::vector<double> w(N, 0.0);
    auto st = conjugate_gradient(A, rhs, w, 1e-13, 20000, &diag);
    if (!st.converged) throw std::runtime_error("cone_torus_surface: Poisson solve did not converge");
    double mean = 0.0;
    for (double v : w) mean += v / N;
    ConeSurface s;
    s.name = "cone torus";
    TensorField t(chart);
    for (std::size_t p = 0; p < N; ++p) t.put(p, scaled(Matd::identity(2), std::exp(2.0 * (w[p] - mean))));
    s.patches.push_back({MetricField(std::move(t)), ScalarField(chart, 1.0)});
    s.cones = cones;
    for (auto& c : s.cones) c.patch = 0;
    s.euler = 0;
    return s;
}

// ---------------------------------------------------------------------------------------------
// Flat genus-g surfaces with four cone points.

struct GenusSurface {
    int genus = 0;
    int cone_points = 4;
    double cone_angle = 0.0;     // (g + 1) pi
    double beta = 0.0;           // (g - 1) / 2
    double beta_sum = 0.0;
    int euler_from_deficits = 0; // -sum beta, from int K = 0
    int euler_expected = 0;      // 2 - 2g
    bool consistent = false;
    bool angles_exceed_full = false;
};

/// Doubled planar graph with two nodes and g + 1 edges: four cone points of angle (g + 1) pi, flat elsewhere.
inline GenusSurface flat_genus_surface(int genus) {
    if (genus < 2) throw std::invalid_argument("flat_genus_surface: genus must be at least 2");
    GenusSurface s;
    s.genus = genus;
    s.cone_angle = (genus + 1) * kPi;
    s.beta = 0.5 * (genus - 1);
    // Work in half-integers so the identity is checked exactly.
    const int twice_beta = genus - 1;
    const int twice_sum = s.cone_points * twice_beta;
    s.beta_sum = 0.5 * twice_sum;
    s.euler_from_deficits = -twice_sum / 2;
    s.euler_expected = 2 - 2 * genus;
    s.consistent = twice_sum % 2 == 0 && s.euler_from_deficits == s.euler_expected;
    s.angles_exceed_full = ConeSpec{s.beta}.exceeds_full_angle();
    return s;
}

// ---------------------------------------------------------------------------------------------
// Level sets of a coordinate: mean curvature and second fundamental form by differences of the metric.

namespace detail {

using Coords = std::array<double, kMaxDim>;

// d_k g at x by central differences.
inline std::array<Matd, kMaxDim> metric_gradient(const TensorFn& g, const Coords& x, int n, double step) {
    std::array<Matd, kMaxDim> dg;
    for (int k = 0; k < n; ++k) {
        Coords a = x, b = x;
        a[k] += step;
        b[k] -= step;
        Matd ga = g(a), gb = g(b);
        dg[k] = Matd(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) dg[k](i, j) = (ga(i, j) - gb(i, j)) / (2.0 * step);
    }
    return dg;
}

}  // namespace detail

struct LevelSetGeometry {
    double H = 0.0;         // trace of A
    double A_norm2 = 0.0;   // |A|^2
    Matd induced;           // tangential block of g
    std::vector<double> normal;  // unit normal vector nu^i
};

/// Geometry of {x^axis = const} at x with unit normal pointing towards increasing (sign = +1) or decreasing
/// (sign = -1) x^axis. A_ab = -sign Gamma^axis_ab / sqrt(g^{axis axis}), H = div nu.
inline LevelSetGeometry level_set_geometry(const TensorFn& g, const detail::Coords& x, int n, int axis, int sign,
                                           double step = 1e-4) {
    if (axis < 0 || axis >= n || (sign != 1 && sign != -1)) throw std::invalid_argument("level_set_geometry: bad axis or sign");
    Matd gx = g(x), gi = inverse(gx);
    auto dg = detail::metric_gradient(g, x, n, step);
    const int m = n - 1;
    std::vector<int> tang;
    for (int k = 0; k < n; ++k)
        if (k != axis) tang.push_back(k);
    LevelSetGeometry out;
    out.induced = Matd(m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) out.induced(a, b) = gx(tang[a], tang[b]);
    Matd hi = inverse(out.induced);
    const double norm = std::sqrt(gi(axis, axis));
    Matd A(m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            int i = tang[a], j = tang[b];
            double gamma = 0.0;
            for (int l = 0; l < n; ++l) gamma += 0.5 * gi(axis, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
            A(a, b) = -sign * gamma / norm;
        }
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            out.H += hi(a, b) * A(a, b);
            for (int c = 0; c < m; ++c)
                for (int d = 0; d < m; ++d) out.A_norm2 += hi(a, c) * hi(b, d) * A(a, b) * A(c, d);
        }
    out.normal.resize(n);
    for (int i = 0; i < n; ++i) out.normal[i] = sign * gi(axis, i) / norm;
    return out;
}

/// Scalar curvature of a callable metric at x, by the grid stencil on a 5^n patch of spacing `step`.
inline double pointwise_scalar_curvature(const TensorFn& g, const detail::Coords& x, int n, double step = 1e-3) {
    ChartSpec c;
    for (int k = 0; k < n; ++k) c.axes.push_back(Axis{x[k] - 2.0 * step, x[k] + 2.0 * step, 5, Boundary::clamped});
    MetricField s = sample_metric(c, g);
    auto R = scalar_curvature(s);
    std::size_t centre = 0;
    for (int k = 0; k < n; ++k) centre = centre * 5 + 2;
    return R.value[centre];
}

// ---------------------------------------------------------------------------------------------
// Codimension-1 interfaces.

/// One side of an interface {x^axis = value}; `outward` is the direction (+1 / -1 in x^axis) leaving this side.
struct InterfaceSide {
    std::string label;
    TensorFn g;
    int axis = 0;
    double value = 0.0;
    int outward = 1;
};

struct InterfaceSample {
    double H_first = 0.0, H_second = 0.0;
    // Gauss-Riccati right side R(g_S) - 2 dH/dt - |A|^2 - H^2 per side, and the stencil R(g) it should match.
    double rhs_first = 0.0, rhs_second = 0.0;
    double R_first = 0.0, R_second = 0.0;
};

struct JumpReport {
    std::string first, second;
    std::vector<InterfaceSample> samples;
    double H_first = 0.0, H_second = 0.0;  // means over the samples
    double sum = 0.0;                      // H_first + H_second
    double induced_mismatch = 0.0;
    bool admissible = false;               // sum >= -tol everywhere
};

namespace detail {

inline void interface_terms(const InterfaceSide& s, Coords x, int n, double step, double& H, double& rhs, double& R) {
    x[s.axis] = s.value;
    auto L0 = level_set_geometry(s.g, x, n, s.axis, s.outward, step);
    // Move along the outward normal and difference H in arclength.
    Coords xp = x, xm = x;
    const double dt = 10.0 * step;
    for (int i = 0; i < n; ++i) {
        xp[i] += dt * L0.normal[i];
        xm[i] -= dt * L0.normal[i];
    }
    // Exact when x^axis is a normal coordinate: g_{axis axis} = 1 and g_{axis a} = 0.
    double Hp = level_set_geometry(s.g, xp, n, s.axis, s.outward, step).H;
    double Hm = level_set_geometry(s.g, xm, n, s.axis, s.outward, step).H;
    double dHdt = (Hp - Hm) / (2.0 * dt);
    // Induced metric curvature on the slice.
    const int m = n - 1;
    std::vector<int> tang;
    for (int k = 0; k < n; ++k)
        if (k != s.axis) tang.push_back(k);
    TensorFn slice = [&](const Coords& y) {
        Coords z = x;
        for (int a = 0; a < m; ++a) z[tang[a]] = y[a];
        Matd full = s.g(z), out(m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) out(a, b) = full(tang[a], tang[b]);
        return out;
    };
    Coords y{};
    for (int a = 0; a < m; ++a) y[a] = x[tang[a]];
    double Rs = m >= 2 ? pointwise_scalar_curvature(slice, y, m, 10.0 * step) : 0.0;
    H = L0.H;
    rhs = Rs - 2.0 * dHdt - L0.A_norm2 - L0.H * L0.H;
    R = pointwise_scalar_curvature(s.g, x, n, 10.0 * step);
}

}  // namespace detail

/// Mean curvatures of the interface from both sides at the given tangential sample points (full coordinate
/// tuples; the axis entry is overwritten). Both sides must use the same axis and tangential coordinates.
inline JumpReport mean_curvature_jump(const InterfaceSide& first, const InterfaceSide& second, int n,
                                      const std::vector<detail::Coords>& samples, double tol = 1e-6, double step = 1e-4) {
    if (first.axis != second.axis) throw std::invalid_argument("mean_curvature_jump: sides must share the interface axis");
    if (samples.empty()) throw std::invalid_argument("mean_curvature_jump: no samples");
    JumpReport rep;
    rep.first = first.label;
    rep.second = second.label;
    double scale = 0.0;
    for (auto x : samples) {
        detail::Coords a = x, b = x;
        a[first.axis] = first.value;
        b[second.axis] = second.value;
        Matd ga = first.g(a), gb = second.g(b);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == first.axis || j == first.axis) continue;
                rep.induced_mismatch = std::max(rep.induced_mismatch, std::abs(ga(i, j) - gb(i, j)));
                scale = std::max(scale, std::abs(ga(i, j)));
            }
    }
    if (rep.induced_mismatch > tol * std::max(1.0, scale))
        throw std::invalid_argument("mean_curvature_jump: the two sides induce different metrics (mismatch " +
                                    std::to_string(rep.induced_mismatch) + ")");
    rep.admissible = true;
    for (const auto& x : samples) {
        InterfaceSample s;
        detail::interface_terms(first, x, n, step, s.H_first, s.rhs_first, s.R_first);
        detail::interface_terms(second, x, n, step, s.H_second, s.rhs_second, s.R_second);
        rep.H_first += s.H_first / samples.size();
        rep.H_second += s.H_second / samples.size();
        if (s.H_first + s.H_second < -tol) rep.admissible = false;
        rep.samples.push_back(s);
    }
    rep.sum = rep.H_first + rep.H_second;
    return rep;
}

/// Flat space outside the sphere of radius a glued to a round half of S^3 of radius a, in coordinates
/// (r or psi, theta, phi). The flat side lives on r >= a, the spherical side on psi <= pi / 2.
inline std::pair<InterfaceSide, InterfaceSide> half_sphere_interface(double a) {
    if (!(a > 0.0)) throw std::invalid_argument("half_sphere_interface: radius must be positive");
    InterfaceSide flat{"flat exterior", [](const detail::Coords& x) {
                           Matd m = Matd::identity(3);
                           m(1, 1) = x[0] * x[0];
                           m(2, 2) = x[0] * x[0] * std::sin(x[1]) * std::sin(x[1]);
                           return m;
                       },
                       0, a, -1};
    // Spherical side uses t = a psi so that both charts share the coordinate value a at the interface:
    // psi = pi/2 + (t - a) / a.
    InterfaceSide round{"round half-sphere", [a](const detail::Coords& x) {
                            double psi = 0.5 * kPi + (x[0] - a) / a;
                            double s = a * std::sin(psi);
                            Matd m = Matd::identity(3);
                            m(1, 1) = s * s;
                            m(2, 2) = s * s * std::sin(x[1]) * std::sin(x[1]);
                            return m;
                        },
                        0, a, 1};
    return {flat, round};
}

inline std::vector<detail::Coords> interface_samples(int n_theta, int n_phi) {
    std::vector<detail::Coords> out;
    for (int i = 0; i < n_theta; ++i)
        for (int j = 0; j < n_phi; ++j)
            out.push_back({0.0, kPi * (i + 1.0) / (n_theta + 1.0), 2.0 * kPi * j / n_phi, 0.0});
    return out;
}

// ---------------------------------------------------------------------------------------------
// Cube-type polyhedra and their threefold doubling.

struct FaceRecord {
    int axis = 0;
    int side = 0;            // 0: x^axis = 0, 1: x^axis = 1
    double min_H = 0.0, max_H = 0.0;
    bool mean_convex = false;        // min H > 0
    double doubled_jump = 0.0;       // 2 min H: mean-curvature sum across the doubled face
    bool admissible = false;         // doubled_jump >= 0
};

struct EdgeRecord {
    int axis_a = 0, side_a = 0, axis_b = 0, side_b = 0;
    double min_angle = 0.0, max_angle = 0.0;
    double doubled_min = 0.0, doubled_max = 0.0;  // 4 x dihedral angle
    bool acute = false;                           // max angle < pi / 2
    bool admissible = false;                      // doubled angle <= 2 pi
    bool borderline = false;                      // doubled angle == 2 pi somewhere
};

struct StratumReport {
    std::vector<FaceRecord> faces;
    std::vector<EdgeRecord> edges;
    int vertices = 8;
    double vertex_equivalence = 1.0;  // uniform equivalence constant to delta over the sampled cube
    double min_R = 0.0;
    bool nonnegative_R = false;
    bool faces_pass = false, edges_pass = false, vertices_pass = false;
    bool all_strict = false;          // R >= 0, all faces mean convex, all angles acute
};

namespace detail {

inline double dihedral_angle(const TensorFn& g, const Coords& x, int axis_a, int side_a, int axis_b, int side_b) {
    Matd gi = inverse(g(x));
    // Outward conormals: -dx^k on the 0 face, +dx^k on the 1 face.
    double sa = side_a ? 1.0 : -1.0, sb = side_b ? 1.0 : -1.0;
    double c = sa * sb * gi(axis_a, axis_b) / std::sqrt(gi(axis_a, axis_a) * gi(axis_b, axis_b));
    c = std::min(1.0, std::max(-1.0, c));
    return std::acos(-c);
}

}  // namespace detail

/// Face, edge and vertex strata of [0, 1]^3 under g, sampled on `samples` points per edge direction.
inline StratumReport gromov_cube_report(const TensorFn& g, int samples = 9, double tol = 1e-9, int interior_samples = 9) {
    if (samples < 3) throw std::invalid_argument("gromov_cube_report: need at least three samples per direction");
    StratumReport rep;
    auto lin = [&](int i, int n) { return static_cast<double>(i) / (n - 1); };
    rep.faces_pass = true;
    for (int axis = 0; axis < 3; ++axis)
        for (int side = 0; side < 2; ++side) {
            FaceRecord f;
            f.axis = axis;
            f.side = side;
            f.min_H = kInfinity;
            f.max_H = -kInfinity;
            int u = (axis + 1) % 3, v = (axis + 2) % 3;
            for (int i = 1; i < samples - 1; ++i)
                for (int j = 1; j < samples - 1; ++j) {
                    detail::Coords x{};
                    x[axis] = side;
                    x[u] = lin(i, samples);
                    x[v] = lin(j, samples);
                    double H = level_set_geometry(g, x, 3, axis, side ? 1 : -1).H;
                    f.min_H = std::min(f.min_H, H);
                    f.max_H = std::max(f.max_H, H);
                }
            f.mean_convex = f.min_H > tol;
            f.doubled_jump = 2.0 * f.min_H;
            f.admissible = f.doubled_jump >= -tol;
            rep.faces_pass = rep.faces_pass && f.admissible;
            rep.faces.push_back(f);
        }
    rep.edges_pass = true;
    bool all_acute = true;
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b) {
            int along = 3 - a - b;
            for (int sa = 0; sa < 2; ++sa)
                for (int sb = 0; sb < 2; ++sb) {
                    EdgeRecord e{a, sa, b, sb};
                    e.min_angle = kInfinity;
                    e.max_angle = -kInfinity;
                    for (int i = 0; i < samples; ++i) {
                        detail::Coords x{};
                        x[a] = sa;
                        x[b] = sb;
                        x[along] = lin(i, samples);
                        double ang = detail::dihedral_angle(g, x, a, sa, b, sb);
                        e.min_angle = std::min(e.min_angle, ang);
                        e.max_angle = std::max(e.max_angle, ang);
                    }
                    e.doubled_min = 4.0 * e.min_angle;
                    e.doubled_max = 4.0 * e.max_angle;
                    e.acute = e.max_angle < 0.5 * kPi;
                    e.admissible = e.doubled_max <= 2.0 * kPi;
                    e.borderline = e.doubled_max == 2.0 * kPi || e.doubled_min == 2.0 * kPi;
                    rep.edges_pass = rep.edges_pass && e.admissible;
                    all_acute = all_acute && e.acute;
                    rep.edges.push_back(e);
                }
        }
    ChartSpec cube = cube_chart(3, interior_samples, 0.0, 1.0);
    MetricField gs = sample_metric(cube, g);
    MetricField flat = sample_metric(cube, [](const auto&) -> Matd { return Matd::identity(3); });
    rep.vertex_equivalence = uniform_equivalence(gs, flat);
    rep.vertices_pass = std::isfinite(rep.vertex_equivalence);
    auto R = scalar_curvature(gs);
    rep.min_R = kInfinity;
    for (std::size_t p = 0; p < R.value.size(); ++p)
        if (R.computed[p]) rep.min_R = std::min(rep.min_R, R.value[p]);
    rep.nonnegative_R = rep.min_R >= -tol;
    bool all_convex = true;
    for (const auto& f : rep.faces) all_convex = all_convex && f.mean_convex;
    rep.all_strict = rep.nonnegative_R && all_convex && all_acute;
    return rep;
}

/// e^{2k|x - c|^2} (delta + s sum_{i<j} (1 - 2x_i)(1 - 2x_j) (dx_i dx_j + dx_j dx_i)), c the cube centre.
/// s > 0 makes every dihedral angle acute, s < 0 obtuse; k > 0 bends the faces outward without changing angles.
inline TensorFn skewed_cube_metric(double s, double k) {
    return [s, k](const detail::Coords& x) {
        Matd m = Matd::identity(3);
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) m(i, j) = m(j, i) = s * (1.0 - 2.0 * x[i]) * (1.0 - 2.0 * x[j]);
        double d2 = 0.0;
        for (int i = 0; i < 3; ++i) d2 += (x[i] - 0.5) * (x[i] - 0.5);
        return scaled(m, std::exp(2.0 * k * d2));
    };
}

}  // namespace curvlab
