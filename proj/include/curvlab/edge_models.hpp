#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "curvlab/grid.hpp"

namespace curvlab {

/// Point on the link manifold N (a flat torus of dimension n - 2 <= 2).
using LinkPoint = std::array<double, 2>;
using LinkFn = std::function<double(const LinkPoint&)>;
using LinkFormFn = std::function<LinkPoint(const LinkPoint&)>;

struct ConeSpec {
    double beta = 0.0;

    void validate() const {
        if (!(beta > -1.0) || !std::isfinite(beta)) throw std::invalid_argument("cone parameter beta must exceed -1");
    }
    double angle() const { return 2.0 * kPi * (beta + 1.0); }
    bool exceeds_full_angle() const { return beta > 0.0; }
};

/// Codimension-2 edge data g = dr^2 + (beta+1)^2 r^2 (dtheta + sigma)^2 + omega + r^{1+eta} h.
/// N is a flat torus with periods `link_lengths`; omega is a constant metric on it.
/// `h` returns components in (r, theta, y...) coordinates at the point (r, theta, y...).
struct EdgeData {
    int n = 3;
    double eta = 0.9;
    std::vector<double> link_lengths{1.0};
    LinkFn beta = [](const LinkPoint&) { return 0.0; };
    LinkFormFn sigma = [](const LinkPoint&) { return LinkPoint{0.0, 0.0}; };
    Matd omega = Matd::identity(1);
    LinkFn rho = [](const LinkPoint&) { return 1.0; };
    TensorFn h;

    int link_dim() const { return n - 2; }

    void validate() const {
        if (n < 3 || n > kMaxDim) throw std::invalid_argument("edge data: dimension must be 3 or 4");
        if (static_cast<int>(link_lengths.size()) != n - 2) throw std::invalid_argument("edge data: link_lengths must have n - 2 entries");
        if (omega.n != n - 2) throw std::invalid_argument("edge data: omega has the wrong dimension");
        if (!(eta > 0.0)) throw std::invalid_argument("edge data: eta must be positive");
        Matd l;
        if (!cholesky(omega, l)) throw std::invalid_argument("edge data: omega not positive definite");
    }
};

inline LinkPoint link_point(const std::array<double, kMaxDim>& x, int link_dim) {
    LinkPoint y{0.0, 0.0};
    for (int i = 0; i < link_dim; ++i) y[i] = x[2 + i];
    return y;
}

/// Sample points of N on a uniform grid with `per_axis` nodes per period.
inline std::vector<LinkPoint> link_samples(const EdgeData& d, int per_axis) {
    std::vector<LinkPoint> pts;
    const int m = d.link_dim();
    int total = 1;
    for (int i = 0; i < m; ++i) total *= per_axis;
    for (int k = 0; k < total; ++k) {
        LinkPoint y{0.0, 0.0};
        int rem = k;
        for (int i = 0; i < m; ++i) {
            y[i] = d.link_lengths[i] * (rem % per_axis) / per_axis;
            rem /= per_axis;
        }
        pts.push_back(y);
    }
    return pts;
}

inline double min_over_link(const EdgeData& d, const LinkFn& f, int per_axis = 64) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& y : link_samples(d, per_axis)) m = std::min(m, f(y));
    return m;
}

inline double max_over_link(const EdgeData& d, const LinkFn& f, int per_axis = 64) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& y : link_samples(d, per_axis)) m = std::max(m, f(y));
    return m;
}

/// Components of a tensor given in Euclidean (x1, x2, y...) coordinates, re-expressed in (r, theta, y...).
inline Matd euclidean_to_polar(const Matd& e, double r, double theta) {
    const int n = e.n;
    Matd j = Matd::identity(n);
    j(0, 0) = std::cos(theta);
    j(1, 0) = std::sin(theta);
    j(0, 1) = -r * std::sin(theta);
    j(1, 1) = r * std::cos(theta);
    return transpose(j) * e * j;
}

namespace detail {

inline void require_polar(const ChartSpec& chart, const char* who) {
    chart.validate();
    if (chart.style == ChartStyle::cartesian) throw std::invalid_argument(std::string(who) + ": needs a polar chart");
    double r_lo = chart.style == ChartStyle::log_polar ? std::exp(chart.axes[0].coord(0)) : chart.axes[0].coord(0);
    if (!(r_lo > 0.0)) throw std::invalid_argument(std::string(who) + ": r = 0 must not be sampled");
}

inline double chart_r_max(const ChartSpec& chart) {
    const Axis& a = chart.axes[0];
    double last = a.coord(a.samples - 1);
    return chart.style == ChartStyle::log_polar ? std::exp(last) : last;
}

}  // namespace detail

/// dr^2 + (beta+1)^2 r^2 dtheta^2 on a 2D polar chart.
inline MetricField cone_metric_2d(const ConeSpec& spec, const ChartSpec& chart) {
    spec.validate();
    detail::require_polar(chart, "cone_metric_2d");
    if (chart.dim() != 2) throw std::invalid_argument("cone_metric_2d: chart must be two-dimensional");
    const double b = (spec.beta + 1.0) * (spec.beta + 1.0);
    return sample_polar_metric(chart, [b](const auto& x) {
        Matd m(2);
        m(0, 0) = 1.0;
        m(1, 1) = b * x[0] * x[0];
        return m;
    });
}

/// Edge-model components at (r, theta, y): dr^2 + B r^2 (dtheta + sigma)^2 + omega + r^{1+eta} h.
inline Matd edge_components(const EdgeData& d, const std::array<double, kMaxDim>& x) {
    const int n = d.n, m = d.link_dim();
    const double r = x[0];
    LinkPoint y = link_point(x, m);
    double beta = d.beta(y);
    if (!(beta > -1.0)) throw std::invalid_argument("edge data: beta <= -1 at a link sample");
    double b = (beta + 1.0) * (beta + 1.0);
    LinkPoint s = d.sigma(y);
    Matd g(n);
    g(0, 0) = 1.0;
    g(1, 1) = b * r * r;
    for (int i = 0; i < m; ++i) {
        g(1, 2 + i) = g(2 + i, 1) = b * r * r * s[i];
        for (int j = 0; j < m; ++j) g(2 + i, 2 + j) = d.omega(i, j) + b * r * r * s[i] * s[j];
    }
    if (d.h) {
        Matd h = d.h(x);
        double w = std::pow(r, 1.0 + d.eta);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) g(i, j) += w * h(i, j);
    }
    return g;
}

inline void require_tube(const EdgeData& d, const ChartSpec& chart, const char* who) {
    double r_max = detail::chart_r_max(chart);
    double rho_min = min_over_link(d, d.rho);
    if (r_max > rho_min * (1.0 + 1e-12))
        throw std::invalid_argument(std::string(who) + ": radial range " + std::to_string(r_max) +
                                    " exceeds tube radius " + std::to_string(rho_min));
}

inline MetricField edge_metric(const EdgeData& data, const ChartSpec& chart) {
    data.validate();
    detail::require_polar(chart, "edge_metric");
    if (chart.dim() != data.n) throw std::invalid_argument("edge_metric: chart dimension differs from edge data");
    require_tube(data, chart, "edge_metric");
    return sample_polar_metric(chart, [&data](const auto& x) { return edge_components(data, x); });
}

/// f^2 dr^2 + r^2 (dtheta + sigma)^2 + omega_t with f sampled on the chart.
inline MetricField simple_form_metric(const ScalarField& f, const LinkFormFn& sigma, const Matd& omega_t,
                                      const ChartSpec& chart) {
    detail::require_polar(chart, "simple_form_metric");
    if (!(f.chart == chart)) throw std::invalid_argument("simple_form_metric: f sampled on a different chart");
    const int n = chart.dim(), m = n - 2;
    if (omega_t.n != m && m > 0) throw std::invalid_argument("simple_form_metric: omega has the wrong dimension");
    Grid grid(chart);
    TensorField t(chart);
    for (std::size_t p = 0; p < grid.size(); ++p) {
        if (!(f[p] > 0.0)) throw std::domain_error("simple_form_metric: f <= 0 at " + grid.describe(p));
        auto x = grid.coords(p);
        double r = grid.radius(p);
        LinkPoint s = sigma ? sigma(link_point(x, m)) : LinkPoint{0.0, 0.0};
        Matd g(n);
        g(0, 0) = f[p] * f[p];
        g(1, 1) = r * r;
        for (int i = 0; i < m; ++i) {
            g(1, 2 + i) = g(2 + i, 1) = r * r * s[i];
            for (int j = 0; j < m; ++j) g(2 + i, 2 + j) = omega_t(i, j) + r * r * s[i] * s[j];
        }
        if (chart.style == ChartStyle::log_polar)
            for (int j = 0; j < n; ++j) {
                g(0, j) *= r;
                g(j, 0) *= r;
            }
        t.put(p, g);
    }
    return MetricField(t);
}

struct StructuralItem {
    std::string name;
    double value = 0.0;
    double limit = 0.0;
    bool lower_bound = false;
    bool pass = false;
};

struct StructuralReport {
    std::vector<StructuralItem> items;
    bool pass() const {
        for (const auto& i : items)
            if (!i.pass) return false;
        return true;
    }
    const StructuralItem& item(const std::string& name) const {
        for (const auto& i : items)
            if (i.name == name) return i;
        throw std::out_of_range("structural report has no item " + name);
    }
};

namespace detail {

// Sup over link samples of first and second centred differences of a link function.
struct LinkDerivs {
    double d1 = 0.0, d2 = 0.0, c0 = 0.0;
};

inline LinkDerivs link_derivatives(const EdgeData& d, const LinkFn& f, const LinkFn& weight = {}) {
    LinkDerivs out;
    const int m = d.link_dim();
    const double eps = 1e-4;
    for (const auto& y : link_samples(d, 64)) {
        double w = weight ? weight(y) : 1.0;
        out.c0 = std::max(out.c0, std::abs(f(y)));
        for (int i = 0; i < m; ++i) {
            LinkPoint a = y, b = y;
            a[i] += eps;
            b[i] -= eps;
            out.d1 = std::max(out.d1, std::abs(f(a) - f(b)) / (2 * eps));
            for (int j = 0; j < m; ++j) {
                LinkPoint pp = y, pm = y, mp = y, mm = y;
                pp[i] += eps, pp[j] += eps;
                pm[i] += eps, pm[j] -= eps;
                mp[i] -= eps, mp[j] += eps;
                mm[i] -= eps, mm[j] -= eps;
                double second = (f(pp) - f(pm) - f(mp) + f(mm)) / (4 * eps * eps);
                out.d2 = std::max(out.d2, w * std::abs(second));
            }
        }
    }
    return out;
}

}  // namespace detail

/// Samples each structural quantity of the smoothing hypotheses and compares it with lambda_cap.
/// Both rho second-derivative weightings (rho^{-eta} and rho^{-1-eta}) are reported.
inline StructuralReport validate_structural_bounds(const EdgeData& d, double lambda_cap) {
    StructuralReport rep;
    auto upper = [&](std::string name, double v) {
        rep.items.push_back({std::move(name), v, lambda_cap, false, std::isfinite(v) && v <= lambda_cap});
    };
    const double inf = std::numeric_limits<double>::infinity();
    double gap = d.eta - 2.0 + 4.0 / d.n;
    upper("(eta-2+4/n)^-1", gap > 0.0 ? 1.0 / gap : inf);

    double a_min = 2.0 * kPi * (min_over_link(d, d.beta) + 1.0);
    double a_max = 2.0 * kPi * (max_over_link(d, d.beta) + 1.0);
    rep.items.push_back({"inf 2pi(beta+1)", a_min, 1.0 / lambda_cap, true, a_min > 0.0 && a_min >= 1.0 / lambda_cap});
    rep.items.push_back({"sup 2pi(beta+1)", a_max, 2.0 * kPi, false, a_max <= 2.0 * kPi * (1.0 + 1e-12)});

    double det = d.link_dim() > 0 ? determinant(d.omega) : 1.0;
    upper("|(det omega)^-1|", det > 0.0 ? 1.0 / det : inf);
    double om = 0.0;
    for (int i = 0; i < d.omega.n; ++i)
        for (int j = 0; j < d.omega.n; ++j) om = std::max(om, std::abs(d.omega(i, j)));
    upper("|omega|", om);

    auto bd = detail::link_derivatives(d, d.beta);
    upper("|beta|", bd.c0);
    upper("|d beta|", bd.d1);
    upper("|d2 beta|", bd.d2);

    double sig0 = 0.0, sig1 = 0.0, sig2 = 0.0;
    for (int k = 0; k < d.link_dim(); ++k) {
        auto sd = detail::link_derivatives(d, [&, k](const LinkPoint& y) { return d.sigma(y)[k]; });
        sig0 = std::max(sig0, sd.c0);
        sig1 = std::max(sig1, sd.d1);
        sig2 = std::max(sig2, sd.d2);
    }
    upper("|sigma|", sig0);
    upper("|d sigma|", sig1);
    upper("|d2 sigma|", sig2);

    double rho_min = min_over_link(d, d.rho);
    rep.items.push_back({"inf rho", rho_min, 0.0, true, rho_min > 0.0});
    auto eta = d.eta;
    auto rd = detail::link_derivatives(d, d.rho, [&](const LinkPoint& y) { return std::pow(d.rho(y), -eta); });
    auto rd1 = detail::link_derivatives(d, d.rho, [&](const LinkPoint& y) { return std::pow(d.rho(y), -1.0 - eta); });
    upper("|rho|", rd.c0);
    upper("|d rho|", rd.d1);
    upper("|rho^-eta d2 rho|", rd.d2);
    upper("|rho^-1-eta d2 rho|", rd1.d2);

    if (d.h) {
        // Sup of the Euclidean-frame components of h over tube samples.
        double hmax = 0.0;
        for (const auto& y : link_samples(d, 8))
            for (int ir = 1; ir <= 16; ++ir)
                for (int it = 0; it < 8; ++it) {
                    double r = d.rho(y) * ir / 16.0, th = 2.0 * kPi * it / 8.0;
                    std::array<double, kMaxDim> x{r, th, y[0], y[1]};
                    Matd hp = d.h(x);
                    Matd j = Matd::identity(d.n);
                    j(0, 0) = std::cos(th);
                    j(1, 0) = std::sin(th);
                    j(0, 1) = -r * std::sin(th);
                    j(1, 1) = r * std::cos(th);
                    Matd ji = inverse(j);
                    Matd he = transpose(ji) * hp * ji;
                    for (int a = 0; a < d.n; ++a)
                        for (int b = 0; b < d.n; ++b) hmax = std::max(hmax, std::abs(he(a, b)));
                }
        upper("|h|", hmax);
    }
    return rep;
}

// ---------------------------------------------------------------------------------------------
// Skeletons: pieces are sampled polylines in R^3 (curves, so the ambient dimension is 3).

using Point3 = std::array<double, 3>;

struct SkeletonPiece {
    std::vector<Point3> points;
    bool closed = false;
    // Inner-pointing tangents at the first and last point; zero means use the end segment.
    Point3 start_tangent{0.0, 0.0, 0.0};
    Point3 end_tangent{0.0, 0.0, 0.0};
};

struct Junction {
    Point3 point{};
    std::vector<int> pieces;
    std::vector<Point3> conormals;
};

struct Skeleton {
    std::vector<SkeletonPiece> pieces;
    std::vector<Junction> junctions;  // endpoints shared by two or more pieces
    std::vector<Point3> free_ends;    // endpoints that belong to a single piece
    bool nondegenerate = true;

    /// sing S: every boundary point of a piece.
    std::vector<Point3> singular_points() const {
        std::vector<Point3> s;
        for (const auto& j : junctions) s.push_back(j.point);
        s.insert(s.end(), free_ends.begin(), free_ends.end());
        return s;
    }

    double distance_to_singular_set(const Point3& x) const {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& p : singular_points())
            d = std::min(d, std::sqrt((x[0] - p[0]) * (x[0] - p[0]) + (x[1] - p[1]) * (x[1] - p[1]) +
                                      (x[2] - p[2]) * (x[2] - p[2])));
        return d;
    }
};

namespace detail {

inline Point3 sub(const Point3& a, const Point3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline double dot(const Point3& a, const Point3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Point3& a) { return std::sqrt(dot(a, a)); }

// Closest distance between segments [p0,p1] and [q0,q1] along with the parameters attaining it.
inline double segment_distance(const Point3& p0, const Point3& p1, const Point3& q0, const Point3& q1, double& s,
                               double& t) {
    Point3 u = sub(p1, p0), v = sub(q1, q0), w = sub(p0, q0);
    double a = dot(u, u), b = dot(u, v), c = dot(v, v), d = dot(u, w), e = dot(v, w);
    double den = a * c - b * b;
    s = den > 1e-14 * a * c ? std::clamp((b * e - c * d) / den, 0.0, 1.0) : 0.0;
    t = c > 0 ? std::clamp((b * s + e) / c, 0.0, 1.0) : 0.0;
    s = a > 0 ? std::clamp((b * t - d) / a, 0.0, 1.0) : 0.0;
    Point3 diff{w[0] + s * u[0] - t * v[0], w[1] + s * u[1] - t * v[1], w[2] + s * u[2] - t * v[2]};
    return norm(diff);
}

}  // namespace detail

/// Builds the skeleton descriptor: validates that pieces meet only at endpoints, collects
/// junctions and free ends, and flags coincident inner-pointing conormals at junctions.
inline Skeleton build_skeleton(std::vector<SkeletonPiece> pieces, double tol = 1e-9) {
    using namespace detail;
    Skeleton sk;
    for (const auto& p : pieces)
        if (p.points.size() < 2) throw std::invalid_argument("build_skeleton: a piece needs at least two points");

    auto is_endpoint = [&](int piece, std::size_t seg, double s) {
        const auto& pc = pieces[piece];
        if (pc.closed) return false;
        std::size_t nseg = pc.points.size() - 1;
        return (seg == 0 && s <= 1e-12) || (seg == nseg - 1 && s >= 1.0 - 1e-12);
    };
    for (std::size_t a = 0; a < pieces.size(); ++a)
        for (std::size_t b = a + 1; b < pieces.size(); ++b) {
            const auto& A = pieces[a].points;
            const auto& B = pieces[b].points;
            std::size_t na = A.size() - 1 + (pieces[a].closed ? 1 : 0);
            std::size_t nb = B.size() - 1 + (pieces[b].closed ? 1 : 0);
            for (std::size_t i = 0; i < na; ++i)
                for (std::size_t j = 0; j < nb; ++j) {
                    double s, t;
                    double dist = segment_distance(A[i], A[(i + 1) % A.size()], B[j], B[(j + 1) % B.size()], s, t);
                    if (dist > tol) continue;
                    if (!is_endpoint(static_cast<int>(a), i, s) || !is_endpoint(static_cast<int>(b), j, t))
                        throw std::invalid_argument("build_skeleton: pieces " + std::to_string(a) + " and " +
                                                    std::to_string(b) + " meet at an interior point");
                }
        }

    for (std::size_t k = 0; k < pieces.size(); ++k) {
        const auto& pc = pieces[k];
        if (pc.closed) continue;
        const auto& P = pc.points;
        Point3 t0 = norm(pc.start_tangent) > 0 ? pc.start_tangent : sub(P[1], P[0]);
        Point3 t1 = norm(pc.end_tangent) > 0 ? pc.end_tangent : sub(P[P.size() - 2], P.back());
        std::array<std::pair<Point3, Point3>, 2> ends = {std::pair{P.front(), t0}, std::pair{P.back(), t1}};
        for (auto& [pt, dir] : ends) {
            double len = norm(dir);
            Point3 cn{dir[0] / len, dir[1] / len, dir[2] / len};
            bool found = false;
            for (auto& j : sk.junctions)
                if (norm(sub(j.point, pt)) <= tol) {
                    j.pieces.push_back(static_cast<int>(k));
                    j.conormals.push_back(cn);
                    found = true;
                    break;
                }
            if (!found) sk.junctions.push_back(Junction{pt, {static_cast<int>(k)}, {cn}});
        }
    }
    std::vector<Junction> shared;
    for (auto& j : sk.junctions) {
        if (j.pieces.size() < 2) {
            sk.free_ends.push_back(j.point);
            continue;
        }
        for (std::size_t a = 0; a < j.conormals.size(); ++a)
            for (std::size_t b = a + 1; b < j.conormals.size(); ++b)
                if (dot(j.conormals[a], j.conormals[b]) > 1.0 - 1e-9) sk.nondegenerate = false;
        shared.push_back(std::move(j));
    }
    sk.junctions = std::move(shared);
    sk.pieces = std::move(pieces);
    return sk;
}

}  // namespace curvlab
