#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "curvlab/linalg.hpp"

namespace curvlab {

/// Boundary treatment of one chart axis.
/// periodic: nodes lower + i h, i < N, endpoint identified.
/// clamped: nodes lower + i h, i <= N - 1, both endpoints sampled.
/// reflecting: cell-centred nodes lower + (i + 1/2) h, zero flux across both end faces.
enum class Boundary { periodic, clamped, reflecting };

/// Coordinate style. polar: axes (r, theta, y...), theta periodic, r > 0.
/// log_polar: axes (t, theta, y...) with r = exp(t).
enum class ChartStyle { cartesian, polar, log_polar };

struct Axis {
    double lower = 0.0;
    double upper = 1.0;
    int samples = 5;
    Boundary boundary = Boundary::periodic;

    double spacing() const {
        return boundary == Boundary::clamped ? (upper - lower) / (samples - 1)
                                             : (upper - lower) / samples;
    }
    double coord(int i) const {
        double h = spacing();
        return boundary == Boundary::reflecting ? lower + (i + 0.5) * h : lower + i * h;
    }
    bool operator==(const Axis&) const = default;
};

struct ChartSpec {
    std::vector<Axis> axes;
    ChartStyle style = ChartStyle::cartesian;

    int dim() const { return static_cast<int>(axes.size()); }
    std::size_t node_count() const {
        std::size_t c = 1;
        for (const auto& a : axes) c *= static_cast<std::size_t>(a.samples);
        return c;
    }
    bool operator==(const ChartSpec&) const = default;

    void validate() const {
        if (dim() < 2 || dim() > kMaxDim) throw std::invalid_argument("chart dimension must be in [2, 4]");
        for (int k = 0; k < dim(); ++k) {
            const Axis& a = axes[k];
            if (a.samples < 5) throw std::invalid_argument("chart axis " + std::to_string(k) + " has fewer than 5 samples");
            if (!(a.upper > a.lower)) throw std::invalid_argument("chart axis " + std::to_string(k) + " has empty extent");
        }
        if (style != ChartStyle::cartesian) {
            if (axes[1].boundary != Boundary::periodic) throw std::invalid_argument("polar chart: theta axis must be periodic");
            if (std::abs(axes[1].upper - axes[1].lower - 2.0 * kPi) > 1e-12)
                throw std::invalid_argument("polar chart: theta axis must span 2 pi");
            if (axes[0].boundary == Boundary::periodic) throw std::invalid_argument("polar chart: radial axis cannot be periodic");
            if (style == ChartStyle::polar && !(axes[0].lower >= 0.0 && axes[0].coord(0) > 0.0))
                throw std::invalid_argument("polar chart: r = 0 must not be sampled");
        }
    }
    bool closed() const {
        for (const auto& a : axes)
            if (a.boundary == Boundary::clamped) return false;
        return true;
    }
};

/// Node index arithmetic for a chart. Axis 0 varies slowest.
class Grid {
public:
    explicit Grid(const ChartSpec& c) : chart_(c) {
        chart_.validate();
        int n = chart_.dim();
        stride_.assign(n, 1);
        for (int k = n - 2; k >= 0; --k) stride_[k] = stride_[k + 1] * chart_.axes[k + 1].samples;
        count_ = chart_.node_count();
    }
    const ChartSpec& chart() const { return chart_; }
    int dim() const { return chart_.dim(); }
    std::size_t size() const { return count_; }
    int samples(int k) const { return chart_.axes[k].samples; }
    double h(int k) const { return chart_.axes[k].spacing(); }

    int index(std::size_t node, int k) const { return static_cast<int>((node / stride_[k]) % chart_.axes[k].samples); }

    /// Neighbour at offset d along axis k, or -1 if it leaves a non-periodic axis.
    long neighbor(std::size_t node, int k, int d) const {
        int i = index(node, k);
        int n = chart_.axes[k].samples;
        int j = i + d;
        if (chart_.axes[k].boundary == Boundary::periodic) {
            j = ((j % n) + n) % n;
        } else if (j < 0 || j >= n) {
            return -1;
        }
        return static_cast<long>(node) + static_cast<long>(j - i) * static_cast<long>(stride_[k]);
    }

    /// Distance (in nodes) to the nearest end of a non-periodic axis; large for periodic axes.
    int margin(std::size_t node) const {
        int m = std::numeric_limits<int>::max();
        for (int k = 0; k < dim(); ++k) {
            if (chart_.axes[k].boundary == Boundary::periodic) continue;
            int i = index(node, k);
            m = std::min(m, std::min(i, chart_.axes[k].samples - 1 - i));
        }
        return m;
    }

    double coord(std::size_t node, int k) const { return chart_.axes[k].coord(index(node, k)); }

    std::array<double, kMaxDim> coords(std::size_t node) const {
        std::array<double, kMaxDim> x{};
        for (int k = 0; k < dim(); ++k) x[k] = coord(node, k);
        return x;
    }

    /// Polar radius at a node for polar charts.
    double radius(std::size_t node) const {
        if (chart_.style == ChartStyle::polar) return coord(node, 0);
        if (chart_.style == ChartStyle::log_polar) return std::exp(coord(node, 0));
        throw std::logic_error("radius requested on a cartesian chart");
    }

    std::string describe(std::size_t node) const {
        std::ostringstream os;
        os << "node " << node << " (";
        for (int k = 0; k < dim(); ++k) os << (k ? ", " : "") << index(node, k);
        os << ") at (";
        for (int k = 0; k < dim(); ++k) os << (k ? ", " : "") << coord(node, k);
        os << ")";
        return os.str();
    }

    /// Trapezoidal coordinate weight of the node (product of per-axis weights).
    double cell_weight(std::size_t node) const {
        double w = 1.0;
        for (int k = 0; k < dim(); ++k) {
            const Axis& a = chart_.axes[k];
            double hk = a.spacing();
            if (a.boundary == Boundary::clamped) {
                int i = index(node, k);
                if (i == 0 || i == a.samples - 1) hk *= 0.5;
            }
            w *= hk;
        }
        return w;
    }

private:
    ChartSpec chart_;
    std::vector<std::size_t> stride_;
    std::size_t count_ = 0;
};

inline int sym_size(int n) { return n * (n + 1) / 2; }
inline int sym_index(int n, int i, int j) {
    if (i > j) std::swap(i, j);
    return i * n - i * (i - 1) / 2 + (j - i);
}

struct ScalarField {
    ChartSpec chart;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const ChartSpec& c, double fill = 0.0) : chart(c), values(c.node_count(), fill) {}
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

struct Region {
    ChartSpec chart;
    std::vector<char> mask;

    Region() = default;
    explicit Region(const ChartSpec& c, bool fill = true) : chart(c), mask(c.node_count(), fill ? 1 : 0) {}
    bool operator[](std::size_t i) const { return mask[i] != 0; }
    std::size_t count() const {
        std::size_t c = 0;
        for (char m : mask) c += m ? 1 : 0;
        return c;
    }
};

inline Region region_and(const Region& a, const Region& b) {
    if (!(a.chart == b.chart)) throw std::invalid_argument("region charts differ");
    Region r(a.chart, false);
    for (std::size_t i = 0; i < r.mask.size(); ++i) r.mask[i] = (a.mask[i] && b.mask[i]) ? 1 : 0;
    return r;
}

/// Symmetric covariant 2-tensor per node, packed upper triangle.
struct TensorField {
    ChartSpec chart;
    int n = 0;
    std::vector<double> comps;

    TensorField() = default;
    explicit TensorField(const ChartSpec& c) : chart(c), n(c.dim()), comps(c.node_count() * sym_size(c.dim()), 0.0) {}

    double get(std::size_t node, int i, int j) const { return comps[node * sym_size(n) + sym_index(n, i, j)]; }
    void set(std::size_t node, int i, int j, double v) { comps[node * sym_size(n) + sym_index(n, i, j)] = v; }
    Matd at(std::size_t node) const {
        Matd m(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = get(node, i, j);
        return m;
    }
    void put(std::size_t node, const Matd& m) {
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) set(node, i, j, 0.5 * (m(i, j) + m(j, i)));
    }
};

/// Sampled Riemannian metric; pointwise symmetric positive definite.
struct MetricField {
    TensorField g;

    MetricField() = default;
    explicit MetricField(TensorField t) : g(std::move(t)) { validate(); }

    const ChartSpec& chart() const { return g.chart; }
    int dim() const { return g.n; }
    Matd at(std::size_t node) const { return g.at(node); }
    std::size_t size() const { return g.chart.node_count(); }

    void validate() const {
        Grid grid(g.chart);
        Matd l;
        for (std::size_t node = 0; node < grid.size(); ++node) {
            Matd m = g.at(node);
            for (int i = 0; i < g.n; ++i)
                for (int j = 0; j < g.n; ++j)
                    if (!std::isfinite(m(i, j))) throw std::domain_error("metric has non-finite entry at " + grid.describe(node));
            if (!cholesky(m, l)) throw std::domain_error("metric not positive definite at " + grid.describe(node));
        }
    }
};

using PointFn = std::function<double(const std::array<double, kMaxDim>&)>;
using TensorFn = std::function<Matd(const std::array<double, kMaxDim>&)>;

inline ScalarField sample_scalar(const ChartSpec& chart, const PointFn& f) {
    Grid grid(chart);
    ScalarField s(chart);
    for (std::size_t i = 0; i < grid.size(); ++i) s[i] = f(grid.coords(i));
    return s;
}

/// Samples a tensor given in chart coordinates.
inline TensorField sample_tensor(const ChartSpec& chart, const TensorFn& f) {
    Grid grid(chart);
    TensorField t(chart);
    for (std::size_t i = 0; i < grid.size(); ++i) t.put(i, f(grid.coords(i)));
    return t;
}

inline MetricField sample_metric(const ChartSpec& chart, const TensorFn& f) {
    return MetricField(sample_tensor(chart, f));
}

/// For polar-style charts: samples a tensor whose components are given in (r, theta, y...)
/// coordinates, converting to (t = log r, theta, y...) when the chart is log-polar.
/// The callable receives (r, theta, y...).
inline TensorField sample_polar_tensor(const ChartSpec& chart, const TensorFn& f) {
    if (chart.style == ChartStyle::cartesian) throw std::invalid_argument("polar sampling on a cartesian chart");
    Grid grid(chart);
    TensorField t(chart);
    const int n = chart.dim();
    for (std::size_t node = 0; node < grid.size(); ++node) {
        auto x = grid.coords(node);
        double r = grid.radius(node);
        x[0] = r;
        Matd m = f(x);
        if (chart.style == ChartStyle::log_polar) {
            for (int j = 0; j < n; ++j) {
                m(0, j) *= r;
                m(j, 0) *= r;
            }
        }
        t.put(node, m);
    }
    return t;
}

inline MetricField sample_polar_metric(const ChartSpec& chart, const TensorFn& f) {
    return MetricField(sample_polar_tensor(chart, f));
}

/// Scalar sampled as a function of (r, theta, y...) on a polar-style chart.
inline ScalarField sample_polar_scalar(const ChartSpec& chart, const PointFn& f) {
    Grid grid(chart);
    ScalarField s(chart);
    for (std::size_t node = 0; node < grid.size(); ++node) {
        auto x = grid.coords(node);
        x[0] = grid.radius(node);
        s[node] = f(x);
    }
    return s;
}

/// Nodes with at least `m` nodes of margin on every non-periodic axis.
inline Region interior_region(const ChartSpec& chart, int m) {
    Grid grid(chart);
    Region r(chart, false);
    for (std::size_t i = 0; i < grid.size(); ++i) r.mask[i] = grid.margin(i) >= m ? 1 : 0;
    return r;
}

inline Region polar_band(const ChartSpec& chart, double r_lo, double r_hi) {
    Grid grid(chart);
    Region reg(chart, false);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double r = grid.radius(i);
        reg.mask[i] = (r >= r_lo && r <= r_hi) ? 1 : 0;
    }
    return reg;
}

/// Convenience constructors.
inline ChartSpec torus_chart(int n, int samples, double length = 1.0) {
    ChartSpec c;
    c.axes.assign(n, Axis{0.0, length, samples, Boundary::periodic});
    return c;
}

inline ChartSpec cube_chart(int n, int samples, double lower, double upper) {
    ChartSpec c;
    c.axes.assign(n, Axis{lower, upper, samples, Boundary::clamped});
    return c;
}

/// Polar-product chart (r or log r, theta, y...) with periodic y axes of the given lengths.
inline ChartSpec polar_chart(double r_lo, double r_hi, int nr, int ntheta, const std::vector<double>& y_lengths,
                             int ny, bool logarithmic, Boundary radial = Boundary::clamped) {
    ChartSpec c;
    c.style = logarithmic ? ChartStyle::log_polar : ChartStyle::polar;
    if (logarithmic)
        c.axes.push_back(Axis{std::log(r_lo), std::log(r_hi), nr, radial});
    else
        c.axes.push_back(Axis{r_lo, r_hi, nr, radial});
    c.axes.push_back(Axis{0.0, 2.0 * kPi, ntheta, Boundary::periodic});
    for (double L : y_lengths) c.axes.push_back(Axis{0.0, L, ny, Boundary::periodic});
    return c;
}

}  // namespace curvlab
