#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "curvlab/grid.hpp"

namespace curvlab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Volume density sqrt(det g) per node.
inline ScalarField volume_density(const MetricField& g) {
    ScalarField v(g.chart());
    for (std::size_t p = 0; p < g.size(); ++p) v[p] = std::sqrt(determinant(g.at(p)));
    return v;
}

/// (sum_w |f|^p sqrt(det g))^{1/p} with trapezoidal weights over the region; p = infinity gives the
/// masked maximum of |f|.
inline double integrate(const ScalarField& f, const MetricField& g, const Region& region, double p) {
    if (!(f.chart == g.chart()) || !(region.chart == g.chart())) throw std::invalid_argument("integrate: charts differ");
    if (!(p >= 1.0)) throw std::invalid_argument("integrate: exponent must be >= 1");
    Grid grid(g.chart());
    if (std::isinf(p)) {
        double m = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (region[i]) m = std::max(m, std::abs(f[i]));
        return m;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!region[i]) continue;
        double a = std::abs(f[i]);
        double v = p == 1.0 ? a : std::pow(a, p);
        s += v * std::sqrt(determinant(g.at(i))) * grid.cell_weight(i);
    }
    return p == 1.0 ? s : std::pow(s, 1.0 / p);
}

inline double integrate(const ScalarField& f, const MetricField& g, double p = 1.0) {
    return integrate(f, g, Region(g.chart(), true), p);
}

/// Signed integral sum_w f sqrt(det g).
inline double integrate_signed(const ScalarField& f, const MetricField& g, const Region& region) {
    if (!(f.chart == g.chart()) || !(region.chart == g.chart())) throw std::invalid_argument("integrate: charts differ");
    Grid grid(g.chart());
    double s = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (region[i]) s += f[i] * std::sqrt(determinant(g.at(i))) * grid.cell_weight(i);
    return s;
}

inline double volume(const MetricField& g, const Region& region) {
    return integrate_signed(ScalarField(g.chart(), 1.0), g, region);
}

/// Smallest c >= 1 with c^{-1} g1 <= g2 <= c g1 on the region.
inline double uniform_equivalence(const MetricField& g1, const MetricField& g2, const Region& region) {
    if (!(g1.chart() == g2.chart()) || !(region.chart == g1.chart())) throw std::invalid_argument("uniform_equivalence: charts differ");
    Grid grid(g1.chart());
    double c = 1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!region[i]) continue;
        auto [lo, hi] = generalized_eigen_range(g1.at(i), g2.at(i));
        if (!(lo > 0.0)) throw std::domain_error("uniform_equivalence: indefinite metric at " + grid.describe(i));
        c = std::max({c, hi, 1.0 / lo});
    }
    return c;
}

inline double uniform_equivalence(const MetricField& g1, const MetricField& g2) {
    return uniform_equivalence(g1, g2, Region(g1.chart(), true));
}

/// Largest absolute componentwise difference over the region.
inline double max_component_difference(const MetricField& a, const MetricField& b, const Region& region) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.g.comps.size(); ++i) {
        std::size_t node = i / sym_size(a.dim());
        if (region[node]) m = std::max(m, std::abs(a.g.comps[i] - b.g.comps[i]));
    }
    return m;
}

/// Least-squares slope of log|y| against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("loglog_slope: need matching samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double lx = std::log(x[i]), ly = std::log(std::abs(y[i]));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Extrapolates values sampled at spacings h, h/2, h/4, ... assuming error terms of orders
/// first_order, first_order + order_step, ... (an even expansion by default).
inline double richardson(const std::vector<double>& v, double ratio = 2.0, int first_order = 2, int order_step = 2) {
    std::vector<double> t = v;
    int order = first_order;
    for (std::size_t level = 1; level < v.size(); ++level) {
        double f = std::pow(ratio, order);
        std::vector<double> next;
        for (std::size_t i = 0; i + 1 < t.size(); ++i) next.push_back((f * t[i + 1] - t[i]) / (f - 1.0));
        t = next;
        order += order_step;
    }
    return t.front();
}

}  // namespace curvlab
