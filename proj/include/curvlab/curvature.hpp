#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "curvlab/grid.hpp"
#include "curvlab/linalg.hpp"

namespace curvlab {

/// A stencil output together with the nodes where it was computed.
struct CurvatureField {
    ScalarField value;
    Region computed;
};

struct RicciField {
    TensorField value;
    Region computed;
};

namespace detail {

template <class T>
struct CurvatureKernelOutput {
    std::vector<Mat<T>> ricci;
    std::vector<T> scalar;
    std::vector<char> valid;
};

// Nested centred differences: Christoffel symbols from first differences of g,
// Ricci from first differences of the Christoffel symbols.
template <class T, class MetricAt>
CurvatureKernelOutput<T> curvature_kernel(const Grid& grid, MetricAt&& metric_at) {
    const int n = grid.dim();
    const std::size_t N = grid.size();
    const std::size_t n3 = static_cast<std::size_t>(n) * n * n;
    std::vector<Mat<T>> g(N), ginv(N);
    for (std::size_t p = 0; p < N; ++p) {
        g[p] = metric_at(p);
        ginv[p] = inverse(g[p]);
    }
    std::vector<T> gamma(N * n3, T(0.0));
    std::vector<char> has_gamma(N, 0);
    auto G = [&](std::size_t p, int k, int i, int j) -> T& { return gamma[p * n3 + (k * n + i) * n + j]; };

    for (std::size_t p = 0; p < N; ++p) {
        if (grid.margin(p) < 1) continue;
        std::array<Mat<T>, kMaxDim> dg;
        for (int k = 0; k < n; ++k) {
            long a = grid.neighbor(p, k, 1), b = grid.neighbor(p, k, -1);
            double inv2h = 1.0 / (2.0 * grid.h(k));
            dg[k] = Mat<T>(n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) dg[k](i, j) = (g[a](i, j) - g[b](i, j)) * T(inv2h);
        }
        // Gamma_{l,ij} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) {
                    T s(0.0);
                    for (int l = 0; l < n; ++l)
                        s += ginv[p](k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
                    G(p, k, i, j) = T(0.5) * s;
                    G(p, k, j, i) = G(p, k, i, j);
                }
        has_gamma[p] = 1;
    }

    CurvatureKernelOutput<T> out;
    out.ricci.assign(N, Mat<T>(n));
    out.scalar.assign(N, T(0.0));
    out.valid.assign(N, 0);
    std::vector<T> dgam(n3 * n);
    for (std::size_t p = 0; p < N; ++p) {
        if (grid.margin(p) < 2) continue;
        // dgam[l][k][i][j] = d_l Gamma^k_ij
        for (int l = 0; l < n; ++l) {
            long a = grid.neighbor(p, l, 1), b = grid.neighbor(p, l, -1);
            T inv2h(1.0 / (2.0 * grid.h(l)));
            for (std::size_t c = 0; c < n3; ++c) dgam[l * n3 + c] = (gamma[a * n3 + c] - gamma[b * n3 + c]) * inv2h;
        }
        auto dG = [&](int l, int k, int i, int j) -> const T& { return dgam[l * n3 + (k * n + i) * n + j]; };
        Mat<T> ric(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                T s(0.0);
                for (int k = 0; k < n; ++k) {
                    s += dG(k, k, i, j) - dG(j, k, i, k);
                    for (int l = 0; l < n; ++l)
                        s += G(p, k, k, l) * G(p, l, i, j) - G(p, k, j, l) * G(p, l, i, k);
                }
                ric(i, j) = s;
                ric(j, i) = s;
            }
        T R(0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) R += ginv[p](i, j) * ric(i, j);
        out.ricci[p] = ric;
        out.scalar[p] = R;
        out.valid[p] = 1;
    }
    return out;
}

}  // namespace detail

/// Scalar curvature by centred differences of Christoffel symbols; computed where every
/// non-periodic axis leaves at least two nodes of margin.
inline CurvatureField scalar_curvature(const MetricField& g) {
    Grid grid(g.chart());
    auto out = detail::curvature_kernel<double>(grid, [&](std::size_t p) { return g.at(p); });
    CurvatureField f{ScalarField(g.chart()), Region(g.chart(), false)};
    for (std::size_t p = 0; p < grid.size(); ++p) {
        f.value[p] = out.scalar[p];
        f.computed.mask[p] = out.valid[p];
    }
    return f;
}

inline RicciField ricci(const MetricField& g) {
    Grid grid(g.chart());
    auto out = detail::curvature_kernel<double>(grid, [&](std::size_t p) { return g.at(p); });
    RicciField f{TensorField(g.chart()), Region(g.chart(), false)};
    for (std::size_t p = 0; p < grid.size(); ++p) {
        if (!out.valid[p]) continue;
        f.value.put(p, out.ricci[p]);
        f.computed.mask[p] = 1;
    }
    return f;
}

namespace detail {
inline void require_interior_support(const Grid& grid, const TensorField& h, int margin) {
    const int n = h.n;
    for (std::size_t p = 0; p < grid.size(); ++p) {
        if (grid.margin(p) >= margin) continue;
        for (int c = 0; c < sym_size(n); ++c)
            if (h.comps[p * sym_size(n) + c] != 0.0)
                throw std::invalid_argument("perturbation support touches a non-periodic boundary at " + grid.describe(p));
    }
}
}  // namespace detail

/// Linearized scalar curvature dR(g){h}. Evaluated as the exact forward-mode derivative of the
/// discrete curvature stencil, i.e. the Palatini form of -Lap tr h + div div h - <h, Ric>.
inline CurvatureField linearized_scalar_curvature(const MetricField& g, const TensorField& h) {
    if (!(h.chart == g.chart())) throw std::invalid_argument("metric and perturbation charts differ");
    Grid grid(g.chart());
    detail::require_interior_support(grid, h, 2);
    const int n = g.dim();
    auto out = detail::curvature_kernel<Dual>(grid, [&](std::size_t p) {
        Mat<Dual> m(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = Dual(g.g.get(p, i, j), h.get(p, i, j));
        return m;
    });
    CurvatureField f{ScalarField(g.chart()), Region(g.chart(), false)};
    for (std::size_t p = 0; p < grid.size(); ++p) {
        f.value[p] = out.scalar[p].d;
        f.computed.mask[p] = out.valid[p];
    }
    return f;
}

/// Direct trace form -Lap_g tr_g h + div_g div_g h - <h, Ric(g)>_g with nested centred stencils.
inline CurvatureField linearized_scalar_curvature_trace_form(const MetricField& g, const TensorField& h) {
    if (!(h.chart == g.chart())) throw std::invalid_argument("metric and perturbation charts differ");
    Grid grid(g.chart());
    detail::require_interior_support(grid, h, 2);
    const int n = g.dim();
    const std::size_t N = grid.size();
    auto ric = detail::curvature_kernel<double>(grid, [&](std::size_t p) { return g.at(p); });
    std::vector<Matd> gi(N);
    std::vector<double> vol(N), trh(N);
    for (std::size_t p = 0; p < N; ++p) {
        Matd gm = g.at(p);
        gi[p] = inverse(gm);
        vol[p] = std::sqrt(determinant(gm));
        double t = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) t += gi[p](i, j) * h.get(p, i, j);
        trh[p] = t;
    }
    auto D = [&](const std::vector<double>& s, std::size_t p, int k) {
        return (s[grid.neighbor(p, k, 1)] - s[grid.neighbor(p, k, -1)]) / (2.0 * grid.h(k));
    };
    // Flux vector sqrt(g) g^{jk} d_k tr h and div h (covector) at margin >= 1.
    std::vector<std::vector<double>> flux(n, std::vector<double>(N, 0.0)), divh(n, std::vector<double>(N, 0.0));
    std::vector<std::vector<double>> hc(sym_size(n), std::vector<double>(N));
    for (std::size_t p = 0; p < N; ++p)
        for (int c = 0; c < sym_size(n); ++c) hc[c][p] = h.comps[p * sym_size(n) + c];
    std::vector<std::vector<double>> gc(sym_size(n), std::vector<double>(N));
    for (std::size_t p = 0; p < N; ++p)
        for (int c = 0; c < sym_size(n); ++c) gc[c][p] = g.g.comps[p * sym_size(n) + c];
    for (std::size_t p = 0; p < N; ++p) {
        if (grid.margin(p) < 1) continue;
        std::array<double, kMaxDim> dtr{};
        for (int k = 0; k < n; ++k) dtr[k] = D(trh, p, k);
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += gi[p](j, k) * dtr[k];
            flux[j][p] = vol[p] * s;
        }
        // Christoffel symbols and covariant derivative of h.
        double dg[kMaxDim][kMaxDim][kMaxDim], dh[kMaxDim][kMaxDim][kMaxDim];
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    dg[k][i][j] = D(gc[sym_index(n, i, j)], p, k);
                    dh[k][i][j] = D(hc[sym_index(n, i, j)], p, k);
                }
        double gam[kMaxDim][kMaxDim][kMaxDim];
        for (int l = 0; l < n; ++l)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (int m = 0; m < n; ++m) s += gi[p](l, m) * (dg[i][j][m] + dg[j][i][m] - dg[m][i][j]);
                    gam[l][i][j] = 0.5 * s;
                }
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < n; ++k) {
                    double cov = dh[k][i][j];
                    for (int l = 0; l < n; ++l) cov -= gam[l][k][i] * h.get(p, l, j) + gam[l][k][j] * h.get(p, i, l);
                    s += gi[p](i, k) * cov;
                }
            divh[j][p] = s;
        }
    }
    // div div h = (1/sqrt g) d_j (sqrt g g^{jk} (div h)_k)
    std::vector<std::vector<double>> dflux(n, std::vector<double>(N, 0.0));
    for (std::size_t p = 0; p < N; ++p) {
        if (grid.margin(p) < 1) continue;
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += gi[p](j, k) * divh[k][p];
            dflux[j][p] = vol[p] * s;
        }
    }
    CurvatureField f{ScalarField(g.chart()), Region(g.chart(), false)};
    for (std::size_t p = 0; p < N; ++p) {
        if (!ric.valid[p]) continue;
        double lap = 0.0, dd = 0.0;
        for (int j = 0; j < n; ++j) {
            lap += D(flux[j], p, j);
            dd += D(dflux[j], p, j);
        }
        lap /= vol[p];
        dd /= vol[p];
        double hr = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) hr += gi[p](i, a) * gi[p](j, b) * h.get(p, a, b) * ric.ricci[p](i, j);
        f.value[p] = -lap + dd - hr;
        f.computed.mask[p] = 1;
    }
    return f;
}

/// Pointwise <A, B>_g for symmetric 2-tensors.
inline ScalarField tensor_inner(const MetricField& g, const TensorField& a, const TensorField& b) {
    Grid grid(g.chart());
    const int n = g.dim();
    ScalarField out(g.chart());
    for (std::size_t p = 0; p < grid.size(); ++p) {
        Matd gi = inverse(g.at(p));
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) s += gi(i, k) * gi(j, l) * a.get(p, k, l) * b.get(p, i, j);
        out[p] = s;
    }
    return out;
}

/// Metric-weighted flux discretization of the Laplace-Beltrami operator.
/// apply() returns sqrt(g) * Lap_g u; the map is symmetric on periodic and reflecting charts.
class FluxLaplacian {
public:
    explicit FluxLaplacian(const MetricField& g) : grid_(g.chart()) {
        const int n = grid_.dim();
        const std::size_t N = grid_.size();
        vol_.resize(N);
        coef_.assign(static_cast<std::size_t>(n) * n, std::vector<double>(N, 0.0));
        for (std::size_t p = 0; p < N; ++p) {
            Matd m = g.at(p);
            Matd gi = inverse(m);
            vol_[p] = std::sqrt(determinant(m));
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) coef_[k * n + l][p] = vol_[p] * gi(k, l);
        }
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
                if (k == l) continue;
                for (std::size_t p = 0; p < N; ++p)
                    if (coef_[k * n + l][p] != 0.0) {
                        has_cross_ = true;
                        if (grid_.chart().axes[k].boundary == Boundary::reflecting ||
                            grid_.chart().axes[l].boundary == Boundary::reflecting)
                            throw std::invalid_argument("cross metric terms along a reflecting axis are not supported");
                    }
            }
    }

    const Grid& grid() const { return grid_; }
    const std::vector<double>& volume_density() const { return vol_; }

    /// (sqrt g Lap u) at node p. Missing neighbours across reflecting ends carry zero flux.
    double apply_at(const std::vector<double>& u, std::size_t p) const {
        const int n = grid_.dim();
        double s = 0.0;
        for (int k = 0; k < n; ++k) {
            const auto& c = coef_[k * n + k];
            double h2 = grid_.h(k) * grid_.h(k);
            long a = grid_.neighbor(p, k, 1), b = grid_.neighbor(p, k, -1);
            if (a >= 0) s += 0.5 * (c[p] + c[a]) * (u[a] - u[p]) / h2;
            if (b >= 0) s -= 0.5 * (c[p] + c[b]) * (u[p] - u[b]) / h2;
        }
        if (has_cross_) {
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    if (k == l) continue;
                    const auto& c = coef_[k * n + l];
                    long a = grid_.neighbor(p, k, 1), b = grid_.neighbor(p, k, -1);
                    double fa = a >= 0 ? cross_flux(u, c, static_cast<std::size_t>(a), l) : 0.0;
                    double fb = b >= 0 ? cross_flux(u, c, static_cast<std::size_t>(b), l) : 0.0;
                    if ((a < 0 || b < 0) && (c[p] != 0.0)) throw std::domain_error("cross stencil leaves the chart at " + grid_.describe(p));
                    s += (fa - fb) / (2.0 * grid_.h(k));
                }
        }
        return s;
    }

    /// Coefficient of u[p] in apply_at(u, p); cross terms do not contribute.
    double diagonal_at(std::size_t p) const {
        const int n = grid_.dim();
        double s = 0.0;
        for (int k = 0; k < n; ++k) {
            const auto& c = coef_[k * n + k];
            double h2 = grid_.h(k) * grid_.h(k);
            long a = grid_.neighbor(p, k, 1), b = grid_.neighbor(p, k, -1);
            if (a >= 0) s -= 0.5 * (c[p] + c[a]) / h2;
            if (b >= 0) s -= 0.5 * (c[p] + c[b]) / h2;
        }
        return s;
    }

    void apply(const std::vector<double>& u, std::vector<double>& out) const {
        out.resize(u.size());
        for (std::size_t p = 0; p < grid_.size(); ++p) out[p] = apply_at(u, p);
    }

    /// Lap_g u at nodes with margin >= 1 (all nodes on closed charts).
    CurvatureField laplacian(const ScalarField& u) const {
        CurvatureField f{ScalarField(grid_.chart()), Region(grid_.chart(), false)};
        bool clamped = false;
        for (const auto& a : grid_.chart().axes) clamped = clamped || a.boundary == Boundary::clamped;
        const int need = has_cross_ ? 2 : 1;
        for (std::size_t p = 0; p < grid_.size(); ++p) {
            if (clamped && grid_.margin(p) < need) continue;
            f.value[p] = apply_at(u.values, p) / vol_[p];
            f.computed.mask[p] = 1;
        }
        return f;
    }

private:
    double cross_flux(const std::vector<double>& u, const std::vector<double>& c, std::size_t q, int l) const {
        if (c[q] == 0.0) return 0.0;
        long a = grid_.neighbor(q, l, 1), b = grid_.neighbor(q, l, -1);
        if (a < 0 || b < 0) throw std::domain_error("cross stencil leaves the chart at " + grid_.describe(q));
        return c[q] * (u[a] - u[b]) / (2.0 * grid_.h(l));
    }

    Grid grid_;
    std::vector<double> vol_;
    std::vector<std::vector<double>> coef_;
    bool has_cross_ = false;
};

struct ConformalResult {
    MetricField metric;
    CurvatureField curvature;
};

inline double conformal_exponent(int n) { return 4.0 / (n - 2); }
inline double conformal_laplacian_coefficient(int n) { return 4.0 * (n - 1) / (n - 2); }

/// u^{4/(n-2)} g and its scalar curvature by the conformal-change formula, using the supplied R(g).
inline ConformalResult conformal_transform(const MetricField& g, const ScalarField& u, const CurvatureField& r_of_g) {
    const int n = g.dim();
    if (n < 3) throw std::invalid_argument("conformal transform formula requires n >= 3");
    if (!(u.chart == g.chart())) throw std::invalid_argument("conformal factor chart differs from metric chart");
    Grid grid(g.chart());
    for (std::size_t p = 0; p < grid.size(); ++p)
        if (!(u[p] > 0.0)) throw std::domain_error("conformal factor not positive at " + grid.describe(p));
    TensorField t(g.chart());
    const double e = conformal_exponent(n);
    for (std::size_t p = 0; p < grid.size(); ++p) t.put(p, scaled(g.at(p), std::pow(u[p], e)));
    FluxLaplacian lap(g);
    CurvatureField lu = lap.laplacian(u);
    CurvatureField out{ScalarField(g.chart()), region_and(lu.computed, r_of_g.computed)};
    const double a = conformal_laplacian_coefficient(n);
    const double pw = -(n + 2.0) / (n - 2.0);
    for (std::size_t p = 0; p < grid.size(); ++p)
        if (out.computed[p]) out.value[p] = std::pow(u[p], pw) * (-a * lu.value[p] + r_of_g.value[p] * u[p]);
    return {MetricField(std::move(t)), out};
}

inline ConformalResult conformal_transform(const MetricField& g, const ScalarField& u) {
    return conformal_transform(g, u, scalar_curvature(g));
}

}  // namespace curvlab
