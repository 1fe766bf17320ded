#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>

namespace curvlab {

inline constexpr int kMaxDim = 4;
inline constexpr double kPi = 3.14159265358979323846;

// Forward-mode dual number; used to linearize the curvature stencil exactly.
struct Dual {
    double v = 0.0;
    double d = 0.0;
    constexpr Dual() = default;
    constexpr Dual(double value) : v(value) {}
    constexpr Dual(double value, double deriv) : v(value), d(deriv) {}
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) {
    return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}
inline Dual& operator+=(Dual& a, Dual b) { return a = a + b; }
inline Dual& operator-=(Dual& a, Dual b) { return a = a - b; }
inline Dual& operator*=(Dual& a, Dual b) { return a = a * b; }
inline Dual sqrt(Dual a) {
    double s = std::sqrt(a.v);
    return {s, a.d / (2.0 * s)};
}

inline double value_of(double x) { return x; }
inline double value_of(Dual x) { return x.v; }

/// Dense square matrix of dimension n <= 4, row-major.
template <class T = double>
struct Mat {
    int n = 0;
    std::array<T, kMaxDim * kMaxDim> a{};

    Mat() = default;
    explicit Mat(int dim) : n(dim) {
        if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("matrix dimension out of range");
        a.fill(T(0.0));
    }
    static Mat identity(int dim) {
        Mat m(dim);
        for (int i = 0; i < dim; ++i) m(i, i) = T(1.0);
        return m;
    }
    T& operator()(int i, int j) { return a[i * kMaxDim + j]; }
    const T& operator()(int i, int j) const { return a[i * kMaxDim + j]; }
};

using Matd = Mat<double>;

template <class T>
Mat<T> operator*(const Mat<T>& x, const Mat<T>& y) {
    Mat<T> r(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.n; ++j) {
            T s(0.0);
            for (int k = 0; k < x.n; ++k) s += x(i, k) * y(k, j);
            r(i, j) = s;
        }
    return r;
}

template <class T>
Mat<T> operator+(const Mat<T>& x, const Mat<T>& y) {
    Mat<T> r(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.n; ++j) r(i, j) = x(i, j) + y(i, j);
    return r;
}

inline Matd scaled(const Matd& x, double s) {
    Matd r(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.n; ++j) r(i, j) = s * x(i, j);
    return r;
}

inline Matd transpose(const Matd& x) {
    Matd r(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.n; ++j) r(i, j) = x(j, i);
    return r;
}

/// Inverse by Gauss-Jordan with partial pivoting on the value part.
template <class T>
Mat<T> inverse(const Mat<T>& m) {
    const int n = m.n;
    Mat<T> w = m;
    Mat<T> inv = Mat<T>::identity(n);
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(value_of(w(r, c))) > std::abs(value_of(w(piv, c)))) piv = r;
        if (value_of(w(piv, c)) == 0.0) throw std::domain_error("singular matrix");
        if (piv != c)
            for (int k = 0; k < n; ++k) {
                std::swap(w(c, k), w(piv, k));
                std::swap(inv(c, k), inv(piv, k));
            }
        T p = w(c, c);
        for (int k = 0; k < n; ++k) {
            w(c, k) = w(c, k) / p;
            inv(c, k) = inv(c, k) / p;
        }
        for (int r = 0; r < n; ++r) {
            if (r == c) continue;
            T f = w(r, c);
            if constexpr (std::is_same_v<T, double>) {
                if (f == 0.0) continue;
            }
            for (int k = 0; k < n; ++k) {
                w(r, k) -= f * w(c, k);
                inv(r, k) -= f * inv(c, k);
            }
        }
    }
    return inv;
}

template <class T>
T determinant(const Mat<T>& m) {
    const int n = m.n;
    if (n == 1) return m(0, 0);
    if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    if (n == 3)
        return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
               m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
               m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    Mat<T> w = m;
    T det(1.0);
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(value_of(w(r, c))) > std::abs(value_of(w(piv, c)))) piv = r;
        if (value_of(w(piv, c)) == 0.0) return T(0.0);
        if (piv != c) {
            for (int k = 0; k < n; ++k) std::swap(w(c, k), w(piv, k));
            det = -det;
        }
        det *= w(c, c);
        for (int r = c + 1; r < n; ++r) {
            T f = w(r, c) / w(c, c);
            for (int k = c; k < n; ++k) w(r, k) -= f * w(c, k);
        }
    }
    return det;
}

/// Lower Cholesky factor; returns false if the matrix is not positive definite.
inline bool cholesky(const Matd& m, Matd& l) {
    const int n = m.n;
    l = Matd(n);
    for (int j = 0; j < n; ++j) {
        double s = m(j, j);
        for (int k = 0; k < j; ++k) s -= l(j, k) * l(j, k);
        if (!(s > 0.0)) return false;
        l(j, j) = std::sqrt(s);
        for (int i = j + 1; i < n; ++i) {
            double t = m(i, j);
            for (int k = 0; k < j; ++k) t -= l(i, k) * l(j, k);
            l(i, j) = t / l(j, j);
        }
    }
    return true;
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix, ascending.
inline std::array<double, kMaxDim> jacobi_eigenvalues(Matd m) {
    const int n = m.n;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (m(p, q) == 0.0) continue;
                double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int k = 0; k < n; ++k) {
                    double mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    double mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
            }
    }
    std::array<double, kMaxDim> ev{};
    for (int i = 0; i < n; ++i) ev[i] = m(i, i);
    std::sort(ev.begin(), ev.begin() + n);
    return ev;
}

/// Eigenvalues of a symmetric matrix, ascending: closed forms for n <= 3, Jacobi above.
inline std::array<double, kMaxDim> symmetric_eigenvalues(const Matd& m) {
    std::array<double, kMaxDim> ev{};
    if (m.n == 1) {
        ev[0] = m(0, 0);
    } else if (m.n == 2) {
        double tr = 0.5 * (m(0, 0) + m(1, 1));
        double d = 0.5 * (m(0, 0) - m(1, 1));
        double rad = std::hypot(d, m(0, 1));
        ev[0] = tr - rad;
        ev[1] = tr + rad;
    } else if (m.n == 3) {
        double p1 = m(0, 1) * m(0, 1) + m(0, 2) * m(0, 2) + m(1, 2) * m(1, 2);
        double q = (m(0, 0) + m(1, 1) + m(2, 2)) / 3.0;
        double p2 = (m(0, 0) - q) * (m(0, 0) - q) + (m(1, 1) - q) * (m(1, 1) - q) +
                    (m(2, 2) - q) * (m(2, 2) - q) + 2.0 * p1;
        double p = std::sqrt(p2 / 6.0);
        if (p == 0.0) {
            ev[0] = ev[1] = ev[2] = q;
            return ev;
        }
        Matd b(3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) b(i, j) = (m(i, j) - (i == j ? q : 0.0)) / p;
        double r = std::clamp(determinant(b) / 2.0, -1.0, 1.0);
        double phi = std::acos(r) / 3.0;
        double e1 = q + 2.0 * p * std::cos(phi);
        double e3 = q + 2.0 * p * std::cos(phi + 2.0 * kPi / 3.0);
        ev[0] = e3;
        ev[1] = 3.0 * q - e1 - e3;
        ev[2] = e1;
        std::sort(ev.begin(), ev.begin() + 3);
    } else {
        ev = jacobi_eigenvalues(m);
    }
    return ev;
}

/// Extreme eigenvalues of the pencil (b, a): solutions of det(b - mu a) = 0, a SPD.
inline std::pair<double, double> generalized_eigen_range(const Matd& a, const Matd& b) {
    Matd l;
    if (!cholesky(a, l)) throw std::domain_error("reference metric not positive definite");
    Matd li = inverse(l);
    Matd c = li * b * transpose(li);
    for (int i = 0; i < c.n; ++i)
        for (int j = i + 1; j < c.n; ++j) c(i, j) = c(j, i) = 0.5 * (c(i, j) + c(j, i));
    auto ev = symmetric_eigenvalues(c);
    return {ev[0], ev[c.n - 1]};
}

}  // namespace curvlab
