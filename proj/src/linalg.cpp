#include "abst/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "abst/errors.hpp"
#include "abst/kernels.hpp"

namespace abst {

Vec matvec(const Matrix& m, const Vec& x) {
    if (static_cast<int>(x.size()) != m.cols) throw DimensionError("matvec: size mismatch");
    Vec out(m.rows, 0.0);
    for (int i = 0; i < m.rows; ++i) out[i] = kernels::dot(m.row(i), x.data(), x.size());
    return out;
}

Vec matvec_t(const Matrix& m, const Vec& x) {
    if (static_cast<int>(x.size()) != m.rows) throw DimensionError("matvec_t: size mismatch");
    Vec out(m.cols, 0.0);
    for (int i = 0; i < m.rows; ++i) kernels::axpy(out.data(), x[i], m.row(i), out.size());
    return out;
}

Matrix cholesky(const Matrix& a) {
    if (a.rows != a.cols) throw DimensionError("cholesky: matrix not square");
    const int n = a.rows;
    Matrix l(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            const double s = kernels::dot(l.row(i), l.row(j), static_cast<std::size_t>(j));
            if (i == j) {
                const double d = a(i, i) - s;
                if (!(d > 0.0) || !std::isfinite(d))
                    throw FactorizationError("cholesky: matrix not positive definite");
                l(i, i) = std::sqrt(d);
            } else {
                l(i, j) = (a(i, j) - s) / l(j, j);
            }
        }
    }
    return l;
}

Vec cholesky_solve(const Matrix& l, const Vec& b) {
    const int n = l.rows;
    if (static_cast<int>(b.size()) != n) throw DimensionError("cholesky_solve: size mismatch");
    Vec y(b);
    for (int i = 0; i < n; ++i) {
        y[i] -= kernels::dot(l.row(i), y.data(), static_cast<std::size_t>(i));
        y[i] /= l(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < n; ++k) s -= l(k, i) * y[k];
        y[i] = s / l(i, i);
    }
    return y;
}

namespace {

// Cyclic Jacobi eigenvalue iteration for a symmetric matrix; returns the
// largest eigenvalue. Deterministic sweep order.
double max_eigenvalue_sym(Matrix s) {
    const int n = s.rows;
    if (n == 1) return s(0, 0);
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += s(i, j) * s(i, j);
        if (off < 1e-28 * (1.0 + std::abs(s(0, 0)))) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = s(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (s(q, q) - s(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (int k = 0; k < n; ++k) {
                    const double skp = s(k, p), skq = s(k, q);
                    s(k, p) = c * skp - sn * skq;
                    s(k, q) = sn * skp + c * skq;
                }
                for (int k = 0; k < n; ++k) {
                    const double spk = s(p, k), sqk = s(q, k);
                    s(p, k) = c * spk - sn * sqk;
                    s(q, k) = sn * spk + c * sqk;
                }
            }
        }
    }
    double mx = s(0, 0);
    for (int i = 1; i < n; ++i) mx = std::max(mx, s(i, i));
    return mx;
}

} // namespace

double spectral_norm(const Matrix& m) {
    // Gram on the smaller side.
    const bool tall = m.rows >= m.cols;
    const int n = tall ? m.cols : m.rows;
    Matrix g(n, n);
    if (tall) {
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double s = 0.0;
                for (int k = 0; k < m.rows; ++k) s += m(k, i) * m(k, j);
                g(i, j) = g(j, i) = s;
            }
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                const double s = kernels::dot(m.row(i), m.row(j), static_cast<std::size_t>(m.cols));
                g(i, j) = g(j, i) = s;
            }
    }
    const double lam = max_eigenvalue_sym(g);
    return lam > 0.0 ? std::sqrt(lam) : 0.0;
}

double norm2(const Vec& v) { return std::sqrt(kernels::dot(v.data(), v.data(), v.size())); }

} // namespace abst
