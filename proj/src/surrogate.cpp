#include "abst/surrogate.hpp"

#include <cmath>

#include "abst/errors.hpp"
#include "abst/kernels.hpp"

namespace abst {

double kernel_eval(const KernelConfig& k, const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw DimensionError("kernel_eval: input size mismatch");
    switch (k.kind) {
        case KernelKind::Linear:
            return kernels::dot(a.data(), b.data(), a.size());
        case KernelKind::Gaussian:
            return std::exp(-k.gamma * kernels::sqdist(a.data(), b.data(), a.size()));
    }
    return 0.0;
}

Matrix gram(const KernelConfig& k, const std::vector<Vec>& xs) {
    if (xs.empty()) throw DimensionError("gram: empty input");
    if (k.kind == KernelKind::Gaussian && !(k.gamma > 0.0))
        throw RangeError("gram: gaussian bandwidth must be positive");
    const int n = static_cast<int>(xs.size());
    for (const auto& x : xs) {
        if (x.size() != xs[0].size()) throw DimensionError("gram: ragged inputs");
        for (double v : x)
            if (!std::isfinite(v)) throw RangeError("gram: non-finite feature");
    }
    Matrix g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) g(i, j) = g(j, i) = kernel_eval(k, xs[i], xs[j]);
    return g;
}

TrainedSurrogate fit_ridge(const KernelConfig& k, const std::vector<Vec>& xs,
                           const Matrix& psi, double lambda) {
    if (!(lambda > 0.0)) throw RangeError("fit_ridge: lambda must be positive");
    if (psi.rows != static_cast<int>(xs.size()))
        throw DimensionError("fit_ridge: feature rows do not match inputs");
    Matrix g = gram(k, xs);
    for (int i = 0; i < g.rows; ++i) g(i, i) += lambda;
    TrainedSurrogate m;
    m.kernel = k;
    m.lambda = lambda;
    m.x_train = xs;
    m.psi_train = psi;
    m.chol = cholesky(g);
    return m;
}

Vec alpha(const TrainedSurrogate& m, const Vec& x) {
    const int n = static_cast<int>(m.x_train.size());
    Vec kx(n);
    for (int i = 0; i < n; ++i) kx[i] = kernel_eval(m.kernel, x, m.x_train[i]);
    return cholesky_solve(m.chol, kx);
}

Vec g_hat(const TrainedSurrogate& m, const Vec& x) {
    const Vec a = alpha(m, x);
    return matvec_t(m.psi_train, a);
}

double surrogate_mse(const TrainedSurrogate& m, const std::vector<Vec>& xs, const Matrix& psi) {
    if (psi.rows != static_cast<int>(xs.size())) throw DimensionError("surrogate_mse: size mismatch");
    double total = 0.0;
    for (int i = 0; i < psi.rows; ++i) {
        const Vec g = g_hat(m, xs[i]);
        double s = 0.0;
        for (int j = 0; j < psi.cols; ++j) {
            const double d = g[j] - psi(i, j);
            s += d * d;
        }
        total += s;
    }
    return total / static_cast<double>(psi.rows);
}

} // namespace abst
