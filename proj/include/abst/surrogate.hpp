#pragma once

#include <vector>

#include "abst/linalg.hpp"

namespace abst {

enum class KernelKind { Linear, Gaussian };

struct KernelConfig {
    KernelKind kind = KernelKind::Gaussian;
    double gamma = 1.0;  // k(x, x') = exp(-gamma ||x - x'||^2)
};

double kernel_eval(const KernelConfig& k, const Vec& a, const Vec& b);

// n x n Gram matrix of the scalar kernel. The operator-valued kernel is
// identity-decomposable, so the qn x qn ridge system collapses to this one
// n x n factorization shared across the q output coordinates.
Matrix gram(const KernelConfig& k, const std::vector<Vec>& xs);

// Ridge regression onto output features: given training inputs and the rows
// psi_wa(y_i), prediction is g(x) = Psi^T alpha(x) with
// (K + lambda I) alpha(x) = k_x.
struct TrainedSurrogate {
    KernelConfig kernel;
    double lambda = 0.0;
    std::vector<Vec> x_train;
    Matrix psi_train;  // n x q
    Matrix chol;       // lower Cholesky factor of K + lambda I
};

TrainedSurrogate fit_ridge(const KernelConfig& k, const std::vector<Vec>& xs,
                           const Matrix& psi, double lambda);

Vec alpha(const TrainedSurrogate& m, const Vec& x);
Vec g_hat(const TrainedSurrogate& m, const Vec& x);

// Mean squared surrogate residual on a labeled set (sum over coordinates).
double surrogate_mse(const TrainedSurrogate& m, const std::vector<Vec>& xs, const Matrix& psi);

} // namespace abst
