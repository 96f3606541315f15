#pragma once

#include <cstddef>
#include <vector>

namespace abst {

using Vec = std::vector<double>;

// Dense row-major matrix, just enough for this project.
struct Matrix {
    int rows = 0;
    int cols = 0;
    Vec a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
    const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }
    double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }
};

Vec matvec(const Matrix& m, const Vec& x);       // m * x
Vec matvec_t(const Matrix& m, const Vec& x);     // m^T * x

// In-place lower-triangular Cholesky of a symmetric positive definite matrix.
// Throws FactorizationError when a pivot is not strictly positive.
Matrix cholesky(const Matrix& a);
// Solve L L^T x = b given the Cholesky factor.
Vec cholesky_solve(const Matrix& l, const Vec& b);

// Largest singular value via cyclic Jacobi on the Gram matrix.
double spectral_norm(const Matrix& m);

double norm2(const Vec& v);

} // namespace abst
