#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "abst/errors.hpp"
#include "abst/rng.hpp"
#include "abst/surrogate.hpp"

using namespace abst;

namespace {

// test-side oracle: gaussian elimination with partial pivoting
Vec gauss_solve(Matrix a, Vec b) {
    const int n = a.rows;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (piv != col) {
            for (int j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
            std::swap(b[col], b[piv]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            for (int j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            b[r] -= f * b[col];
        }
    }
    Vec x(n);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int j = r + 1; j < n; ++j) s -= a(r, j) * x[j];
        x[r] = s / a(r, r);
    }
    return x;
}

// the block system over all qn coefficients, solved literally
Vec dense_ghat(const KernelConfig& k, const std::vector<Vec>& xs, const Matrix& psi, double lambda,
               const Vec& x) {
    const int n = static_cast<int>(xs.size());
    const int q = psi.cols;
    Matrix big(n * q, n * q);
    Vec rhs(n * q, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double kij = kernel_eval(k, xs[i], xs[j]);
            for (int s = 0; s < q; ++s) big(i * q + s, j * q + s) += kij;
        }
        for (int s = 0; s < q; ++s) {
            big(i * q + s, i * q + s) += lambda;
            rhs[i * q + s] = psi(i, s);
        }
    }
    const Vec beta = gauss_solve(big, rhs);
    Vec out(q, 0.0);
    for (int i = 0; i < n; ++i) {
        const double ki = kernel_eval(k, x, xs[i]);
        for (int s = 0; s < q; ++s) out[s] += ki * beta[i * q + s];
    }
    return out;
}

std::vector<Vec> random_inputs(Rng& rng, int n, int m) {
    std::vector<Vec> xs(n, Vec(m));
    for (auto& x : xs)
        for (auto& v : x) v = 2.0 * rng.uniform() - 1.0;
    return xs;
}

} // namespace

TEST_SUITE("surrogate") {

TEST_CASE("gram examples") {
    KernelConfig lin{KernelKind::Linear, 0.0};
    const Matrix g = gram(lin, {{1, 0}, {0, 1}});
    CHECK(g(0, 0) == 1.0);
    CHECK(g(0, 1) == 0.0);
    CHECK(g(1, 1) == 1.0);

    KernelConfig gauss{KernelKind::Gaussian, 0.5};
    const Matrix g2 = gram(gauss, {{0, 0}, {1, 1}});
    CHECK(g2(0, 0) == 1.0);
    CHECK(g2(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

    CHECK_THROWS_AS(gram(lin, {}), DimensionError);
    CHECK_THROWS_AS(gram(lin, {{1.0, std::nan("")}}), RangeError);
    KernelConfig bad{KernelKind::Gaussian, 0.0};
    CHECK_THROWS_AS(gram(bad, {{1.0}}), RangeError);
}

TEST_CASE("single training point closed form") {
    KernelConfig lin{KernelKind::Linear, 0.0};
    Matrix psi(1, 1);
    psi(0, 0) = 2.0;
    const double lambda = 0.5;
    const TrainedSurrogate m = fit_ridge(lin, {{1.0}}, psi, lambda);
    const Vec a = alpha(m, {1.0});
    CHECK(a[0] == doctest::Approx(1.0 / (1.0 + lambda)).epsilon(1e-12));
    CHECK(g_hat(m, {1.0})[0] == doctest::Approx(2.0 / (1.0 + lambda)).epsilon(1e-12));
}

TEST_CASE("large lambda shrinks the fit to zero") {
    Rng rng(5);
    const auto xs = random_inputs(rng, 8, 3);
    Matrix psi(8, 2);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 2; ++j) psi(i, j) = rng.uniform();
    KernelConfig gauss{KernelKind::Gaussian, 1.0};
    const TrainedSurrogate m = fit_ridge(gauss, xs, psi, 1e9);
    CHECK(norm2(g_hat(m, xs[0])) <= 1e-6);
}

TEST_CASE("orthonormal linear-kernel training set gives unit-vector weights") {
    KernelConfig lin{KernelKind::Linear, 0.0};
    const std::vector<Vec> xs{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    Matrix psi(3, 1);
    const double lambda = 0.25;
    const TrainedSurrogate m = fit_ridge(lin, xs, psi, lambda);
    const Vec a = alpha(m, xs[1]);
    CHECK(a[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(a[1] == doctest::Approx(1.0 / (1.0 + lambda)).epsilon(1e-12));
    CHECK(a[2] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("matches the dense block-system solve") {
    Rng rng(42);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 5 + rng.uniform_int(16);
        const int q = 1 + rng.uniform_int(5);
        const auto xs = random_inputs(rng, n, 4);
        Matrix psi(n, q);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < q; ++j) psi(i, j) = 2.0 * rng.uniform() - 1.0;
        KernelConfig k = trial % 2 ? KernelConfig{KernelKind::Gaussian, 0.7}
                                   : KernelConfig{KernelKind::Linear, 0.0};
        const double lambda = 0.05 + rng.uniform();
        const TrainedSurrogate m = fit_ridge(k, xs, psi, lambda);
        const Vec x = random_inputs(rng, 1, 4)[0];
        const Vec mine = g_hat(m, x);
        const Vec ref = dense_ghat(k, xs, psi, lambda, x);
        for (int j = 0; j < q; ++j) CHECK(mine[j] == doctest::Approx(ref[j]).epsilon(1e-8));
    }
}

TEST_CASE("duplicated training point pulls the fit closer") {
    KernelConfig lin{KernelKind::Linear, 0.0};
    Matrix psi1(1, 1);
    psi1(0, 0) = 3.0;
    Matrix psi2(2, 1);
    psi2(0, 0) = psi2(1, 0) = 3.0;
    const double lambda = 1.0;
    const TrainedSurrogate one = fit_ridge(lin, {{1.0}}, psi1, lambda);
    const TrainedSurrogate two = fit_ridge(lin, {{1.0}, {1.0}}, psi2, lambda);
    const double e1 = std::abs(g_hat(one, {1.0})[0] - 3.0);
    const double e2 = std::abs(g_hat(two, {1.0})[0] - 3.0);
    CHECK(e2 < e1);
}

TEST_CASE("noiseless labels are recovered at small lambda") {
    Rng rng(9);
    const int n = 12;
    const auto xs = random_inputs(rng, n, 3);
    Matrix psi(n, 2);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 2; ++j) psi(i, j) = rng.uniform();
    KernelConfig gauss{KernelKind::Gaussian, 0.8};
    const TrainedSurrogate m = fit_ridge(gauss, xs, psi, 1e-8);
    for (int i = 0; i < n; ++i) {
        const Vec g = g_hat(m, xs[i]);
        double err = 0.0;
        for (int j = 0; j < 2; ++j) err += (g[j] - psi(i, j)) * (g[j] - psi(i, j));
        CHECK(std::sqrt(err) <= 1e-3);
    }
}

TEST_CASE("prediction lies in the span of the training features") {
    Rng rng(11);
    const int n = 10, q = 6;
    const auto xs = random_inputs(rng, n, 3);
    Matrix psi(n, q);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < q; ++j) psi(i, j) = 2.0 * rng.uniform() - 1.0;
    KernelConfig gauss{KernelKind::Gaussian, 0.6};
    const TrainedSurrogate m = fit_ridge(gauss, xs, psi, 0.2);
    const Vec x = random_inputs(rng, 1, 3)[0];
    const Vec g = g_hat(m, x);
    // least-squares projection onto the psi rows; the residual must vanish
    Matrix gram_psi(n, n);
    Vec rhs(n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int t = 0; t < q; ++t) s += psi(i, t) * psi(j, t);
            gram_psi(i, j) = s + (i == j ? 1e-10 : 0.0);
        }
        for (int t = 0; t < q; ++t) rhs[i] += psi(i, t) * g[t];
    }
    const Vec coef = gauss_solve(gram_psi, rhs);
    Vec recon(q, 0.0);
    for (int i = 0; i < n; ++i)
        for (int t = 0; t < q; ++t) recon[t] += coef[i] * psi(i, t);
    double resid = 0.0;
    for (int t = 0; t < q; ++t) resid += (recon[t] - g[t]) * (recon[t] - g[t]);
    CHECK(std::sqrt(resid) <= 1e-6);
}

TEST_CASE("ridge objective no worse than the zero function") {
    Rng rng(13);
    const int n = 15, q = 4;
    const auto xs = random_inputs(rng, n, 3);
    Matrix psi(n, q);
    double zero_obj = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < q; ++j) {
            psi(i, j) = 2.0 * rng.uniform() - 1.0;
            zero_obj += psi(i, j) * psi(i, j);
        }
    KernelConfig gauss{KernelKind::Gaussian, 0.5};
    const TrainedSurrogate m = fit_ridge(gauss, xs, psi, 0.3);
    const double fit_obj = surrogate_mse(m, xs, psi) * n;
    CHECK(fit_obj <= zero_obj + 1e-9);
}

TEST_CASE("permuting the training set leaves predictions unchanged") {
    Rng rng(17);
    const int n = 9, q = 3;
    const auto xs = random_inputs(rng, n, 2);
    Matrix psi(n, q);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < q; ++j) psi(i, j) = rng.uniform();
    KernelConfig gauss{KernelKind::Gaussian, 0.9};
    const TrainedSurrogate m1 = fit_ridge(gauss, xs, psi, 0.1);

    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = (i * 5 + 3) % n;
    std::vector<Vec> xs2(n);
    Matrix psi2(n, q);
    for (int i = 0; i < n; ++i) {
        xs2[i] = xs[perm[i]];
        for (int j = 0; j < q; ++j) psi2(i, j) = psi(perm[i], j);
    }
    const TrainedSurrogate m2 = fit_ridge(gauss, xs2, psi2, 0.1);
    const Vec x = random_inputs(rng, 1, 2)[0];
    const Vec a = g_hat(m1, x), b = g_hat(m2, x);
    for (int j = 0; j < q; ++j) CHECK(std::abs(a[j] - b[j]) <= 1e-10);
}

TEST_CASE("surrogate risk trend with growing n (monitored)") {
    // not asserted: the trend is data dependent, but we log it per run
    Rng rng(23);
    const int m = 4, q = 3;
    const auto gen = [&](int n, std::vector<Vec>* xs, Matrix* psi) {
        xs->assign(n, Vec(m));
        *psi = Matrix(n, q);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < m; ++j) (*xs)[i][j] = 2.0 * rng.uniform() - 1.0;
            for (int j = 0; j < q; ++j)
                (*psi)(i, j) = std::sin(3.0 * (*xs)[i][j % m]) + 0.05 * rng.normal();
        }
    };
    KernelConfig k{KernelKind::Gaussian, 0.7};
    std::vector<Vec> test_x;
    Matrix test_psi;
    gen(64, &test_x, &test_psi);
    for (int n : {8, 32, 128}) {
        std::vector<Vec> xs;
        Matrix psi;
        gen(n, &xs, &psi);
        const TrainedSurrogate model = fit_ridge(k, xs, psi, 0.05);
        MESSAGE("n=", n, " held-out surrogate mse ", surrogate_mse(model, test_x, test_psi));
    }
}

TEST_CASE("fit_ridge input validation") {
    KernelConfig lin{KernelKind::Linear, 0.0};
    Matrix psi(1, 1);
    CHECK_THROWS_AS(fit_ridge(lin, {{1.0}}, psi, 0.0), RangeError);
    CHECK_THROWS_AS(fit_ridge(lin, {{1.0}, {2.0}}, psi, 0.1), DimensionError);
}

} // TEST_SUITE
