#pragma once

#include <cstddef>

// Data-parallel inner loops used by the linear algebra, the Gram matrix
// builder and the simplex pivot. Scalar reference implementations plus an
// AVX2/FMA variant selected at runtime; the two are equivalence-tested.
// Selection: ABST_SIMD=scalar|avx2|auto (default auto), or force_isa().
namespace abst::kernels {

enum class Isa { Scalar, Avx2 };

Isa active_isa();
const char* isa_name();
void force_isa(Isa isa);
void reset_isa();

// y . x
double dot(const double* a, const double* b, std::size_t n);
// y += alpha * x
void axpy(double* y, double alpha, const double* x, std::size_t n);
// squared euclidean distance
double sqdist(const double* a, const double* b, std::size_t n);

namespace detail {
double dot_scalar(const double* a, const double* b, std::size_t n);
void axpy_scalar(double* y, double alpha, const double* x, std::size_t n);
double sqdist_scalar(const double* a, const double* b, std::size_t n);
#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(const double* a, const double* b, std::size_t n);
void axpy_avx2(double* y, double alpha, const double* x, std::size_t n);
double sqdist_avx2(const double* a, const double* b, std::size_t n);
#endif
} // namespace detail

} // namespace abst::kernels
