#include "abst/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace abst::kernels {

namespace {

Isa detect() {
#if defined(__x86_64__) || defined(_M_X64)
    if (const char* env = std::getenv("ABST_SIMD")) {
        if (std::strcmp(env, "scalar") == 0) return Isa::Scalar;
        if (std::strcmp(env, "avx2") == 0) return Isa::Avx2;
        // anything else falls through to auto
    }
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::Avx2;
#endif
    return Isa::Scalar;
}

std::atomic<int> g_isa{-1};

Isa current() {
    int v = g_isa.load(std::memory_order_relaxed);
    if (v < 0) {
        v = static_cast<int>(detect());
        g_isa.store(v, std::memory_order_relaxed);
    }
    return static_cast<Isa>(v);
}

} // namespace

Isa active_isa() { return current(); }

const char* isa_name() { return current() == Isa::Avx2 ? "avx2" : "scalar"; }

void force_isa(Isa isa) { g_isa.store(static_cast<int>(isa), std::memory_order_relaxed); }

void reset_isa() { g_isa.store(-1, std::memory_order_relaxed); }

double dot(const double* a, const double* b, std::size_t n) {
#if defined(__x86_64__) || defined(_M_X64)
    if (current() == Isa::Avx2) return detail::dot_avx2(a, b, n);
#endif
    return detail::dot_scalar(a, b, n);
}

void axpy(double* y, double alpha, const double* x, std::size_t n) {
#if defined(__x86_64__) || defined(_M_X64)
    if (current() == Isa::Avx2) return detail::axpy_avx2(y, alpha, x, n);
#endif
    detail::axpy_scalar(y, alpha, x, n);
}

double sqdist(const double* a, const double* b, std::size_t n) {
#if defined(__x86_64__) || defined(_M_X64)
    if (current() == Isa::Avx2) return detail::sqdist_avx2(a, b, n);
#endif
    return detail::sqdist_scalar(a, b, n);
}

} // namespace abst::kernels
