#include "lab/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define LAB_HAVE_X86 1
#else
#define LAB_HAVE_X86 0
#endif

namespace lab::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        for (int k = 0; k < 4; ++k) s[k] += a[i + k] * b[i + k];
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return ((s[0] + s[1]) + (s[2] + s[3])) + tail;
}

double sum_squares(const double* a, std::size_t n) { return dot(a, a, n); }

double max_abs(const double* a, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(a[i]));
    return m;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_into(const double* x, double alpha, const double* d, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + alpha * d[i];
}

void clamp(double* x, const double* lo, const double* hi, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = std::min(std::max(x[i], lo[i]), hi[i]);
}

}  // namespace scalar

namespace avx2 {

#if LAB_HAVE_X86
#define LAB_AVX2 __attribute__((target("avx2")))

LAB_AVX2 static double hsum_pairs(__m256d v) {
    alignas(32) double s[4];
    _mm256_store_pd(s, v);
    return (s[0] + s[1]) + (s[2] + s[3]);
}

LAB_AVX2 double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return hsum_pairs(acc) + tail;
}

LAB_AVX2 double sum_squares(const double* a, std::size_t n) { return dot(a, a, n); }

LAB_AVX2 double max_abs(const double* a, std::size_t n) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    __m256d m = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) m = _mm256_max_pd(m, _mm256_andnot_pd(sign, _mm256_loadu_pd(a + i)));
    alignas(32) double s[4];
    _mm256_store_pd(s, m);
    double r = std::max(std::max(s[0], s[1]), std::max(s[2], s[3]));
    for (; i < n; ++i) r = std::max(r, std::fabs(a[i]));
    return r;
}

LAB_AVX2 void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d al = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(al, _mm256_loadu_pd(x + i))));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

LAB_AVX2 void axpy_into(const double* x, double alpha, const double* d, double* out, std::size_t n) {
    const __m256d al = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i,
                         _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_mul_pd(al, _mm256_loadu_pd(d + i))));
    for (; i < n; ++i) out[i] = x[i] + alpha * d[i];
}

LAB_AVX2 void clamp(double* x, const double* lo, const double* hi, std::size_t n) {
    std::size_t i = 0;
    // max/min operand order chosen to match std::max/std::min on NaN-free data
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_max_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(lo + i));
        _mm256_storeu_pd(x + i, _mm256_min_pd(v, _mm256_loadu_pd(hi + i)));
    }
    for (; i < n; ++i) x[i] = std::min(std::max(x[i], lo[i]), hi[i]);
}

#undef LAB_AVX2
#else
double dot(const double* a, const double* b, std::size_t n) { return scalar::dot(a, b, n); }
double sum_squares(const double* a, std::size_t n) { return scalar::sum_squares(a, n); }
double max_abs(const double* a, std::size_t n) { return scalar::max_abs(a, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { scalar::axpy(alpha, x, y, n); }
void axpy_into(const double* x, double alpha, const double* d, double* out, std::size_t n) {
    scalar::axpy_into(x, alpha, d, out, n);
}
void clamp(double* x, const double* lo, const double* hi, std::size_t n) { scalar::clamp(x, lo, hi, n); }
#endif

}  // namespace avx2

namespace {

std::atomic<int> g_backend{-1};

Backend detect() {
    const char* env = std::getenv("LAB_SIMD");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) return Backend::scalar;
    return avx2_available() ? Backend::avx2 : Backend::scalar;
}

}  // namespace

bool avx2_available() {
#if LAB_HAVE_X86
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Backend active_backend() {
    int b = g_backend.load(std::memory_order_relaxed);
    if (b < 0) {
        b = static_cast<int>(detect());
        g_backend.store(b, std::memory_order_relaxed);
    }
    return static_cast<Backend>(b);
}

void set_backend(Backend b) {
    if (b == Backend::avx2 && !avx2_available()) throw std::runtime_error("AVX2 not available on this CPU");
    g_backend.store(static_cast<int>(b), std::memory_order_relaxed);
}

std::string_view backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

#define LAB_DISPATCH(call) \
    (active_backend() == Backend::avx2 ? avx2::call : scalar::call)

double dot(const double* a, const double* b, std::size_t n) { return LAB_DISPATCH(dot(a, b, n)); }
double sum_squares(const double* a, std::size_t n) { return LAB_DISPATCH(sum_squares(a, n)); }
double max_abs(const double* a, std::size_t n) { return LAB_DISPATCH(max_abs(a, n)); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { LAB_DISPATCH(axpy(alpha, x, y, n)); }
void axpy_into(const double* x, double alpha, const double* d, double* out, std::size_t n) {
    LAB_DISPATCH(axpy_into(x, alpha, d, out, n));
}
void clamp(double* x, const double* lo, const double* hi, std::size_t n) { LAB_DISPATCH(clamp(x, lo, hi, n)); }

#undef LAB_DISPATCH

}  // namespace lab::kernels
