#pragma once
// Dense vector kernels used on the solver hot paths (norms, updates, box
// projection). Each kernel has a portable scalar reference and an AVX2
// variant; the variant is chosen once at runtime from CPU features.
//
// Both variants accumulate reductions in four interleaved partial sums that
// are combined in the same order, so they return bit-identical results.

#include <cstddef>
#include <string_view>

namespace lab::kernels {

enum class Backend { scalar, avx2 };

/// Backend in use; detected on first call (override: LAB_SIMD=scalar).
Backend active_backend();
/// Force a backend (tests). Requesting avx2 on a CPU without it throws.
void set_backend(Backend b);
bool avx2_available();
std::string_view backend_name(Backend b);

double dot(const double* a, const double* b, std::size_t n);
double sum_squares(const double* a, std::size_t n);
double max_abs(const double* a, std::size_t n);
/// y <- y + alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
/// out <- x + alpha * d
void axpy_into(const double* x, double alpha, const double* d, double* out, std::size_t n);
/// x <- min(max(x, lo), hi) elementwise
void clamp(double* x, const double* lo, const double* hi, std::size_t n);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum_squares(const double* a, std::size_t n);
double max_abs(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void axpy_into(const double* x, double alpha, const double* d, double* out, std::size_t n);
void clamp(double* x, const double* lo, const double* hi, std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sum_squares(const double* a, std::size_t n);
double max_abs(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void axpy_into(const double* x, double alpha, const double* d, double* out, std::size_t n);
void clamp(double* x, const double* lo, const double* hi, std::size_t n);
}  // namespace avx2

}  // namespace lab::kernels
