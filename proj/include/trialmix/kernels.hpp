#pragma once

// Vector kernels for the per-voxel inner loops. Every kernel has a scalar
// reference version and, on x86-64, an AVX2/FMA version compiled in its own
// translation unit. The variant is chosen once at startup from CPUID and can
// be pinned for testing. Results of the two variants agree to rounding; they
// are not bit-identical because the SIMD variants sum in four lanes.

#include <cstddef>
#include <span>
#include <string_view>

namespace trialmix::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// True when the CPU and the build both support the variant.
bool isa_available(Isa isa);

/// Variant currently used by the dispatching entry points.
Isa active_isa();

/// Pins the dispatching entry points to `isa`. Throws InvalidArgument if the
/// variant is unavailable. Not thread-safe with concurrent kernel calls.
void set_isa(Isa isa);

/// Restores the CPUID-selected variant (honours TRIALMIX_ISA=scalar).
void reset_isa();

// Dispatching entry points.
double dot(std::span<const double> a, std::span<const double> b);
double sum_squares(std::span<const double> a);
double sum_sq_diff(std::span<const double> a, std::span<const double> b);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// out = a - alpha * b
void sub_scaled(std::span<const double> a, double alpha, std::span<const double> b,
                std::span<double> out);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum_squares(const double* a, std::size_t n);
double sum_sq_diff(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void sub_scaled(const double* a, double alpha, const double* b, double* out, std::size_t n);
}  // namespace scalar

#if defined(TRIALMIX_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sum_squares(const double* a, std::size_t n);
double sum_sq_diff(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void sub_scaled(const double* a, double alpha, const double* b, double* out, std::size_t n);
}  // namespace avx2
#endif

}  // namespace trialmix::kernels
