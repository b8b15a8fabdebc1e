#include <atomic>
#include <cstdlib>
#include <string>

#include "trialmix/error.hpp"
#include "trialmix/kernels.hpp"

namespace trialmix::kernels {
namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum_squares)(const double*, std::size_t);
  double (*sum_sq_diff)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*sub_scaled)(const double*, double, const double*, double*, std::size_t);
};

constexpr Table kScalar{scalar::dot, scalar::sum_squares, scalar::sum_sq_diff, scalar::axpy,
                        scalar::sub_scaled};
#if defined(TRIALMIX_HAVE_AVX2)
constexpr Table kAvx2{avx2::dot, avx2::sum_squares, avx2::sum_sq_diff, avx2::axpy,
                      avx2::sub_scaled};
#endif

bool cpu_has_avx2() {
#if defined(TRIALMIX_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa detect() {
  if (const char* env = std::getenv("TRIALMIX_ISA"); env != nullptr && std::string(env) == "scalar") {
    return Isa::scalar;
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

const Table& table_for(Isa isa) {
#if defined(TRIALMIX_HAVE_AVX2)
  if (isa == Isa::avx2) return kAvx2;
#endif
  (void)isa;
  return kScalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

const Table& active() { return table_for(current().load(std::memory_order_relaxed)); }

void check_same(std::size_t a, std::size_t b) {
  if (a != b) throw DimensionError("kernel operands differ in length");
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) { return isa == Isa::scalar || cpu_has_avx2(); }

Isa active_isa() { return current().load(); }

void set_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw InvalidArgument("kernel variant " + std::string(isa_name(isa)) + " is not available");
  }
  current().store(isa);
}

void reset_isa() { current().store(detect()); }

double dot(std::span<const double> a, std::span<const double> b) {
  check_same(a.size(), b.size());
  return active().dot(a.data(), b.data(), a.size());
}

double sum_squares(std::span<const double> a) { return active().sum_squares(a.data(), a.size()); }

double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
  check_same(a.size(), b.size());
  return active().sum_sq_diff(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_same(x.size(), y.size());
  active().axpy(alpha, x.data(), y.data(), x.size());
}

void sub_scaled(std::span<const double> a, double alpha, std::span<const double> b,
                std::span<double> out) {
  check_same(a.size(), b.size());
  check_same(a.size(), out.size());
  active().sub_scaled(a.data(), alpha, b.data(), out.data(), a.size());
}

}  // namespace trialmix::kernels
