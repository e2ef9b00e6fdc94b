#pragma once

// Dense double-precision kernels used by the selector network and the
// distance-heavy baselines. Every routine has a scalar reference version;
// vectorized variants are picked at runtime from what the CPU supports and
// must agree with the reference to rounding.
//
// All matrices are row-major and densely packed. "acc" routines accumulate
// into the output instead of overwriting it.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "medsel/kernel_table.hpp"

namespace medsel::kernels {

enum class Backend { scalar, avx2, neon };

const Table& scalar_table();

bool backend_supported(Backend backend);
const Table& table(Backend backend);

// The backend picked at first use: SELCTL_KERNELS=scalar|avx2|neon|auto
// overrides detection. Throws std::invalid_argument for an unsupported request.
Backend active_backend();
const Table& active();
void select_backend(Backend backend);

std::string_view backend_name(Backend backend);
Backend parse_backend(std::string_view name);
std::vector<Backend> supported_backends();

// RAII override used by tests and golden-file generation.
class ScopedBackend {
 public:
  explicit ScopedBackend(Backend backend);
  ~ScopedBackend();
  ScopedBackend(const ScopedBackend&) = delete;
  ScopedBackend& operator=(const ScopedBackend&) = delete;

 private:
  Backend previous_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline double sqdist(std::span<const double> a, std::span<const double> b) {
  return active().sqdist(a.data(), b.data(), a.size());
}

}  // namespace medsel::kernels
