#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "medsel/kernels.hpp"

namespace medsel::kernels {

#if defined(MEDSEL_HAVE_AVX2)
const Table& avx2_table();
#endif
#if defined(MEDSEL_HAVE_NEON)
const Table& neon_table();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(MEDSEL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect() {
  if (const char* env = std::getenv("SELCTL_KERNELS"); env != nullptr && *env != '\0') {
    const std::string_view name(env);
    if (name != "auto") {
      const Backend requested = parse_backend(name);
      if (!backend_supported(requested))
        throw std::invalid_argument("SELCTL_KERNELS=" + std::string(name) +
                                    " is not supported on this CPU");
      return requested;
    }
  }
  if (backend_supported(Backend::avx2)) return Backend::avx2;
  if (backend_supported(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

struct State {
  std::atomic<Backend> backend;
  std::atomic<const Table*> table;
  State() {
    const Backend b = detect();
    backend.store(b);
    table.store(&kernels::table(b));
  }
};

State& state() {
  static State s;
  return s;
}

}  // namespace

bool backend_supported(Backend backend) {
  switch (backend) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
      return cpu_has_avx2();
    case Backend::neon:
#if defined(MEDSEL_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const Table& table(Backend backend) {
  if (!backend_supported(backend))
    throw std::invalid_argument("kernel backend '" + std::string(backend_name(backend)) +
                                "' is not available");
  switch (backend) {
#if defined(MEDSEL_HAVE_AVX2)
    case Backend::avx2:
      return avx2_table();
#endif
#if defined(MEDSEL_HAVE_NEON)
    case Backend::neon:
      return neon_table();
#endif
    default:
      return scalar_table();
  }
}

Backend active_backend() { return state().backend.load(std::memory_order_acquire); }

const Table& active() { return *state().table.load(std::memory_order_acquire); }

void select_backend(Backend backend) {
  const Table& t = table(backend);
  State& s = state();
  s.table.store(&t, std::memory_order_release);
  s.backend.store(backend, std::memory_order_release);
}

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "unknown";
}

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::scalar;
  if (name == "avx2") return Backend::avx2;
  if (name == "neon") return Backend::neon;
  throw std::invalid_argument("unknown kernel backend '" + std::string(name) + "'");
}

std::vector<Backend> supported_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon})
    if (backend_supported(b)) out.push_back(b);
  return out;
}

ScopedBackend::ScopedBackend(Backend backend) : previous_(active_backend()) { select_backend(backend); }

ScopedBackend::~ScopedBackend() { select_backend(previous_); }

}  // namespace medsel::kernels
