#pragma once

#include <Eigen/Dense>

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tsmor {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// A scalar field sampled as cell degrees of freedom on a structured grid.
using Field = Eigen::VectorXd;

// Thrown when a run configuration or CLI argument is invalid. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a numerical routine cannot proceed (singular system,
// failed factorization after jitter escalation, ...). CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

class RegistrationError : public NumericalError {
 public:
  explicit RegistrationError(const std::string& what) : NumericalError(what) {}
};

// ---------------------------------------------------------------------------
// Axis-aligned domain box, dimension 1 or 2.
// ---------------------------------------------------------------------------

struct DomainBox {
  int dim = 2;
  std::array<double, 2> lo{{0.0, 0.0}};
  std::array<double, 2> hi{{1.0, 1.0}};

  double extent(int axis) const { return hi[axis] - lo[axis]; }

  // Affine pullback to the unit cube, coordinate-wise.
  double to_unit(int axis, double x) const { return (x - lo[axis]) / extent(axis); }

  double clamp(int axis, double x) const {
    return x < lo[axis] ? lo[axis] : (x > hi[axis] ? hi[axis] : x);
  }

  bool contains(const double* x, double tol = 0.0) const {
    for (int d = 0; d < dim; ++d)
      if (x[d] < lo[d] - tol || x[d] > hi[d] + tol) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// Parallel helpers. Chunked work distribution over a fixed number of worker
// threads; the chunk layout depends only on `n`, never on the worker count,
// so results are reproducible across machines.
// ---------------------------------------------------------------------------

inline int default_workers() {
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body,
                         int workers = 0) {
  if (workers <= 0) workers = default_workers();
  if (n <= 0) return;
  if (workers == 1 || n == 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  auto run = [&]() {
    while (true) {
      std::int64_t i = next.fetch_add(1);
      if (i >= n) break;
      body(i);
    }
  };
  std::vector<std::thread> pool;
  int nt = static_cast<int>(std::min<std::int64_t>(workers, n));
  pool.reserve(nt - 1);
  for (int t = 0; t + 1 < nt; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// Deterministic sub-seeding: one master seed fans out to per-task streams.
// ---------------------------------------------------------------------------

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL + (stream << 1));
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return std::mt19937_64(mix_seed(seed, stream));
}

// FNV-1a, used for artifact payload fingerprints in manifests.
inline std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

}  // namespace tsmor
