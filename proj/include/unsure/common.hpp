#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace unsure {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  empty_dataset,
  degenerate_score,
  degenerate_moments,
  degenerate_denominator,
  singular_gram,
  spectral_zero,
  quadrature_diverged,
  invalid_poisson_input,
  missing_multipliers,
  missing_ground_truth,
  invalid_mmse,
  not_psd,
  operator_mismatch,
  non_finite_loss,
  config_error,
  io_error,
  unsupported,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Derives an independent substream from (seed, name). Used so parallel
// experiments and per-sample probe streams stay reproducible.
inline Rng substream(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h),
                    static_cast<std::uint32_t>(h >> 32)};
  return Rng(seq);
}

inline Rng substream(std::uint64_t seed, std::string_view name,
                     std::uint64_t index) {
  std::string tag(name);
  tag += '#';
  tag += std::to_string(index);
  return substream(seed, tag);
}

// Deterministic child seed for APIs that take a seed rather than an engine.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  h ^= seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view name,
                                 std::uint64_t index) {
  std::string tag(name);
  tag += '#';
  tag += std::to_string(index);
  return derive_seed(seed, tag);
}

inline double draw_normal(Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  return n01(rng);
}

inline Vec draw_normal_vec(Rng& rng, Eigen::Index n) {
  Vec v(n);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = n01(rng);
  return v;
}

}  // namespace unsure
