#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

namespace dmbpp {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of stream `stream` under master seed `seed`: splitmix64(seed ^ splitmix64(stream + 1)).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 1));
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

/// log of a Gamma(shape, 1) draw; stable for very small shapes.
inline double sample_log_gamma(Rng& rng, double shape) {
  if (shape >= 1.0) return std::log(std::gamma_distribution<double>(shape, 1.0)(rng));
  // Gamma(a) = Gamma(a+1) * U^(1/a)
  const double g = std::gamma_distribution<double>(shape + 1.0, 1.0)(rng);
  double u = uniform01(rng);
  while (u <= 0.0) u = uniform01(rng);
  return std::log(g) + std::log(u) / shape;
}

/// Gamma with the (shape, rate) parameterization.
inline double sample_gamma(Rng& rng, double shape, double rate) {
  return std::exp(sample_log_gamma(rng, shape)) / rate;
}

inline double sample_beta(Rng& rng, double a, double b) {
  const double la = sample_log_gamma(rng, a);
  const double lb = sample_log_gamma(rng, b);
  return 1.0 / (1.0 + std::exp(lb - la));
}

/// Dirichlet(alpha) draw; returns all alpha.size() parts.
inline Eigen::VectorXd sample_dirichlet_parts(Rng& rng, const Eigen::VectorXd& alpha) {
  Eigen::VectorXd logs(alpha.size());
  for (Eigen::Index l = 0; l < alpha.size(); ++l) logs[l] = sample_log_gamma(rng, alpha[l]);
  const double m = logs.maxCoeff();
  Eigen::VectorXd parts = (logs.array() - m).exp().matrix();
  return parts / parts.sum();
}

/// Dirichlet(alpha) draw reduced to its first alpha.size()-1 free coordinates.
inline Eigen::VectorXd sample_dirichlet(Rng& rng, const Eigen::VectorXd& alpha) {
  Eigen::VectorXd parts = sample_dirichlet_parts(rng, alpha);
  return parts.head(alpha.size() - 1);
}

}  // namespace dmbpp
