#pragma once

// Hand-rolled random generators shared by the property tests.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "dmbpp/bernstein.hpp"
#include "dmbpp/domain.hpp"
#include "dmbpp/model.hpp"
#include "dmbpp/random.hpp"

namespace gen {

using dmbpp::DomainSpec;
using dmbpp::MixedPoint;
using dmbpp::Rng;

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// Uniform point of the product space, pushed to the interior.
inline MixedPoint interior_point(const DomainSpec& spec, Rng& rng, double eps = 1e-6) {
  MixedPoint p;
  for (int d : spec.simplex_dims()) p.simplex.push_back(dmbpp::sample_dirichlet(rng, Eigen::VectorXd::Ones(d + 1)));
  p.cube.resize(spec.cube_dim());
  for (int l = 0; l < spec.cube_dim(); ++l) p.cube[l] = dmbpp::uniform01(rng);
  return dmbpp::clamp_interior(p, spec, eps);
}

/// Coordinates anywhere in [0,1] including exact boundary values; simplex sums may exceed 1.
inline MixedPoint rough_point(const DomainSpec& spec, Rng& rng) {
  auto coord = [&] {
    const int pick = uniform_int(rng, 0, 5);
    if (pick == 0) return 0.0;
    if (pick == 1) return 1.0;
    return dmbpp::uniform01(rng);
  };
  MixedPoint p;
  for (int d : spec.simplex_dims()) {
    Eigen::VectorXd b(d);
    for (int l = 0; l < d; ++l) b[l] = coord();
    p.simplex.push_back(b);
  }
  p.cube.resize(spec.cube_dim());
  for (int l = 0; l < spec.cube_dim(); ++l) p.cube[l] = coord();
  return p;
}

inline DomainSpec small_spec(Rng& rng) {
  std::vector<int> dims(static_cast<std::size_t>(uniform_int(rng, 0, 2)));
  for (auto& d : dims) d = uniform_int(rng, 1, 3);
  return DomainSpec(dims, uniform_int(rng, dims.empty() ? 1 : 0, 2));
}

inline dmbpp::DegreeVector degrees_up_to(const DomainSpec& spec, const std::vector<int>& max_k, Rng& rng) {
  dmbpp::DegreeVector k;
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    k.k.push_back(uniform_int(rng, dmbpp::degree_lower_bound(spec, b), max_k[b - 1]));
  }
  return k;
}

/// Weights from normalized exponential draws; occasionally sparse.
inline dmbpp::WeightTable weight_table(const DomainSpec& spec, const dmbpp::DegreeVector& k, Rng& rng) {
  const dmbpp::IndexLayout layout(spec, k);
  Eigen::VectorXd w(layout.size());
  std::exponential_distribution<double> e(1.0);
  const bool sparse = uniform_int(rng, 0, 3) == 0;
  for (Eigen::Index c = 0; c < w.size(); ++c) w[c] = (sparse && dmbpp::uniform01(rng) < 0.7) ? 0.0 : e(rng);
  if (w.sum() == 0.0) w[0] = 1.0;
  return dmbpp::make_weight_table(spec, k, w / w.sum());
}

inline dmbpp::MixtureState prior_state(const dmbpp::ModelConfig& config, Rng& rng) {
  return dmbpp::sample_prior(config, rng);
}

/// Mean and standard error of a sample.
struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

inline Moments moments(const std::vector<double>& x) {
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - m.mean) * (v - m.mean);
  m.se = std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
  return m;
}

/// Standard error of the mean of an autocorrelated series by non-overlapping batch means.
inline Moments batch_moments(const std::vector<double>& x, int batches = 50) {
  const std::size_t len = x.size() / static_cast<std::size_t>(batches);
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += x[b * len + i];
    means.push_back(s / static_cast<double>(len));
  }
  return moments(means);
}

}  // namespace gen
