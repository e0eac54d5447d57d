#pragma once

// Stationarity checks of the Gibbs updates against prior moments and enumerated posteriors.

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "dmbpp/gibbs.hpp"
#include "generators.hpp"

namespace checks {

using namespace dmbpp;

struct MomentCheck {
  std::string name;
  double truth = 0.0;
  double mean = 0.0;
  double se = 0.0;
  double slack = 0.0;  // tolerance added to the sigma band for an estimated truth

  double z() const { return (mean - truth) / se; }
  bool within(double sigmas) const { return std::abs(mean - truth) < sigmas * se + slack; }
};

inline ModelConfig tiny_model(const DomainSpec& spec, int truncation, double lambda) {
  ModelConfig m = default_model_config(spec);
  m.truncation = truncation;
  m.degree_prior = TruncatedPoisson{std::vector<double>(static_cast<std::size_t>(spec.num_blocks()), lambda)};
  return m;
}

inline double integrate_half_line(const std::function<double(double)>& f) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, std::numeric_limits<double>::infinity(),
                                                                     15, 1e-13);
}

/// Full sweeps without data on N = 3, a single cube coordinate and Poisson(1) degrees.
/// Prior moments: M0 ~ Gamma(1,1); k ~ Poisson(1) on k >= 1; w1 = v1 ~ Beta(1, M0).
inline std::vector<MomentCheck> geweke_prior_recovery(std::uint64_t seed, int sweeps = 10000) {
  const DomainSpec spec({}, 1);
  const ModelConfig model = tiny_model(spec, 3, 1.0);
  const SamplerConfig sampler;
  const PreparedData empty(spec, {});
  Rng rng(seed);
  MixtureState s = sample_prior(model, rng);
  AcceptanceStats stats;
  std::vector<std::vector<double>> series(6);
  for (int t = 0; t < sweeps; ++t) {
    gibbs_sweep(s, empty, model, sampler, rng, stats);
    const double k = s.k[1];
    const double w = s.w[0];
    for (const auto& [i, v] : std::vector<std::pair<int, double>>{
             {0, s.M0}, {1, s.M0 * s.M0}, {2, k}, {3, k * k}, {4, w}, {5, w * w}}) {
      series[static_cast<std::size_t>(i)].push_back(v);
    }
  }
  const double z = 1.0 - std::exp(-1.0);
  const std::vector<std::pair<std::string, double>> truth{
      {"E[M0]", 1.0},
      {"E[M0^2]", 2.0},
      {"E[k]", 1.0 / z},
      {"E[k^2]", 2.0 / z},
      {"E[w1]", integrate_half_line([](double m) { return std::exp(-m) / (1 + m); })},
      {"E[w1^2]", integrate_half_line([](double m) { return std::exp(-m) * 2.0 / ((1 + m) * (2 + m)); })}};
  std::vector<MomentCheck> out;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto m = gen::batch_moments(series[i]);
    out.push_back({truth[i].first, truth[i].second, m.mean, m.se});
  }
  return out;
}

struct ChiSquareCheck {
  double statistic = 0.0;
  double critical = 0.0;  // 99% quantile
  int dof = 0;
  long accepts = 0;

  bool passes() const { return statistic < critical; }
};

/// Degree updates alone, no data: draws thinned by 10 against the Poisson(1) prior on k >= 1,
/// upper support pooled until each expected count reaches 5.
inline ChiSquareCheck degree_prior_recovery(std::uint64_t seed, int draws = 10000) {
  const DomainSpec spec({}, 1);
  const ModelConfig model = tiny_model(spec, 3, 1.0);
  const SamplerConfig sampler;
  const PreparedData empty(spec, {});
  Rng rng(seed);
  MixtureState s = sample_prior(model, rng);
  AcceptanceStats stats;
  std::map<int, long> counts;
  for (int t = 0; t < draws * 10; ++t) {
    update_degrees(s, empty, model, sampler, rng, stats);
    if (t % 10 == 9) ++counts[std::min(s.k[1], 20)];
  }
  std::vector<double> observed, expected;
  double obs_tail = draws, exp_tail = 1.0;
  for (int k = 1; k < 20; ++k) {
    const double p = std::exp(degree_prior_block_logpmf(model.degree_prior, spec, 1, k));
    if (draws * p < 5 || draws * (exp_tail - p) < 5) break;
    observed.push_back(static_cast<double>(counts[k]));
    expected.push_back(draws * p);
    obs_tail -= static_cast<double>(counts[k]);
    exp_tail -= p;
  }
  observed.push_back(obs_tail);
  expected.push_back(draws * exp_tail);
  ChiSquareCheck out;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    out.statistic += std::pow(observed[i] - expected[i], 2) / expected[i];
  }
  out.dof = static_cast<int>(observed.size()) - 1;
  out.critical = boost::math::quantile(boost::math::chi_squared(out.dof), 0.99);
  out.accepts = stats.degree_accepts;
  return out;
}

inline MixtureState single_cluster(const std::vector<MixedPoint>& pts, const DegreeVector& k) {
  MixtureState s;
  s.v = Eigen::VectorXd::Constant(1, 0.5);
  s.w = stick_to_weights(s.v);
  s.theta = {pts[0], pts[0]};
  s.xi.assign(pts.size(), 0);
  s.k = k;
  return s;
}

/// k = 2 on [0,1]: the atom selects Beta(1,2) below 1/2 and Beta(2,1) above, so the posterior
/// probability of the upper cell is available in closed form.
inline MomentCheck cube_atom_toy(std::uint64_t seed, int moves = 200000) {
  const DomainSpec spec({}, 1);
  std::vector<MixedPoint> pts;
  double low = 0.5, high = 0.5;
  for (double x : {0.7, 0.55, 0.2}) {
    pts.push_back(MixedPoint{{}, Eigen::VectorXd::Constant(1, x)});
    low *= 2 * (1 - x);
    high *= 2 * x;
  }
  const PreparedData data(spec, pts);
  MixtureState s = single_cluster(pts, DegreeVector{{2}});
  s.theta[0].cube[0] = 0.3;
  const SamplerConfig cfg;
  Rng rng(seed);
  AcceptanceStats stats;
  std::vector<double> in_high;
  for (int t = 0; t < moves; ++t) {
    update_atoms(s, data, cfg, rng, stats);
    in_high.push_back(s.theta[0].cube[0] > 0.5 ? 1.0 : 0.0);
  }
  const auto m = gen::batch_moments(in_high, 100);
  return {"upper cell", high / (low + high), m.mean, m.se};
}

/// k = 3 on S_2: the ceiling map sends each atom to one of the three indices of I_2^3. Region
/// areas under the base measure are estimated by uniform sampling, hence a small relative slack.
inline std::vector<MomentCheck> simplex_atom_toy(std::uint64_t seed, int moves = 200000) {
  const DomainSpec spec({2}, 0);
  std::vector<MixedPoint> pts;
  for (auto [a, b] : std::vector<std::pair<double, double>>{{0.5, 0.2}, {0.3, 0.5}, {0.6, 0.1}}) {
    Eigen::VectorXd x(2);
    x << a, b;
    pts.push_back(MixedPoint{{x}, Eigen::VectorXd()});
  }
  const PreparedData data(spec, pts);
  const auto indices = enumerate_I(2, 3);
  const auto region = [&](const MixedPoint& theta) {
    const MultiIndex j = ceil_map(3, 2, theta.simplex[0]);
    return static_cast<std::size_t>(std::find(indices.begin(), indices.end(), j) - indices.begin());
  };
  Rng rng(seed);
  std::vector<double> area(indices.size(), 0.0);
  const int area_draws = 2000000;
  for (int t = 0; t < area_draws; ++t) area[region(sample_base_measure(spec, rng))] += 1.0 / area_draws;
  std::vector<double> post(indices.size());
  double norm = 0.0;
  for (std::size_t r = 0; r < indices.size(); ++r) {
    double lik = 1.0;
    const Eigen::VectorXd alpha = alpha_map(3, 2, indices[r]);
    for (const auto& x : pts) lik *= std::exp(log_dirichlet_pdf<double>(x.simplex[0], alpha));
    post[r] = area[r] * lik;
    norm += post[r];
  }
  MixtureState s = single_cluster(pts, DegreeVector{{3, 1}});
  const SamplerConfig cfg;
  AcceptanceStats stats;
  std::vector<std::vector<double>> hits(indices.size());
  for (int t = 0; t < moves; ++t) {
    update_atoms(s, data, cfg, rng, stats);
    const std::size_t r = region(s.theta[0]);
    for (std::size_t q = 0; q < indices.size(); ++q) hits[q].push_back(q == r ? 1.0 : 0.0);
  }
  std::vector<MomentCheck> out;
  for (std::size_t q = 0; q < indices.size(); ++q) {
    const auto m = gen::batch_moments(hits[q], 100);
    const double p = post[q] / norm;
    out.push_back({"region " + std::to_string(q), p, m.mean, m.se, 2e-3 * p});
  }
  return out;
}

}  // namespace checks
