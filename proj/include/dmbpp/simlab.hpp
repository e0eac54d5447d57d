#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dmbpp/bernstein.hpp"
#include "dmbpp/estimate.hpp"
#include "dmbpp/gibbs.hpp"

namespace dmbpp {

/// Product of one Dirichlet per simplex block and independent Betas on the cube.
struct ScenarioComponent {
  std::vector<Eigen::VectorXd> dirichlet;          // d_m + 1 parameters per simplex block
  std::vector<std::pair<double, double>> beta;     // one (a, b) per cube coordinate
};

struct Scenario {
  std::string id;
  DomainSpec spec;
  std::vector<double> weights;
  std::vector<ScenarioComponent> components;
};

/// Three components on S_2 x [0,1].
Scenario scenario_I();
/// Six components on S_3 x S_2 x [0,1]^2.
Scenario scenario_II();
/// "I" or "II"; InvalidArgument otherwise.
Scenario scenario_by_id(const std::string& id);

void check_scenario(const Scenario& s);

double scenario_logpdf(const Scenario& s, const MixedPoint& x);
double scenario_density(const Scenario& s, const MixedPoint& x);
/// Density of the kept variables (points of subset_domain) by Dirichlet aggregation.
double scenario_marginal_density(const Scenario& s, const MarginalSubset& subset, const MixedPoint& x_partial);

Eigen::VectorXd scenario_density_values(const Scenario& s, const std::vector<MixedPoint>& points);
Eigen::VectorXd scenario_marginal_values(const Scenario& s, const MarginalSubset& subset,
                                         const std::vector<MixedPoint>& points);

/// The scenario law as a block-factorized measure for cell weights.
MeasureOracle scenario_measure(const Scenario& s);

/// Ancestral sampling: component by weight, then block-wise Dirichlet and Beta draws.
std::vector<MixedPoint> scenario_sample(const Scenario& s, int n, Rng& rng);

// ------------------------------------------------------------------ replicate experiments

struct ReplicateOptions {
  L1Options joint;                 // joint L1 rule
  int marginal_resolution = 2000;  // midpoints per univariate marginal
};

/// Per-variable MPEL1 (every simplex part, every cube coordinate, then "joint").
struct ReplicateReport {
  std::string scenario;
  int n = 0;
  int replicates = 0;
  std::vector<std::string> variables;
  Eigen::VectorXd mpel1;            // one per variable
  Eigen::MatrixXd per_replicate;    // replicates x variables
  double atom_acceptance = 0.0;
  double degree_acceptance = 0.0;
  double runtime_seconds = 0.0;
};

/// Posterior expected L1 distance of each univariate marginal and the joint for one fit.
Eigen::VectorXd posterior_l1(const Scenario& s, const PosteriorDraws& draws, const ReplicateOptions& options);

/// Replicate r simulates with seed derive_seed(seed, 2r) and fits with derive_seed(seed, 2r+1),
/// where seed is sampler.seed.
ReplicateReport run_replicates(const Scenario& s, int n, int replicates, const SamplerConfig& sampler,
                               const ModelConfig& model, const ReplicateOptions& options = {});

/// Rows are variables, one column per report ("n=250", ...). Reports must share variables.
void write_table_csv(std::ostream& out, const std::vector<ReplicateReport>& reports);
/// Dataset CSV with a header of coordinate names.
void write_dataset_csv(std::ostream& out, const DomainSpec& spec, const std::vector<MixedPoint>& data);

}  // namespace dmbpp
