#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "dmbpp/gibbs.hpp"

namespace dmbpp {

// ------------------------------------------------------------------ coordinate subsets

/// Kept variables of a marginal. Simplex parts are numbered 0..d per block, where part d is
/// the implicit remainder 1 - sum(x); a block may keep any proper subset of its d+1 parts.
struct MarginalSubset {
  std::vector<std::vector<int>> simplex_parts;
  std::vector<bool> cube_keep;

  static MarginalSubset all(const DomainSpec& spec);
  static MarginalSubset none(const DomainSpec& spec);
};

/// Throws UnsupportedSubset for subsets that keep nothing, keep all d+1 parts of a block,
/// or list parts out of order.
void check_subset(const DomainSpec& spec, const MarginalSubset& subset);

/// Every block integrated out except `drop`, which is removed.
MarginalSubset drop_block(const DomainSpec& spec, BlockIndex drop);

/// Variables in report order: parts 1..d+1 of each simplex block, then the cube coordinates.
std::vector<std::string> variable_names(const DomainSpec& spec);
/// The one-variable subset of variable_names(spec)[index].
MarginalSubset single_variable(const DomainSpec& spec, int index);

/// Space of the kept variables: one simplex block per block with kept parts, then the kept
/// cube coordinates.
DomainSpec subset_domain(const DomainSpec& spec, const MarginalSubset& subset);
/// Kept variables of a full point, as a point of subset_domain.
MixedPoint project(const MixedPoint& point, const DomainSpec& spec, const MarginalSubset& subset);

// ------------------------------------------------------------------ per-state densities

/// n x N log kernel values of each atom's marginal on points of subset_domain.
Eigen::MatrixXd marginal_log_kernel_matrix(const MixtureState& state, const DomainSpec& spec,
                                           const MarginalSubset& subset, const PreparedData& points);

/// Mixture density at every prepared point of the full space.
Eigen::VectorXd mixture_density_values(const MixtureState& state, const PreparedData& points);
Eigen::VectorXd mixture_marginal_values(const MixtureState& state, const DomainSpec& spec,
                                        const MarginalSubset& subset, const PreparedData& points);

double mixture_marginal_logpdf(const MixtureState& state, const DomainSpec& spec, const MarginalSubset& subset,
                               const MixedPoint& x_partial);

/// Normalized atom weights W_j proportional to w_j times the off-target kernel factors at x_minus.
/// Throws ZeroMarginal when the conditioning density underflows.
Eigen::VectorXd conditional_weights(const MixtureState& state, const DomainSpec& spec, BlockIndex target,
                                    const MixedPoint& x_minus);

/// Conditional density of the target block at points of the target block's own domain.
Eigen::VectorXd mixture_conditional_values(const MixtureState& state, const DomainSpec& spec, BlockIndex target,
                                           const MixedPoint& x_minus, const PreparedData& target_points);
double mixture_conditional_logpdf(const MixtureState& state, const DomainSpec& spec, BlockIndex target,
                                  const Eigen::VectorXd& x_target, const MixedPoint& x_minus);

/// Domain of a single block: S_d for simplex blocks, [0,1]^{d} for the cube.
DomainSpec block_domain(const DomainSpec& spec, BlockIndex block);

// ------------------------------------------------------------------ grids and integration

/// Midpoint rule with `resolution` steps per axis. Simplex blocks of dimension 1 and 2 use the
/// uniform triangulation and its centroids; larger simplex blocks use cube cells whose
/// midpoints fall inside the simplex.
struct GridSpec {
  std::vector<int> resolution;  // one per block
};

GridSpec uniform_grid_spec(const DomainSpec& spec, int resolution);

/// Points with quadrature weights summing to the Lebesgue volume of the space.
struct IntegrationRule {
  DomainSpec spec;
  std::vector<MixedPoint> points;
  Eigen::VectorXd weights;
};

IntegrationRule make_grid(const DomainSpec& spec, const GridSpec& grid);
/// Uniform draws with equal weights volume / draws.
IntegrationRule make_mc_rule(const DomainSpec& spec, long draws, std::uint64_t seed);

enum class L1Method { Grid, MonteCarlo };

struct L1Options {
  L1Method method = L1Method::Grid;
  int grid_resolution = 40;
  long mc_draws = 200'000;
  std::uint64_t seed = 1;
};

/// The grid rule is used only when the total dimension is at most 3 and no simplex block
/// exceeds dimension 2; otherwise Monte Carlo. Throws BudgetTooSmall for resolutions below 4
/// or fewer than 1000 draws.
IntegrationRule integration_rule(const DomainSpec& spec, const L1Options& options);

using DensityFn = std::function<double(const MixedPoint&)>;

double l1_distance(const DensityFn& f, const DensityFn& g, const DomainSpec& spec, const L1Options& options = {});
/// sum_i weight_i |f_i - g_i|.
double l1_distance(const Eigen::VectorXd& f, const Eigen::VectorXd& g, const IntegrationRule& rule);

/// Arithmetic mean of per-replicate posterior expected L1 distances; EmptyInput when empty.
double mpel1(const std::vector<double>& per_replicate);

// ------------------------------------------------------------------ posterior summaries

struct DensityEstimate {
  std::vector<std::string> coord_names;
  Eigen::MatrixXd coords;  // one row per point
  Eigen::VectorXd mean;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double lower_level = 0.025;
  double upper_level = 0.975;
};

/// Linear-interpolation sample quantile (the "type 7" rule).
double quantile(std::vector<double> values, double level);

/// Pointwise mean and quantiles of a (points x draws) matrix.
DensityEstimate summarize(const std::vector<MixedPoint>& points, const std::vector<std::string>& names,
                          const Eigen::MatrixXd& values, double lower_level = 0.025, double upper_level = 0.975);

DensityEstimate predictive_density(const PosteriorDraws& draws, const std::vector<MixedPoint>& points);
DensityEstimate predictive_marginal(const PosteriorDraws& draws, const MarginalSubset& subset,
                                    const std::vector<MixedPoint>& points);
DensityEstimate predictive_conditional(const PosteriorDraws& draws, BlockIndex target, const MixedPoint& x_minus,
                                       const std::vector<MixedPoint>& points);

/// Center and shape matrix; the region is {y : (y - center)' shape^{-1} (y - center) <= 1}.
struct Ellipse {
  Eigen::Vector2d center;
  Eigen::Matrix2d shape;
  double level = 0.95;
};

/// Sample mean and covariance of the rows of `samples` (n x 2), covariance scaled by the
/// chi-square(2) quantile at `level`.
Ellipse credible_ellipse(const Eigen::MatrixX2d& samples, double level = 0.95);
bool contains(const Ellipse& e, const Eigen::Vector2d& y);

/// Per-draw conditional means of a two-coordinate target block (draws x 2).
Eigen::MatrixX2d conditional_means(const PosteriorDraws& draws, BlockIndex target, const MixedPoint& x_minus);
Ellipse conditional_mean_region(const PosteriorDraws& draws, BlockIndex target, const MixedPoint& x_minus,
                                double level = 0.95);

/// Columns: coordinates, mean, lower and upper quantile (named q025, q975 for the defaults).
void write_density_csv(std::ostream& out, const DensityEstimate& est);
/// Columns: level,center1,center2,shape11,shape12,shape22.
void write_ellipse_csv(std::ostream& out, const Ellipse& e);

}  // namespace dmbpp
