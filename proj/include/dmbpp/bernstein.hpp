#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "dmbpp/domain.hpp"
#include "dmbpp/kernels.hpp"

namespace dmbpp {

/// Polynomial degrees (k_1, ..., k_M, k_{M+1}); k_m >= d_m and k_{M+1} >= 1.
struct DegreeVector {
  std::vector<int> k;

  int operator[](int block) const { return k[block - 1]; }  // 1-based
  int& operator[](int block) { return k[block - 1]; }
  friend bool operator==(const DegreeVector&, const DegreeVector&) = default;
};

void check_degrees(const DomainSpec& spec, const DegreeVector& degrees);
/// Lower bound of the degree of a 1-based block.
int degree_lower_bound(const DomainSpec& spec, int block);

/// Dense lexicographic layout of the composite index set
/// I_{d_1}^{k_1} x ... x I_{d_M}^{k_M} x {1..k_{M+1}}^{d_{M+1}}.
/// Block 1 is the most significant digit; the cube block varies fastest.
class IndexLayout {
 public:
  IndexLayout() = default;
  IndexLayout(const DomainSpec& spec, const DegreeVector& degrees,
              std::size_t cap = kDefaultEnumerationCap);

  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const std::vector<MultiIndex>& block_indices(int block) const { return blocks_[block - 1]; }
  Eigen::Index block_size(int block) const { return static_cast<Eigen::Index>(blocks_[block - 1].size()); }
  Eigen::Index size() const { return size_; }

  /// Per-block positions (0-based, in block order) of a composite position.
  std::vector<Eigen::Index> unravel(Eigen::Index flat) const;
  Eigen::Index ravel(const std::vector<Eigen::Index>& digits) const;
  /// Position of a block index within its block's list, or -1.
  Eigen::Index find(int block, const MultiIndex& j) const;

 private:
  std::vector<std::vector<MultiIndex>> blocks_;
  Eigen::Index size_ = 0;
};

/// Cell weights F(A_{j_1,...,j_{M+1}}) over the composite layout.
struct WeightTable {
  DomainSpec spec;
  DegreeVector degrees;
  IndexLayout layout;
  Eigen::VectorXd weights;
};

/// Validates non-negativity and unit sum (tolerance 1e-10).
WeightTable make_weight_table(const DomainSpec& spec, const DegreeVector& degrees, Eigen::VectorXd weights);

/// Unit weight on one composite cell.
WeightTable point_mass_table(const DomainSpec& spec, const DegreeVector& degrees,
                             const std::vector<MultiIndex>& block_indices);

/// Function evaluated on flattened coordinates (arguments may exceed 1).
using CdfFunction = std::function<double(const Eigen::VectorXd&)>;

/// The degree-(k_1..k_{M+1}) Bernstein polynomial of F evaluated at x.
double mbp_cdf(const CdfFunction& F, const DomainSpec& spec, const DegreeVector& degrees,
               const MixedPoint& x, std::size_t cap = kDefaultEnumerationCap);

/// Mass of one block cell (for the cube block: the product box over all cube coordinates).
using BlockMeasure = std::function<double(const Cell&)>;

/// A probability measure on the product space, queried on products of cells.
///
/// Measures given as mixtures of per-block product measures are evaluated
/// block-wise, which keeps weight construction linear in the block index set sizes.
class MeasureOracle {
 public:
  using CellMass = std::function<double(const std::vector<Cell>&)>;

  static MeasureOracle general(CellMass mass);
  static MeasureOracle product_mixture(std::vector<double> weights,
                                       std::vector<std::vector<BlockMeasure>> components);

  double mass(const std::vector<Cell>& cells) const;

  bool factorized() const { return !general_; }
  const std::vector<double>& component_weights() const { return weights_; }
  const std::vector<std::vector<BlockMeasure>>& components() const { return components_; }

 private:
  CellMass general_;
  std::vector<double> weights_;
  std::vector<std::vector<BlockMeasure>> components_;
};

/// Uniform distribution on S_d, exact volume of box intersect simplex.
BlockMeasure uniform_simplex_measure(int d);
/// Uniform distribution on [0,1]^d.
BlockMeasure uniform_cube_measure();
/// Dirichlet(alpha) on S_d; cell masses by nested adaptive Gauss-Kronrod quadrature.
BlockMeasure dirichlet_measure(const Eigen::VectorXd& alpha);
/// Independent Beta(a_l, b_l) coordinates.
BlockMeasure beta_product_measure(const std::vector<std::pair<double, double>>& params);
/// Dirac mass at an interior point of the block.
BlockMeasure point_mass_measure(const Eigen::VectorXd& at);

/// Uniform measure on the whole product space.
MeasureOracle uniform_measure(const DomainSpec& spec);

/// Throws NormalizationError when the masses do not sum to 1 within 1e-8.
WeightTable weights_from_measure(const MeasureOracle& F, const DomainSpec& spec, const DegreeVector& degrees);

/// Per-block log kernel values log dir(x_b | alpha(k_b - d_b + 1, j)) (or the Beta product
/// for the cube), one entry per index of the block in layout order.
Eigen::VectorXd block_log_kernels(const DomainSpec& spec, const DegreeVector& degrees,
                                  const IndexLayout& layout, int block, const Eigen::VectorXd& x_block);

double mbp_log_density(const WeightTable& w, const MixedPoint& x);
double mbp_density(const WeightTable& w, const MixedPoint& x);

/// Density of x^{[-i]}: same weights, kernel of block `drop` omitted.
double mbp_log_marginal(const WeightTable& w, BlockIndex drop, const MixedPoint& x_minus);
double mbp_marginal(const WeightTable& w, BlockIndex drop, const MixedPoint& x_minus);

/// Density of block `target` at x_target given the other blocks of x_minus.
/// Throws ZeroMarginal when the conditioning log-density is below -700.
double mbp_log_conditional(const WeightTable& w, BlockIndex target, const Eigen::VectorXd& x_target,
                           const MixedPoint& x_minus);
double mbp_conditional(const WeightTable& w, BlockIndex target, const Eigen::VectorXd& x_target,
                       const MixedPoint& x_minus);

/// Log conditioning density below which conditionals are refused.
inline constexpr double kZeroMarginalLog = -700.0;

}  // namespace dmbpp
