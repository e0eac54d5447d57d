#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

#include "dmbpp/errors.hpp"

namespace dmbpp {

/// The product space S_{d_1} x ... x S_{d_M} x [0,1]^{d_{M+1}}.
///
/// Blocks are numbered 1..M+1; block M+1 is the hypercube and always exists,
/// even when it has zero coordinates.
class DomainSpec {
 public:
  DomainSpec() = default;
  DomainSpec(std::vector<int> simplex_dims, int cube_dim);

  const std::vector<int>& simplex_dims() const { return simplex_dims_; }
  int cube_dim() const { return cube_dim_; }

  int num_simplex_blocks() const { return static_cast<int>(simplex_dims_.size()); }
  int num_blocks() const { return num_simplex_blocks() + 1; }
  bool is_simplex(int block) const { return block >= 1 && block <= num_simplex_blocks(); }
  bool is_cube(int block) const { return block == num_blocks(); }
  /// Free coordinates of a 1-based block.
  int block_dim(int block) const;
  int total_dim() const;
  /// Lebesgue volume, prod_m 1/d_m!.
  double volume() const;

  friend bool operator==(const DomainSpec&, const DomainSpec&) = default;

 private:
  std::vector<int> simplex_dims_;
  int cube_dim_ = 0;
};

/// 1-based block identifier; M+1 denotes the hypercube block.
struct BlockIndex {
  int value = 1;
};

void check_block(const DomainSpec& spec, BlockIndex block);

/// One observation in the product space. Simplex blocks hold d_m stored
/// coordinates; the (d_m+1)-th part is implicit.
template <class Scalar>
struct BasicMixedPoint {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<Vector> simplex;
  Vector cube;

  /// Block by 1-based index (M+1 is the cube).
  const Vector& block(int b) const {
    return b <= static_cast<int>(simplex.size()) ? simplex[b - 1] : cube;
  }
  Vector& block(int b) {
    return b <= static_cast<int>(simplex.size()) ? simplex[b - 1] : cube;
  }

  friend bool operator==(const BasicMixedPoint& a, const BasicMixedPoint& b) {
    if (a.simplex.size() != b.simplex.size()) return false;
    for (std::size_t m = 0; m < a.simplex.size(); ++m) {
      if (a.simplex[m].size() != b.simplex[m].size() || a.simplex[m] != b.simplex[m]) return false;
    }
    return a.cube.size() == b.cube.size() && a.cube == b.cube;
  }
};

using MixedPoint = BasicMixedPoint<double>;

/// Validation tolerance on simplex block sums.
inline constexpr double kSimplexTolerance = 1e-12;
/// Interior margin used before likelihood evaluation.
inline constexpr double kDefaultInteriorEpsilon = 1e-6;

/// Throws DimensionMismatch, OutOfRange or SimplexViolation; returns the point unchanged.
const MixedPoint& validate(const MixedPoint& point, const DomainSpec& spec);

/// Checks only the blocks listed as present (others may be empty).
void validate_blocks(const MixedPoint& point, const DomainSpec& spec, const std::vector<bool>& present);

/// Pushes every coordinate to >= epsilon and every simplex block sum to <= 1 - epsilon.
/// Identity on points already satisfying both; idempotent.
MixedPoint clamp_interior(const MixedPoint& point, const DomainSpec& spec,
                          double epsilon = kDefaultInteriorEpsilon);

bool is_interior(const MixedPoint& point, double epsilon);

/// Concatenated coordinates (block 1 first, cube last).
Eigen::VectorXd flatten(const MixedPoint& point);
MixedPoint unflatten(const DomainSpec& spec, const Eigen::VectorXd& flat);

/// Uniform zero point with the block shapes of `spec`.
MixedPoint zero_point(const DomainSpec& spec);

/// Column names x{m}_{l} for simplex parts and x{M+1+l-1} for cube coordinates.
std::vector<std::string> coordinate_names(const DomainSpec& spec);

}  // namespace dmbpp
