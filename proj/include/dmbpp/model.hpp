#pragma once

#include <Eigen/Dense>

#include <variant>
#include <vector>

#include "dmbpp/bernstein.hpp"
#include "dmbpp/domain.hpp"
#include "dmbpp/kernels.hpp"
#include "dmbpp/random.hpp"

namespace dmbpp {

/// k_l ~ Poisson(lambda_l) restricted to k_l >= lower bound and renormalized.
struct TruncatedPoisson {
  std::vector<double> lambda;  // one per block
};

/// Poisson(lambda_l) head on [lower bound, k_tilde), then the stretched-exponential tail
/// P(k_l > k_tilde + j) = (1 - C) exp(-lambda_l (j + k_tilde)^{(M+1)d}) for j >= 1.
/// The mass left at k_tilde itself is whatever makes the pmf sum to one.
struct TailModified {
  std::vector<double> lambda;
  int k_tilde = 30;
};

using DegreePrior = std::variant<TruncatedPoisson, TailModified>;

struct GammaPrior {
  double shape = 1.0;
  double rate = 1.0;
};

struct ModelConfig {
  DomainSpec spec;
  int truncation = 25;
  DegreePrior degree_prior;
  GammaPrior precision_prior;
  double interior_epsilon = kDefaultInteriorEpsilon;
};

inline constexpr double kDefaultDegreeLambda = 15.0;

/// N = 25, Gamma(1,1) precision, truncated Poisson(15) degrees.
ModelConfig default_model_config(const DomainSpec& spec);
void check_config(const ModelConfig& config);

/// One state of the truncated stick-breaking mixture. Labels are 0-based atom positions.
struct MixtureState {
  Eigen::VectorXd v;               // N-1 stick fractions
  Eigen::VectorXd w;               // N weights
  std::vector<MixedPoint> theta;   // N atoms
  std::vector<int> xi;             // n labels in 0..N-1
  double M0 = 1.0;
  DegreeVector k;

  int truncation() const { return static_cast<int>(w.size()); }
};

/// Throws InvalidArgument naming the violated invariant.
void check_state(const MixtureState& state, const ModelConfig& config);

/// w_j = v_j prod_{l<j}(1 - v_l) for j < N, w_N = 1 - sum_{l<N} w_l.
Eigen::VectorXd stick_to_weights(const Eigen::VectorXd& v);

/// ceil(k theta) repaired into I_d^k: zero entries lifted to 1, then the largest entry
/// (ties to the highest coordinate) decremented until the sum is at most k.
MultiIndex ceil_map(int k, int d, const Eigen::VectorXd& theta_block);
/// ceil(k theta) per cube coordinate, clamped to 1..k.
MultiIndex ceil_map_cube(int k, const Eigen::VectorXd& theta_block);
/// Per-block kernel indices of an atom.
std::vector<MultiIndex> atom_indices(const DomainSpec& spec, const DegreeVector& k, const MixedPoint& theta);

double kernel_logpdf(const MixedPoint& x, const MixedPoint& theta, const DegreeVector& k, const DomainSpec& spec);

/// Log prior mass of the degree of one 1-based block; OutOfSupport below the lower bound.
double degree_prior_block_logpmf(const DegreePrior& prior, const DomainSpec& spec, int block, int k);
double degree_prior_logpmf(const DegreePrior& prior, const DomainSpec& spec, const DegreeVector& k);
/// P(k_block > k) under the prior.
double degree_prior_survival(const DegreePrior& prior, const DomainSpec& spec, int block, int k);
int sample_degree(const DegreePrior& prior, const DomainSpec& spec, int block, Rng& rng);

/// Draw from F_0: uniform Dirichlet per simplex block, uniform cube coordinates.
MixedPoint sample_base_measure(const DomainSpec& spec, Rng& rng);

/// Prior draw with no labels.
MixtureState sample_prior(const ModelConfig& config, Rng& rng);

double mixture_logpdf(const MixedPoint& x, const MixtureState& state, const DomainSpec& spec);

// ------------------------------------------------------------------ fast kernel evaluation

/// Log-kernel of one block as an affine function of the point's log coordinates:
/// log K = log_norm + exponents . log_coords.
struct BlockKernel {
  double log_norm = 0.0;
  Eigen::VectorXd exponents;
};

/// Simplex blocks use the d+1 parts (x, 1 - sum x); the cube uses (x_l, 1 - x_l) pairs.
BlockKernel make_block_kernel(const DomainSpec& spec, int block, int degree, const MultiIndex& j);

/// Observations stored as per-block matrices of log coordinates.
class PreparedData {
 public:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  PreparedData() = default;
  /// Points must be strictly interior.
  PreparedData(const DomainSpec& spec, const std::vector<MixedPoint>& points);

  Eigen::Index size() const { return n_; }
  const DomainSpec& spec() const { return spec_; }
  const RowMatrix& log_coords(int block) const { return logs_[block - 1]; }

  /// Block log-kernel of observation i.
  double block_log_kernel(Eigen::Index i, int block, const BlockKernel& kernel) const {
    return kernel.log_norm + logs_[block - 1].row(i).dot(kernel.exponents);
  }
  /// Block log-kernel of every observation.
  Eigen::VectorXd block_log_kernel(int block, const BlockKernel& kernel) const {
    return (logs_[block - 1] * kernel.exponents).array() + kernel.log_norm;
  }

 private:
  DomainSpec spec_;
  Eigen::Index n_ = 0;
  std::vector<RowMatrix> logs_;
};

/// n x N matrix of log K(x_i | theta_j, k).
Eigen::MatrixXd log_kernel_matrix(const PreparedData& data, const MixtureState& state);

}  // namespace dmbpp
