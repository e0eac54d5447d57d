#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "dmbpp/errors.hpp"

namespace dmbpp {

/// Lattice index j = (j_1, ..., j_d).
using MultiIndex = Eigen::VectorXi;
/// Dirichlet parameter vector of length d+1.
using DirichletParams = Eigen::VectorXd;

/// Half-open box prod_l ((j_l - 1)/k, j_l/k].
struct Cell {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Default cap on enumerated index-set sizes.
inline constexpr std::size_t kDefaultEnumerationCap = 10'000'000;

/// log((n)!) from a precomputed table for small n, std::lgamma above it.
double log_factorial(int n);

/// Numerically stable log(sum(exp(v))). Returns -inf for an empty or all -inf input.
template <class Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  if (v.size() == 0) return Scalar(kNegInf);
  const Scalar m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.derived().array() - m).exp().sum());
}

inline double log_sum_exp(const std::vector<double>& v) {
  return log_sum_exp(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

namespace detail {
// a * log(x) with the 0 * log(0) = 0 convention
template <class Scalar>
Scalar xlogy(Scalar a, Scalar x) {
  if (a == Scalar(0)) return Scalar(0);
  return a * std::log(x);
}
}  // namespace detail

/// log of C(k,j) x^j (1-x)^(k-j).
template <class Scalar>
Scalar log_binomial_pmf(int j, int k, Scalar x) {
  if (j < 0 || k < 0 || j > k) throw InvalidArgument("binomial index outside 0..k");
  if (!(x >= Scalar(0) && x <= Scalar(1))) throw InvalidArgument("binomial probability outside [0,1]");
  return Scalar(log_factorial(k) - log_factorial(j) - log_factorial(k - j)) +
         detail::xlogy(Scalar(j), x) + detail::xlogy(Scalar(k - j), Scalar(1) - x);
}

/// log of the multinomial pmf with d free cells and an implicit remainder cell.
template <class Scalar>
Scalar log_multinomial_pmf(const MultiIndex& j, int k,
                           const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x) {
  if (j.size() != x.size()) throw InvalidArgument("multinomial index and probability lengths differ");
  if ((j.array() < 0).any()) throw InvalidArgument("negative multinomial index");
  const int total = j.sum();
  if (total > k) throw InvalidArgument("multinomial index sum exceeds k");
  Scalar rest = Scalar(1) - x.sum();
  if (rest < Scalar(0)) rest = Scalar(0);
  Scalar out = Scalar(log_factorial(k) - log_factorial(k - total));
  for (Eigen::Index l = 0; l < j.size(); ++l) {
    out += detail::xlogy(Scalar(j[l]), x[l]) - Scalar(log_factorial(j[l]));
  }
  return out + detail::xlogy(Scalar(k - total), rest);
}

/// Dirichlet log density on the d free coordinates; alpha has length d+1.
template <class Scalar>
Scalar log_dirichlet_pdf(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x,
                         const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& alpha) {
  using std::lgamma;
  using std::log;
  if (alpha.size() != x.size() + 1) throw InvalidArgument("Dirichlet parameter length must be d+1");
  if (!((alpha.array() > Scalar(0)).all())) throw InvalidArgument("non-positive Dirichlet parameter");
  const Scalar rest = Scalar(1) - x.sum();
  if ((x.array() < Scalar(0)).any() || rest < Scalar(0)) return Scalar(kNegInf);
  Scalar out = lgamma(alpha.sum());
  for (Eigen::Index l = 0; l < alpha.size(); ++l) {
    const Scalar xl = l < x.size() ? x[l] : rest;
    out += detail::xlogy(alpha[l] - Scalar(1), xl) - lgamma(alpha[l]);
  }
  return out;
}

template <class Scalar>
Scalar log_beta_pdf(Scalar x, Scalar a, Scalar b) {
  using std::lgamma;
  if (!(a > Scalar(0) && b > Scalar(0))) throw InvalidArgument("non-positive Beta parameter");
  if (x < Scalar(0) || x > Scalar(1)) return Scalar(kNegInf);
  return lgamma(a + b) - lgamma(a) - lgamma(b) + detail::xlogy(a - Scalar(1), x) +
         detail::xlogy(b - Scalar(1), Scalar(1) - x);
}

/// All j in {0..k}^d with sum(j) <= k, lexicographic order.
std::vector<MultiIndex> enumerate_J(int d, int k, std::size_t cap = kDefaultEnumerationCap);
/// The subset of enumerate_J with every entry >= 1; has C(k,d) elements.
std::vector<MultiIndex> enumerate_I(int d, int k, std::size_t cap = kDefaultEnumerationCap);
/// {1..k}^d in lexicographic order (the hypercube index set).
std::vector<MultiIndex> enumerate_box(int d, int k, std::size_t cap = kDefaultEnumerationCap);

/// (j_1, ..., j_d, k_l + 1 - sum j) for j in I_{d_l}^{k_l}.
DirichletParams alpha_map(int block_degree, int block_dim, const MultiIndex& j);

/// prod_l ((j_l - 1)/k_eff, j_l/k_eff].
Cell cell_of(const MultiIndex& j, int k_eff);

/// Effective grid resolution of a block: k - d + 1 for simplex blocks, k for the cube.
inline int effective_degree(int degree, int dim, bool simplex) { return simplex ? degree - dim + 1 : degree; }

double binomial_coefficient(int n, int k);

}  // namespace dmbpp
