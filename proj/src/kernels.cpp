#include "dmbpp/kernels.hpp"

#include <array>
#include <string>

namespace dmbpp {

namespace {

constexpr int kFactorialTableSize = 1 << 14;

const std::array<double, kFactorialTableSize>& factorial_table() {
  static const std::array<double, kFactorialTableSize> table = [] {
    std::array<double, kFactorialTableSize> t{};
    for (int n = 0; n < kFactorialTableSize; ++n) t[n] = std::lgamma(n + 1.0);
    return t;
  }();
  return table;
}

void check_size(double count, std::size_t cap) {
  if (count > static_cast<double>(cap)) {
    throw SizeLimit("index set of size " + std::to_string(count) + " exceeds cap " + std::to_string(cap));
  }
}

// Odometer over {lo..hi}^d restricted to sum <= max_sum, last coordinate fastest.
std::vector<MultiIndex> enumerate_bounded(int d, int lo, int hi, int max_sum, std::size_t reserve) {
  std::vector<MultiIndex> out;
  out.reserve(reserve);
  if (d * lo > max_sum || lo > hi) return out;
  MultiIndex j = MultiIndex::Constant(d, lo);
  int sum = d * lo;
  while (true) {
    out.push_back(j);
    // advance: bump the last coordinate that can still grow
    int pos = d - 1;
    while (pos >= 0) {
      if (j[pos] < hi && sum + 1 <= max_sum) {
        ++j[pos];
        ++sum;
        break;
      }
      sum -= j[pos] - lo;
      j[pos] = lo;
      --pos;
    }
    if (pos < 0) break;
  }
  return out;
}

}  // namespace

double log_factorial(int n) {
  if (n < 0) throw InvalidArgument("log_factorial of a negative integer");
  if (n < kFactorialTableSize) return factorial_table()[n];
  return std::lgamma(n + 1.0);
}

double binomial_coefficient(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::round(std::exp(log_factorial(n) - log_factorial(k) - log_factorial(n - k)));
}

std::vector<MultiIndex> enumerate_J(int d, int k, std::size_t cap) {
  if (d < 1 || k < 0) throw InvalidArgument("enumerate_J requires d >= 1 and k >= 0");
  const double count = binomial_coefficient(k + d, d);
  check_size(count, cap);
  return enumerate_bounded(d, 0, k, k, static_cast<std::size_t>(count));
}

std::vector<MultiIndex> enumerate_I(int d, int k, std::size_t cap) {
  if (d < 1 || k < d) throw InvalidArgument("enumerate_I requires k >= d >= 1");
  const double count = binomial_coefficient(k, d);
  check_size(count, cap);
  return enumerate_bounded(d, 1, k, k, static_cast<std::size_t>(count));
}

std::vector<MultiIndex> enumerate_box(int d, int k, std::size_t cap) {
  if (d < 0 || k < 1) throw InvalidArgument("enumerate_box requires d >= 0 and k >= 1");
  const double count = std::pow(static_cast<double>(k), d);
  check_size(count, cap);
  return enumerate_bounded(d, 1, k, d * k, static_cast<std::size_t>(count));
}

DirichletParams alpha_map(int block_degree, int block_dim, const MultiIndex& j) {
  if (j.size() != block_dim) throw InvalidArgument("index length does not match block dimension");
  if ((j.array() < 1).any()) throw InvalidArgument("alpha_map requires strictly positive indices");
  const int total = j.sum();
  if (total > block_degree) throw InvalidArgument("index sum exceeds block degree");
  DirichletParams alpha(block_dim + 1);
  alpha.head(block_dim) = j.cast<double>();
  alpha[block_dim] = static_cast<double>(block_degree + 1 - total);
  return alpha;
}

Cell cell_of(const MultiIndex& j, int k_eff) {
  if (k_eff < 1 || (j.array() < 1).any() || (j.array() > k_eff).any()) {
    throw InvalidArgument("cell index outside 1..k_eff");
  }
  const double k = k_eff;
  return Cell{(j.cast<double>().array() - 1.0) / k, j.cast<double>().array() / k};
}

}  // namespace dmbpp
