#include "dmbpp/bernstein.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dmbpp {

int degree_lower_bound(const DomainSpec& spec, int block) {
  return spec.is_simplex(block) ? spec.block_dim(block) : 1;
}

void check_degrees(const DomainSpec& spec, const DegreeVector& degrees) {
  if (static_cast<int>(degrees.k.size()) != spec.num_blocks()) {
    throw InvalidArgument("degree vector needs one entry per block (M+1)");
  }
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    if (degrees[b] < degree_lower_bound(spec, b)) {
      throw InvalidArgument("degree of block " + std::to_string(b) + " below its lower bound");
    }
  }
}

// ---------------------------------------------------------------- layout

IndexLayout::IndexLayout(const DomainSpec& spec, const DegreeVector& degrees, std::size_t cap) {
  check_degrees(spec, degrees);
  double total = 1.0;
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    if (spec.is_simplex(b)) {
      blocks_.push_back(enumerate_I(spec.block_dim(b), degrees[b], cap));
    } else {
      blocks_.push_back(enumerate_box(spec.cube_dim(), degrees[b], cap));
    }
    total *= static_cast<double>(blocks_.back().size());
  }
  if (total > static_cast<double>(cap)) throw SizeLimit("composite index set exceeds cap");
  size_ = static_cast<Eigen::Index>(total);
}

std::vector<Eigen::Index> IndexLayout::unravel(Eigen::Index flat) const {
  std::vector<Eigen::Index> digits(blocks_.size());
  for (int b = num_blocks(); b >= 1; --b) {
    const Eigen::Index n = block_size(b);
    digits[b - 1] = flat % n;
    flat /= n;
  }
  return digits;
}

Eigen::Index IndexLayout::ravel(const std::vector<Eigen::Index>& digits) const {
  Eigen::Index flat = 0;
  for (int b = 1; b <= num_blocks(); ++b) flat = flat * block_size(b) + digits[b - 1];
  return flat;
}

Eigen::Index IndexLayout::find(int block, const MultiIndex& j) const {
  const auto& list = blocks_[block - 1];
  auto it = std::lower_bound(list.begin(), list.end(), j, [](const MultiIndex& a, const MultiIndex& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  });
  if (it == list.end() || *it != j) return -1;
  return static_cast<Eigen::Index>(it - list.begin());
}

WeightTable make_weight_table(const DomainSpec& spec, const DegreeVector& degrees, Eigen::VectorXd weights) {
  IndexLayout layout(spec, degrees);
  if (weights.size() != layout.size()) throw InvalidArgument("weight vector length does not match layout");
  if ((weights.array() < 0.0).any()) throw InvalidArgument("negative cell weight");
  if (std::abs(weights.sum() - 1.0) > 1e-10) throw NormalizationError("cell weights do not sum to 1");
  return WeightTable{spec, degrees, std::move(layout), std::move(weights)};
}

WeightTable point_mass_table(const DomainSpec& spec, const DegreeVector& degrees,
                             const std::vector<MultiIndex>& block_indices) {
  IndexLayout layout(spec, degrees);
  std::vector<Eigen::Index> digits;
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    const Eigen::Index at = layout.find(b, block_indices[b - 1]);
    if (at < 0) throw InvalidArgument("index not in block " + std::to_string(b) + " index set");
    digits.push_back(at);
  }
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(layout.size());
  weights[layout.ravel(digits)] = 1.0;
  return WeightTable{spec, degrees, std::move(layout), std::move(weights)};
}

// ---------------------------------------------------------------- CDF operator

double mbp_cdf(const CdfFunction& F, const DomainSpec& spec, const DegreeVector& degrees,
               const MixedPoint& x, std::size_t cap) {
  check_degrees(spec, degrees);
  validate(x, spec);
  const int B = spec.num_blocks();
  std::vector<std::vector<MultiIndex>> sets(B);
  std::vector<Eigen::VectorXd> log_pmf(B);
  std::vector<double> scale(B);
  for (int b = 1; b <= B; ++b) {
    const int k = degrees[b];
    const int d = spec.block_dim(b);
    const auto& xb = x.block(b);
    if (spec.is_simplex(b)) {
      sets[b - 1] = enumerate_J(d, k, cap);
      scale[b - 1] = k - d + 1;
      log_pmf[b - 1].resize(static_cast<Eigen::Index>(sets[b - 1].size()));
      for (std::size_t i = 0; i < sets[b - 1].size(); ++i) {
        log_pmf[b - 1][static_cast<Eigen::Index>(i)] = log_multinomial_pmf<double>(sets[b - 1][i], k, xb);
      }
    } else {
      // {0..k}^d
      sets[b - 1].clear();
      for (const auto& j : enumerate_box(d, k + 1, cap)) sets[b - 1].push_back((j.array() - 1).matrix());
      scale[b - 1] = k;
      log_pmf[b - 1].resize(static_cast<Eigen::Index>(sets[b - 1].size()));
      for (std::size_t i = 0; i < sets[b - 1].size(); ++i) {
        double s = 0.0;
        for (int l = 0; l < d; ++l) s += log_binomial_pmf<double>(sets[b - 1][i][l], k, xb[l]);
        log_pmf[b - 1][static_cast<Eigen::Index>(i)] = s;
      }
    }
  }

  const int d_total = spec.total_dim();
  Eigen::VectorXd arg(d_total);
  std::vector<std::size_t> digit(B, 0);
  double total = 0.0;
  while (true) {
    double lp = 0.0;
    Eigen::Index at = 0;
    for (int b = 0; b < B; ++b) {
      lp += log_pmf[b][static_cast<Eigen::Index>(digit[b])];
      const auto& j = sets[b][digit[b]];
      for (Eigen::Index l = 0; l < j.size(); ++l) arg[at++] = j[l] / scale[b];
    }
    if (lp > kNegInf) total += F(arg) * std::exp(lp);
    int pos = B - 1;
    while (pos >= 0 && ++digit[pos] == sets[pos].size()) {
      digit[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return total;
}

// ---------------------------------------------------------------- measures

MeasureOracle MeasureOracle::general(CellMass mass) {
  MeasureOracle m;
  m.general_ = std::move(mass);
  return m;
}

MeasureOracle MeasureOracle::product_mixture(std::vector<double> weights,
                                             std::vector<std::vector<BlockMeasure>> components) {
  if (weights.size() != components.size() || weights.empty()) {
    throw InvalidArgument("product mixture needs one weight per component");
  }
  MeasureOracle m;
  m.weights_ = std::move(weights);
  m.components_ = std::move(components);
  return m;
}

double MeasureOracle::mass(const std::vector<Cell>& cells) const {
  if (general_) return general_(cells);
  double total = 0.0;
  for (std::size_t c = 0; c < components_.size(); ++c) {
    double p = weights_[c];
    for (std::size_t b = 0; b < cells.size() && p > 0.0; ++b) p *= components_[c][b](cells[b]);
    total += p;
  }
  return total;
}

namespace {

// Volume of {s in [0,u] : sum s <= 1} by inclusion-exclusion over the box faces.
double simplex_box_volume(const Eigen::VectorXd& u) {
  const int d = static_cast<int>(u.size());
  double vol = 0.0;
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    double shift = 0.0;
    int bits = 0;
    for (int l = 0; l < d; ++l) {
      if (mask & (1u << l)) {
        shift += u[l];
        ++bits;
      }
    }
    const double r = 1.0 - shift;
    if (r > 0.0) vol += ((bits % 2) ? -1.0 : 1.0) * std::pow(r, d);
  }
  return vol / std::tgamma(d + 1.0);
}

// Mass of a box (lower, upper] from a corner function G(u) = mass of [0,u].
template <class CornerFn>
double box_mass(const Cell& cell, CornerFn&& corner) {
  const int d = static_cast<int>(cell.lower.size());
  double total = 0.0;
  Eigen::VectorXd u(d);
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    int lows = 0;
    for (int l = 0; l < d; ++l) {
      const bool low = mask & (1u << l);
      u[l] = std::clamp(low ? cell.lower[l] : cell.upper[l], 0.0, 1.0);
      lows += low;
    }
    total += ((lows % 2) ? -1.0 : 1.0) * corner(u);
  }
  return total;
}

double beta_interval(double a, double b, double lo, double hi) {
  lo = std::clamp(lo, 0.0, 1.0);
  hi = std::clamp(hi, 0.0, 1.0);
  if (hi <= lo) return 0.0;
  // upper tails through the complement
  if (lo > a / (a + b)) return boost::math::ibetac(a, b, lo) - boost::math::ibetac(a, b, hi);
  return boost::math::ibeta(a, b, hi) - boost::math::ibeta(a, b, lo);
}

// P(lower < x_l <= upper for l >= from) where the remaining coordinates are `room` times a
// Dirichlet(alpha[from..]) vector.
double dirichlet_box(const Eigen::VectorXd& alpha, const Cell& cell, Eigen::Index from, double room) {
  const Eigen::Index d = cell.lower.size();
  const double a = alpha[from];
  const double b = alpha.tail(alpha.size() - from - 1).sum();
  const double lo = std::max(cell.lower[from], 0.0);
  const double hi = std::min(cell.upper[from], room);
  if (hi <= lo || room <= 0.0) return 0.0;
  if (from == d - 1) return beta_interval(a, b, lo / room, hi / room);
  auto integrand = [&](double t) {
    const double pdf = boost::math::ibeta_derivative(a, b, std::clamp(t / room, 0.0, 1.0)) / room;
    if (pdf == 0.0) return 0.0;
    return pdf * dirichlet_box(alpha, cell, from + 1, room - t);
  };
  // the inner mass has kinks where room - t meets a sum of the remaining bounds; integrate
  // between them so each piece is smooth
  std::vector<double> offsets{0.0};
  for (Eigen::Index l = from + 1; l < d; ++l) {
    const std::size_t n = offsets.size();
    for (std::size_t i = 0; i < n; ++i) {
      offsets.push_back(offsets[i] + std::max(cell.lower[l], 0.0));
      offsets.push_back(offsets[i] + cell.upper[l]);
    }
  }
  std::vector<double> cuts{lo, hi};
  for (double c : offsets) {
    if (room - c > lo && room - c < hi) cuts.push_back(room - c);
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] > cuts[i]) {
      total += boost::math::quadrature::gauss_kronrod<double, 21>::integrate(integrand, cuts[i], cuts[i + 1], 4, 1e-11);
    }
  }
  return total;
}

}  // namespace

BlockMeasure uniform_simplex_measure(int d) {
  const double vol = 1.0 / std::tgamma(d + 1.0);
  return [vol](const Cell& cell) { return box_mass(cell, simplex_box_volume) / vol; };
}

BlockMeasure uniform_cube_measure() {
  return [](const Cell& cell) {
    double p = 1.0;
    for (Eigen::Index l = 0; l < cell.lower.size(); ++l) {
      p *= std::max(0.0, std::min(cell.upper[l], 1.0) - std::max(cell.lower[l], 0.0));
    }
    return p;
  };
}

BlockMeasure dirichlet_measure(const Eigen::VectorXd& alpha) {
  if ((alpha.array() <= 0.0).any() || alpha.size() < 2) throw InvalidArgument("invalid Dirichlet parameters");
  return [alpha](const Cell& cell) {
    if (cell.lower.size() != alpha.size() - 1) throw InvalidArgument("cell dimension does not match Dirichlet");
    return dirichlet_box(alpha, cell, 0, 1.0);
  };
}

BlockMeasure beta_product_measure(const std::vector<std::pair<double, double>>& params) {
  return [params](const Cell& cell) {
    if (cell.lower.size() != static_cast<Eigen::Index>(params.size())) {
      throw InvalidArgument("cell dimension does not match Beta product");
    }
    double p = 1.0;
    for (std::size_t l = 0; l < params.size(); ++l) {
      const auto i = static_cast<Eigen::Index>(l);
      p *= beta_interval(params[l].first, params[l].second, cell.lower[i], cell.upper[i]);
    }
    return p;
  };
}

BlockMeasure point_mass_measure(const Eigen::VectorXd& at) {
  return [at](const Cell& cell) {
    return ((at.array() > cell.lower.array()).all() && (at.array() <= cell.upper.array()).all()) ? 1.0 : 0.0;
  };
}

MeasureOracle uniform_measure(const DomainSpec& spec) {
  std::vector<BlockMeasure> blocks;
  for (int d : spec.simplex_dims()) blocks.push_back(uniform_simplex_measure(d));
  blocks.push_back(uniform_cube_measure());
  return MeasureOracle::product_mixture({1.0}, {std::move(blocks)});
}

namespace {

std::vector<Cell> composite_cells(const DomainSpec& spec, const DegreeVector& degrees, const IndexLayout& layout,
                                  const std::vector<Eigen::Index>& digits) {
  std::vector<Cell> cells;
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    const auto& j = layout.block_indices(b)[static_cast<std::size_t>(digits[b - 1])];
    const int k_eff = effective_degree(degrees[b], spec.block_dim(b), spec.is_simplex(b));
    cells.push_back(j.size() == 0 ? Cell{} : cell_of(j, k_eff));
  }
  return cells;
}

}  // namespace

WeightTable weights_from_measure(const MeasureOracle& F, const DomainSpec& spec, const DegreeVector& degrees) {
  IndexLayout layout(spec, degrees);
  const int B = spec.num_blocks();
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(layout.size());

  if (F.factorized()) {
    for (std::size_t c = 0; c < F.components().size(); ++c) {
      const auto& comp = F.components()[c];
      if (static_cast<int>(comp.size()) != B) throw InvalidArgument("measure component needs one factor per block");
      // Kronecker product of per-block cell masses, block 1 most significant
      Eigen::VectorXd acc = Eigen::VectorXd::Constant(1, F.component_weights()[c]);
      for (int b = 1; b <= B; ++b) {
        const int k_eff = effective_degree(degrees[b], spec.block_dim(b), spec.is_simplex(b));
        const auto& list = layout.block_indices(b);
        Eigen::VectorXd masses(static_cast<Eigen::Index>(list.size()));
        for (std::size_t i = 0; i < list.size(); ++i) {
          masses[static_cast<Eigen::Index>(i)] = list[i].size() == 0 ? 1.0 : comp[b - 1](cell_of(list[i], k_eff));
        }
        Eigen::VectorXd next(acc.size() * masses.size());
        for (Eigen::Index r = 0; r < acc.size(); ++r) next.segment(r * masses.size(), masses.size()) = acc[r] * masses;
        acc = std::move(next);
      }
      weights += acc;
    }
  } else {
    for (Eigen::Index c = 0; c < layout.size(); ++c) {
      weights[c] = F.mass(composite_cells(spec, degrees, layout, layout.unravel(c)));
    }
  }
  weights = weights.cwiseMax(0.0);
  const double total = weights.sum();
  if (std::abs(total - 1.0) > 1e-8) {
    throw NormalizationError("cell masses sum to " + std::to_string(total));
  }
  weights /= total;
  return WeightTable{spec, degrees, std::move(layout), std::move(weights)};
}

// ---------------------------------------------------------------- density, marginal, conditional

Eigen::VectorXd block_log_kernels(const DomainSpec& spec, const DegreeVector& degrees, const IndexLayout& layout,
                                  int block, const Eigen::VectorXd& x_block) {
  const auto& list = layout.block_indices(block);
  const int k = degrees[block];
  const int d = spec.block_dim(block);
  if (x_block.size() != d) throw DimensionMismatch("block " + std::to_string(block) + " has wrong length");
  // integer parameters: normalizers are factorial ratios, so only the logs of x are needed
  const auto xlog = [](int a, double lx) { return a == 0 ? 0.0 : a * lx; };
  const double log_k = log_factorial(k);
  Eigen::VectorXd out(static_cast<Eigen::Index>(list.size()));
  if (spec.is_simplex(block)) {
    const double rest = 1.0 - x_block.sum();
    if ((x_block.array() < 0.0).any() || rest < 0.0) return Eigen::VectorXd::Constant(out.size(), kNegInf);
    const Eigen::ArrayXd lx = x_block.array().log();
    const double lrest = std::log(rest);
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& j = list[i];
      const int last = k - j.sum();  // alpha - 1 of the implicit part
      double v = log_k - log_factorial(last) + xlog(last, lrest);
      for (int l = 0; l < d; ++l) v += xlog(j[l] - 1, lx[l]) - log_factorial(j[l] - 1);
      out[static_cast<Eigen::Index>(i)] = v;
    }
  } else {
    if ((x_block.array() < 0.0).any() || (x_block.array() > 1.0).any()) {
      return Eigen::VectorXd::Constant(out.size(), kNegInf);
    }
    const Eigen::ArrayXd lx = x_block.array().log();
    const Eigen::ArrayXd l1x = (-x_block.array()).log1p();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& j = list[i];
      double v = 0.0;
      for (int l = 0; l < d; ++l) {
        v += log_k - log_factorial(j[l] - 1) - log_factorial(k - j[l]) + xlog(j[l] - 1, lx[l]) + xlog(k - j[l], l1x[l]);
      }
      out[static_cast<Eigen::Index>(i)] = v;
    }
  }
  return out;
}

namespace {

// Shifted linear-space factors for each block; absent blocks contribute a vector of ones.
struct Factors {
  std::vector<Eigen::VectorXd> linear;
  double log_shift = 0.0;
};

Factors make_factors(const WeightTable& w, const MixedPoint& x, int skip_block) {
  Factors f;
  for (int b = 1; b <= w.spec.num_blocks(); ++b) {
    if (b == skip_block) {
      f.linear.push_back(Eigen::VectorXd::Ones(w.layout.block_size(b)));
      continue;
    }
    Eigen::VectorXd lk = block_log_kernels(w.spec, w.degrees, w.layout, b, x.block(b));
    const double m = lk.maxCoeff();
    if (!std::isfinite(m)) {
      f.linear.push_back(Eigen::VectorXd::Zero(lk.size()));
      continue;
    }
    f.log_shift += m;
    f.linear.push_back((lk.array() - m).exp().matrix());
  }
  return f;
}

// sum_c w_c prod_{b != keep} f_b[c_b], as a vector over the indices of block `keep`
// (keep = 0 contracts everything and returns a length-1 vector).
Eigen::VectorXd contract(const WeightTable& w, const std::vector<Eigen::VectorXd>& f, int keep) {
  const int B = w.spec.num_blocks();
  Eigen::VectorXd t = w.weights;
  // trailing blocks after `keep`: contract from the fastest digit
  for (int b = B; b > std::max(keep, 0); --b) {
    const Eigen::Index n = f[b - 1].size();
    Eigen::Map<const Eigen::MatrixXd> m(t.data(), n, t.size() / n);
    t = m.transpose() * f[b - 1];
  }
  if (keep <= 0) return t;
  // leading blocks before `keep`: Kronecker product of their factors
  Eigen::VectorXd lead = Eigen::VectorXd::Ones(1);
  for (int b = 1; b < keep; ++b) {
    Eigen::VectorXd next(lead.size() * f[b - 1].size());
    for (Eigen::Index r = 0; r < lead.size(); ++r) {
      next.segment(r * f[b - 1].size(), f[b - 1].size()) = lead[r] * f[b - 1];
    }
    lead = std::move(next);
  }
  const Eigen::Index n_keep = f[keep - 1].size();
  Eigen::Map<const Eigen::MatrixXd> m(t.data(), n_keep, lead.size());
  return m * lead;
}

std::vector<bool> all_but(const DomainSpec& spec, int block) {
  std::vector<bool> present(spec.num_blocks(), true);
  if (block >= 1) present[block - 1] = false;
  return present;
}

}  // namespace

double mbp_log_density(const WeightTable& w, const MixedPoint& x) {
  validate(x, w.spec);
  Factors f = make_factors(w, x, 0);
  const double s = contract(w, f.linear, 0)[0];
  return s > 0.0 ? std::log(s) + f.log_shift : kNegInf;
}

double mbp_density(const WeightTable& w, const MixedPoint& x) { return std::exp(mbp_log_density(w, x)); }

double mbp_log_marginal(const WeightTable& w, BlockIndex drop, const MixedPoint& x_minus) {
  check_block(w.spec, drop);
  validate_blocks(x_minus, w.spec, all_but(w.spec, drop.value));
  Factors f = make_factors(w, x_minus, drop.value);
  const double s = contract(w, f.linear, 0)[0];
  return s > 0.0 ? std::log(s) + f.log_shift : kNegInf;
}

double mbp_marginal(const WeightTable& w, BlockIndex drop, const MixedPoint& x_minus) {
  return std::exp(mbp_log_marginal(w, drop, x_minus));
}

double mbp_log_conditional(const WeightTable& w, BlockIndex target, const Eigen::VectorXd& x_target,
                           const MixedPoint& x_minus) {
  check_block(w.spec, target);
  validate_blocks(x_minus, w.spec, all_but(w.spec, target.value));
  Factors f = make_factors(w, x_minus, target.value);
  // u[t] is the unnormalized W-weight mass of target index t
  const Eigen::VectorXd u = contract(w, f.linear, target.value);
  const double norm = u.sum();
  if (!(norm > 0.0) || std::log(norm) + f.log_shift < kZeroMarginalLog) {
    throw ZeroMarginal("conditioning density underflows");
  }
  MixedPoint tmp = x_minus;
  tmp.block(target.value) = x_target;
  std::vector<bool> only(w.spec.num_blocks(), false);
  only[target.value - 1] = true;
  validate_blocks(tmp, w.spec, only);
  const Eigen::VectorXd lk = block_log_kernels(w.spec, w.degrees, w.layout, target.value, x_target);
  const double m = lk.maxCoeff();
  if (!std::isfinite(m)) return kNegInf;
  const double s = (u / norm).dot((lk.array() - m).exp().matrix());
  return s > 0.0 ? std::log(s) + m : kNegInf;
}

double mbp_conditional(const WeightTable& w, BlockIndex target, const Eigen::VectorXd& x_target,
                       const MixedPoint& x_minus) {
  return std::exp(mbp_log_conditional(w, target, x_target, x_minus));
}

}  // namespace dmbpp
