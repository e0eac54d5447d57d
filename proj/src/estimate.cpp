#include "dmbpp/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "dmbpp/format.hpp"

namespace dmbpp {

// ------------------------------------------------------------------ coordinate subsets

MarginalSubset MarginalSubset::all(const DomainSpec& spec) {
  MarginalSubset s;
  for (int d : spec.simplex_dims()) {
    std::vector<int> parts(static_cast<std::size_t>(d));
    std::iota(parts.begin(), parts.end(), 0);
    s.simplex_parts.push_back(std::move(parts));
  }
  s.cube_keep.assign(static_cast<std::size_t>(spec.cube_dim()), true);
  return s;
}

MarginalSubset MarginalSubset::none(const DomainSpec& spec) {
  MarginalSubset s;
  s.simplex_parts.resize(static_cast<std::size_t>(spec.num_simplex_blocks()));
  s.cube_keep.assign(static_cast<std::size_t>(spec.cube_dim()), false);
  return s;
}

void check_subset(const DomainSpec& spec, const MarginalSubset& subset) {
  if (static_cast<int>(subset.simplex_parts.size()) != spec.num_simplex_blocks() ||
      static_cast<int>(subset.cube_keep.size()) != spec.cube_dim()) {
    throw DimensionMismatch("subset shape does not match the domain");
  }
  bool any = false;
  for (int m = 1; m <= spec.num_simplex_blocks(); ++m) {
    const auto& parts = subset.simplex_parts[static_cast<std::size_t>(m - 1)];
    const int d = spec.block_dim(m);
    if (static_cast<int>(parts.size()) > d) {
      throw UnsupportedSubset("block " + std::to_string(m) + " keeps all of its parts, which is degenerate");
    }
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (parts[i] < 0 || parts[i] > d || (i > 0 && parts[i] <= parts[i - 1])) {
        throw UnsupportedSubset("block " + std::to_string(m) + " parts must be distinct, ascending and in 0..d");
      }
    }
    any = any || !parts.empty();
  }
  for (bool k : subset.cube_keep) any = any || k;
  if (!any) throw UnsupportedSubset("subset keeps no variables");
}

MarginalSubset drop_block(const DomainSpec& spec, BlockIndex drop) {
  check_block(spec, drop);
  MarginalSubset s = MarginalSubset::all(spec);
  if (spec.is_simplex(drop.value)) {
    s.simplex_parts[static_cast<std::size_t>(drop.value - 1)].clear();
  } else {
    s.cube_keep.assign(s.cube_keep.size(), false);
  }
  return s;
}

std::vector<std::string> variable_names(const DomainSpec& spec) {
  std::vector<std::string> names;
  const int M = spec.num_simplex_blocks();
  for (int m = 1; m <= M; ++m) {
    for (int l = 1; l <= spec.block_dim(m) + 1; ++l) names.push_back("x" + std::to_string(m) + "_" + std::to_string(l));
  }
  for (int l = 1; l <= spec.cube_dim(); ++l) names.push_back("x" + std::to_string(M + l));
  return names;
}

MarginalSubset single_variable(const DomainSpec& spec, int index) {
  MarginalSubset s = MarginalSubset::none(spec);
  int pos = index;
  for (int m = 1; m <= spec.num_simplex_blocks(); ++m) {
    const int parts = spec.block_dim(m) + 1;
    if (pos < parts) {
      s.simplex_parts[static_cast<std::size_t>(m - 1)] = {pos};
      return s;
    }
    pos -= parts;
  }
  if (pos < 0 || pos >= spec.cube_dim()) throw InvalidArgument("variable index out of range");
  s.cube_keep[static_cast<std::size_t>(pos)] = true;
  return s;
}

DomainSpec subset_domain(const DomainSpec& spec, const MarginalSubset& subset) {
  check_subset(spec, subset);
  std::vector<int> dims;
  for (const auto& parts : subset.simplex_parts) {
    if (!parts.empty()) dims.push_back(static_cast<int>(parts.size()));
  }
  const int cube = static_cast<int>(std::count(subset.cube_keep.begin(), subset.cube_keep.end(), true));
  return DomainSpec(dims, cube);
}

MixedPoint project(const MixedPoint& point, const DomainSpec& spec, const MarginalSubset& subset) {
  check_subset(spec, subset);
  MixedPoint out;
  for (int m = 1; m <= spec.num_simplex_blocks(); ++m) {
    const auto& parts = subset.simplex_parts[static_cast<std::size_t>(m - 1)];
    if (parts.empty()) continue;
    const auto& x = point.block(m);
    const int d = spec.block_dim(m);
    Eigen::VectorXd kept(static_cast<Eigen::Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i) kept[static_cast<Eigen::Index>(i)] = parts[i] == d ? 1.0 - x.sum() : x[parts[i]];
    out.simplex.push_back(std::move(kept));
  }
  std::vector<double> cube;
  for (int l = 0; l < spec.cube_dim(); ++l) {
    if (subset.cube_keep[static_cast<std::size_t>(l)]) cube.push_back(point.cube[l]);
  }
  out.cube = Eigen::Map<const Eigen::VectorXd>(cube.data(), static_cast<Eigen::Index>(cube.size()));
  return out;
}

// ------------------------------------------------------------------ per-state densities

namespace {

Eigen::VectorXd log_weights(const Eigen::VectorXd& w) {
  return w.unaryExpr([](double x) { return x > 0.0 ? std::log(x) : kNegInf; });
}

MultiIndex block_index(const DomainSpec& spec, int b, int degree, const Eigen::VectorXd& theta_block) {
  return spec.is_simplex(b) ? ceil_map(degree, spec.block_dim(b), theta_block) : ceil_map_cube(degree, theta_block);
}

/// Row-wise log-sum-exp of a matrix plus a row vector of log weights.
Eigen::VectorXd row_log_sum_exp(Eigen::MatrixXd m, const Eigen::RowVectorXd& logw) {
  m.rowwise() += logw;
  Eigen::VectorXd out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[i] = log_sum_exp(m.row(i));
  return out;
}

/// Log coordinates of one block laid out as in PreparedData.
Eigen::VectorXd block_log_coords(const DomainSpec& spec, int b, const Eigen::VectorXd& x) {
  const int d = spec.block_dim(b);
  if (x.size() != d) throw DimensionMismatch("conditioning block " + std::to_string(b) + " has the wrong length");
  if (spec.is_simplex(b)) {
    const double rest = 1.0 - x.sum();
    if ((x.array() <= 0.0).any() || !(rest > 0.0)) throw OutOfRange("conditioning point not interior");
    Eigen::VectorXd out(d + 1);
    out.head(d) = x.array().log();
    out[d] = std::log(rest);
    return out;
  }
  Eigen::VectorXd out(2 * d);
  for (int l = 0; l < d; ++l) {
    if (!(x[l] > 0.0 && x[l] < 1.0)) throw OutOfRange("conditioning point not interior");
    out[2 * l] = std::log(x[l]);
    out[2 * l + 1] = std::log1p(-x[l]);
  }
  return out;
}

}  // namespace

Eigen::MatrixXd marginal_log_kernel_matrix(const MixtureState& state, const DomainSpec& spec,
                                           const MarginalSubset& subset, const PreparedData& points) {
  const DomainSpec sub = subset_domain(spec, subset);
  if (!(points.spec() == sub)) throw DimensionMismatch("points do not live on the subset domain");
  const int N = state.truncation();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(points.size(), N);
  int sub_block = 0;
  for (int m = 1; m <= spec.num_simplex_blocks(); ++m) {
    const auto& parts = subset.simplex_parts[static_cast<std::size_t>(m - 1)];
    if (parts.empty()) continue;
    ++sub_block;
    const int d = spec.block_dim(m);
    const int kept = static_cast<int>(parts.size());
    const int degree = state.k[m];
    Eigen::MatrixXd exps(kept + 1, N);
    Eigen::RowVectorXd norms(N);
    for (int j = 0; j < N; ++j) {
      const DirichletParams alpha = alpha_map(degree, d, block_index(spec, m, degree, state.theta[j].block(m)));
      double kept_sum = 0.0;
      double norm = log_factorial(degree);
      for (int i = 0; i < kept; ++i) {
        const double a = alpha[parts[static_cast<std::size_t>(i)]];
        exps(i, j) = a - 1.0;
        kept_sum += a;
        norm -= log_factorial(static_cast<int>(a) - 1);
      }
      const double rest = alpha.sum() - kept_sum;
      exps(kept, j) = rest - 1.0;
      norms[j] = norm - log_factorial(static_cast<int>(rest) - 1);
    }
    out.noalias() += points.log_coords(sub_block) * exps;
    out.rowwise() += norms;
  }
  const int cube_kept = sub.cube_dim();
  if (cube_kept > 0) {
    const int cb = spec.num_blocks();
    const int degree = state.k[cb];
    Eigen::MatrixXd exps(2 * cube_kept, N);
    Eigen::RowVectorXd norms(N);
    for (int j = 0; j < N; ++j) {
      const MultiIndex idx = ceil_map_cube(degree, state.theta[j].cube);
      double norm = 0.0;
      int c = 0;
      for (int l = 0; l < spec.cube_dim(); ++l) {
        if (!subset.cube_keep[static_cast<std::size_t>(l)]) continue;
        exps(2 * c, j) = idx[l] - 1.0;
        exps(2 * c + 1, j) = degree - idx[l];
        norm += log_factorial(degree) - log_factorial(idx[l] - 1) - log_factorial(degree - idx[l]);
        ++c;
      }
      norms[j] = norm;
    }
    out.noalias() += points.log_coords(sub.num_blocks()) * exps;
    out.rowwise() += norms;
  }
  return out;
}

Eigen::VectorXd mixture_density_values(const MixtureState& state, const PreparedData& points) {
  return row_log_sum_exp(log_kernel_matrix(points, state), log_weights(state.w).transpose()).array().exp();
}

Eigen::VectorXd mixture_marginal_values(const MixtureState& state, const DomainSpec& spec,
                                        const MarginalSubset& subset, const PreparedData& points) {
  return row_log_sum_exp(marginal_log_kernel_matrix(state, spec, subset, points), log_weights(state.w).transpose())
      .array()
      .exp();
}

double mixture_marginal_logpdf(const MixtureState& state, const DomainSpec& spec, const MarginalSubset& subset,
                               const MixedPoint& x_partial) {
  const PreparedData one(subset_domain(spec, subset), {x_partial});
  return row_log_sum_exp(marginal_log_kernel_matrix(state, spec, subset, one), log_weights(state.w).transpose())[0];
}

DomainSpec block_domain(const DomainSpec& spec, BlockIndex block) {
  check_block(spec, block);
  if (spec.is_simplex(block.value)) return DomainSpec({spec.block_dim(block.value)}, 0);
  return DomainSpec({}, spec.cube_dim());
}

namespace {

Eigen::VectorXd conditional_log_weights(const MixtureState& state, const DomainSpec& spec, BlockIndex target,
                                        const MixedPoint& x_minus) {
  check_block(spec, target);
  Eigen::VectorXd logw = log_weights(state.w);
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    if (b == target.value || spec.block_dim(b) == 0) continue;
    const Eigen::VectorXd logs = block_log_coords(spec, b, x_minus.block(b));
    for (int j = 0; j < state.truncation(); ++j) {
      const BlockKernel kern =
          make_block_kernel(spec, b, state.k[b], block_index(spec, b, state.k[b], state.theta[j].block(b)));
      logw[j] += kern.log_norm + logs.dot(kern.exponents);
    }
  }
  const double norm = log_sum_exp(logw);
  if (!(norm >= kZeroMarginalLog)) throw ZeroMarginal("conditioning density underflows");
  return logw.array() - norm;
}

}  // namespace

Eigen::VectorXd conditional_weights(const MixtureState& state, const DomainSpec& spec, BlockIndex target,
                                    const MixedPoint& x_minus) {
  return conditional_log_weights(state, spec, target, x_minus).array().exp();
}

Eigen::VectorXd mixture_conditional_values(const MixtureState& state, const DomainSpec& spec, BlockIndex target,
                                           const MixedPoint& x_minus, const PreparedData& target_points) {
  if (!(target_points.spec() == block_domain(spec, target))) {
    throw DimensionMismatch("points do not live on the target block");
  }
  const Eigen::VectorXd logW = conditional_log_weights(state, spec, target, x_minus);
  const int t = target.value;
  const int N = state.truncation();
  Eigen::MatrixXd logk(target_points.size(), N);
  for (int j = 0; j < N; ++j) {
    const BlockKernel kern =
        make_block_kernel(spec, t, state.k[t], block_index(spec, t, state.k[t], state.theta[j].block(t)));
    logk.col(j) = target_points.block_log_kernel(1, kern);
  }
  return row_log_sum_exp(logk, logW.transpose()).array().exp();
}

double mixture_conditional_logpdf(const MixtureState& state, const DomainSpec& spec, BlockIndex target,
                                  const Eigen::VectorXd& x_target, const MixedPoint& x_minus) {
  const DomainSpec bd = block_domain(spec, target);
  MixedPoint p = zero_point(bd);
  p.block(1) = x_target;
  const PreparedData one(bd, {p});
  return std::log(mixture_conditional_values(state, spec, target, x_minus, one)[0]);
}

// ------------------------------------------------------------------ grids and integration

GridSpec uniform_grid_spec(const DomainSpec& spec, int resolution) {
  return GridSpec{std::vector<int>(static_cast<std::size_t>(spec.num_blocks()), resolution)};
}

namespace {

struct BlockRule {
  std::vector<Eigen::VectorXd> points;
  std::vector<double> weights;
};

BlockRule simplex_rule(int d, int r) {
  BlockRule rule;
  if (d == 1) {
    for (int i = 0; i < r; ++i) {
      rule.points.push_back(Eigen::VectorXd::Constant(1, (i + 0.5) / r));
      rule.weights.push_back(1.0 / r);
    }
  } else if (d == 2) {
    // centroids of the r^2 congruent triangles of the uniform triangulation
    const double area = 0.5 / (static_cast<double>(r) * r);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; i + j < r; ++j) {
        rule.points.push_back((Eigen::VectorXd(2) << (i + 1.0 / 3.0) / r, (j + 1.0 / 3.0) / r).finished());
        rule.weights.push_back(area);
        if (i + j + 2 <= r) {
          rule.points.push_back((Eigen::VectorXd(2) << (i + 2.0 / 3.0) / r, (j + 2.0 / 3.0) / r).finished());
          rule.weights.push_back(area);
        }
      }
    }
  } else {
    // cube midpoints inside the simplex, weights rescaled to the exact volume 1/d!
    for (const auto& c : enumerate_box(d, r)) {
      Eigen::VectorXd x = (c.cast<double>().array() - 0.5) / r;
      if (x.sum() < 1.0) rule.points.push_back(std::move(x));
    }
    const double each = 1.0 / (std::tgamma(d + 1.0) * static_cast<double>(rule.points.size()));
    rule.weights.assign(rule.points.size(), each);
  }
  return rule;
}

BlockRule cube_rule(int d, int r) {
  BlockRule rule;
  const auto cells = enumerate_box(d, r);
  const double vol = std::pow(1.0 / r, d);
  for (const auto& c : cells) {
    rule.points.push_back((c.cast<double>().array() - 0.5) / r);
    rule.weights.push_back(vol);
  }
  return rule;
}

}  // namespace

IntegrationRule make_grid(const DomainSpec& spec, const GridSpec& grid) {
  if (static_cast<int>(grid.resolution.size()) != spec.num_blocks()) {
    throw InvalidArgument("grid needs one resolution per block");
  }
  std::vector<BlockRule> rules;
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    const int r = grid.resolution[static_cast<std::size_t>(b - 1)];
    if (r < 1) throw InvalidArgument("grid resolution must be positive");
    rules.push_back(spec.is_simplex(b) ? simplex_rule(spec.block_dim(b), r) : cube_rule(spec.cube_dim(), r));
  }
  std::size_t total = 1;
  for (const auto& r : rules) total *= r.points.size();
  if (total > kDefaultEnumerationCap) throw SizeLimit("grid too large");
  IntegrationRule out;
  out.spec = spec;
  out.points.reserve(total);
  out.weights.resize(static_cast<Eigen::Index>(total));
  std::vector<std::size_t> digit(rules.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    MixedPoint p;
    double w = 1.0;
    for (std::size_t b = 0; b < rules.size(); ++b) {
      const auto& x = rules[b].points[digit[b]];
      if (b + 1 < rules.size()) {
        p.simplex.push_back(x);
      } else {
        p.cube = x;
      }
      w *= rules[b].weights[digit[b]];
    }
    out.points.push_back(std::move(p));
    out.weights[static_cast<Eigen::Index>(n)] = w;
    for (std::size_t b = rules.size(); b-- > 0;) {
      if (++digit[b] < rules[b].points.size()) break;
      digit[b] = 0;
    }
  }
  return out;
}

IntegrationRule make_mc_rule(const DomainSpec& spec, long draws, std::uint64_t seed) {
  if (draws < 1) throw InvalidArgument("draw count must be positive");
  Rng rng(seed);
  IntegrationRule out;
  out.spec = spec;
  out.points.reserve(static_cast<std::size_t>(draws));
  for (long i = 0; i < draws; ++i) out.points.push_back(sample_base_measure(spec, rng));
  out.weights = Eigen::VectorXd::Constant(draws, spec.volume() / static_cast<double>(draws));
  return out;
}

IntegrationRule integration_rule(const DomainSpec& spec, const L1Options& options) {
  bool grid_ok = spec.total_dim() <= 3;
  for (int d : spec.simplex_dims()) grid_ok = grid_ok && d <= 2;
  if (options.method == L1Method::Grid && grid_ok) {
    if (options.grid_resolution < 4) throw BudgetTooSmall("grid resolution below 4");
    return make_grid(spec, uniform_grid_spec(spec, options.grid_resolution));
  }
  if (options.mc_draws < 1000) throw BudgetTooSmall("fewer than 1000 Monte Carlo draws");
  return make_mc_rule(spec, options.mc_draws, options.seed);
}

double l1_distance(const Eigen::VectorXd& f, const Eigen::VectorXd& g, const IntegrationRule& rule) {
  if (f.size() != rule.weights.size() || g.size() != rule.weights.size()) {
    throw DimensionMismatch("density values do not match the integration rule");
  }
  return rule.weights.dot((f - g).cwiseAbs());
}

double l1_distance(const DensityFn& f, const DensityFn& g, const DomainSpec& spec, const L1Options& options) {
  const IntegrationRule rule = integration_rule(spec, options);
  Eigen::VectorXd fv(rule.weights.size()), gv(rule.weights.size());
  for (std::size_t i = 0; i < rule.points.size(); ++i) {
    fv[static_cast<Eigen::Index>(i)] = f(rule.points[i]);
    gv[static_cast<Eigen::Index>(i)] = g(rule.points[i]);
  }
  return l1_distance(fv, gv, rule);
}

double mpel1(const std::vector<double>& per_replicate) {
  if (per_replicate.empty()) throw EmptyInput("no replicates");
  return std::accumulate(per_replicate.begin(), per_replicate.end(), 0.0) / static_cast<double>(per_replicate.size());
}

// ------------------------------------------------------------------ posterior summaries

double quantile(std::vector<double> values, double level) {
  if (values.empty()) throw EmptyInput("quantile of no values");
  if (!(level >= 0.0 && level <= 1.0)) throw InvalidArgument("quantile level outside [0,1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * level;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

DensityEstimate summarize(const std::vector<MixedPoint>& points, const std::vector<std::string>& names,
                          const Eigen::MatrixXd& values, double lower_level, double upper_level) {
  if (values.cols() == 0) throw EmptyInput("no posterior draws");
  DensityEstimate est;
  est.coord_names = names;
  est.lower_level = lower_level;
  est.upper_level = upper_level;
  const auto n = static_cast<Eigen::Index>(points.size());
  est.coords.resize(n, static_cast<Eigen::Index>(names.size()));
  est.mean.resize(n);
  est.lower.resize(n);
  est.upper.resize(n);
  std::vector<double> row(static_cast<std::size_t>(values.cols()));
  for (Eigen::Index i = 0; i < n; ++i) {
    est.coords.row(i) = flatten(points[static_cast<std::size_t>(i)]).transpose();
    for (Eigen::Index c = 0; c < values.cols(); ++c) row[static_cast<std::size_t>(c)] = values(i, c);
    est.mean[i] = values.row(i).mean();
    est.lower[i] = std::min(quantile(row, lower_level), est.mean[i]);
    est.upper[i] = std::max(quantile(row, upper_level), est.mean[i]);
  }
  return est;
}

DensityEstimate predictive_density(const PosteriorDraws& draws, const std::vector<MixedPoint>& points) {
  const PreparedData data(draws.spec(), points);
  Eigen::MatrixXd values(data.size(), static_cast<Eigen::Index>(draws.states.size()));
  for (std::size_t s = 0; s < draws.states.size(); ++s) {
    values.col(static_cast<Eigen::Index>(s)) = mixture_density_values(draws.states[s], data);
  }
  return summarize(points, coordinate_names(draws.spec()), values);
}

DensityEstimate predictive_marginal(const PosteriorDraws& draws, const MarginalSubset& subset,
                                    const std::vector<MixedPoint>& points) {
  const DomainSpec sub = subset_domain(draws.spec(), subset);
  const PreparedData data(sub, points);
  Eigen::MatrixXd values(data.size(), static_cast<Eigen::Index>(draws.states.size()));
  for (std::size_t s = 0; s < draws.states.size(); ++s) {
    values.col(static_cast<Eigen::Index>(s)) = mixture_marginal_values(draws.states[s], draws.spec(), subset, data);
  }
  std::vector<std::string> names;
  const auto all = variable_names(draws.spec());
  std::size_t offset = 0;
  for (int m = 1; m <= draws.spec().num_simplex_blocks(); ++m) {
    for (int p : subset.simplex_parts[static_cast<std::size_t>(m - 1)]) names.push_back(all[offset + static_cast<std::size_t>(p)]);
    offset += static_cast<std::size_t>(draws.spec().block_dim(m) + 1);
  }
  for (int l = 0; l < draws.spec().cube_dim(); ++l) {
    if (subset.cube_keep[static_cast<std::size_t>(l)]) names.push_back(all[offset + static_cast<std::size_t>(l)]);
  }
  return summarize(points, names, values);
}

DensityEstimate predictive_conditional(const PosteriorDraws& draws, BlockIndex target, const MixedPoint& x_minus,
                                       const std::vector<MixedPoint>& points) {
  const DomainSpec bd = block_domain(draws.spec(), target);
  const PreparedData data(bd, points);
  Eigen::MatrixXd values(data.size(), static_cast<Eigen::Index>(draws.states.size()));
  for (std::size_t s = 0; s < draws.states.size(); ++s) {
    values.col(static_cast<Eigen::Index>(s)) =
        mixture_conditional_values(draws.states[s], draws.spec(), target, x_minus, data);
  }
  std::vector<std::string> names;
  const auto all = coordinate_names(draws.spec());
  std::size_t offset = 0;
  for (int b = 1; b < target.value; ++b) offset += static_cast<std::size_t>(draws.spec().block_dim(b));
  for (int l = 0; l < draws.spec().block_dim(target.value); ++l) names.push_back(all[offset + static_cast<std::size_t>(l)]);
  return summarize(points, names, values);
}

Ellipse credible_ellipse(const Eigen::MatrixX2d& samples, double level) {
  if (samples.rows() == 0) throw EmptyInput("no samples for the credible region");
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("level must lie in (0,1)");
  Ellipse e;
  e.level = level;
  e.center = samples.colwise().mean().transpose();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  if (samples.rows() > 1) {
    const Eigen::MatrixX2d centered = samples.rowwise() - e.center.transpose();
    cov = centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
  }
  // chi-square quantile with 2 degrees of freedom
  e.shape = cov * (-2.0 * std::log1p(-level));
  return e;
}

bool contains(const Ellipse& e, const Eigen::Vector2d& y) {
  const Eigen::Vector2d diff = y - e.center;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(e.shape);
  const double scale = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
  double r = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double proj = eig.eigenvectors().col(i).dot(diff);
    const double lambda = eig.eigenvalues()[i];
    if (lambda <= 1e-14 * scale) {
      if (std::abs(proj) > 1e-12) return false;
    } else {
      r += proj * proj / lambda;
    }
  }
  return r <= 1.0;
}

Eigen::MatrixX2d conditional_means(const PosteriorDraws& draws, BlockIndex target, const MixedPoint& x_minus) {
  const DomainSpec& spec = draws.spec();
  check_block(spec, target);
  const int t = target.value;
  if (spec.block_dim(t) != 2) throw InvalidArgument("credible regions need a two-coordinate target block");
  Eigen::MatrixX2d out(static_cast<Eigen::Index>(draws.states.size()), 2);
  for (std::size_t s = 0; s < draws.states.size(); ++s) {
    const auto& st = draws.states[s];
    const Eigen::VectorXd W = conditional_weights(st, spec, target, x_minus);
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (int j = 0; j < st.truncation(); ++j) {
      if (W[j] == 0.0) continue;
      const MultiIndex idx = block_index(spec, t, st.k[t], st.theta[j].block(t));
      Eigen::Vector2d m;
      if (spec.is_simplex(t)) {
        const DirichletParams alpha = alpha_map(st.k[t], 2, idx);
        m = alpha.head(2) / alpha.sum();
      } else {
        m = idx.cast<double>() / (st.k[t] + 1.0);
      }
      mean += W[j] * m;
    }
    out.row(static_cast<Eigen::Index>(s)) = mean.transpose();
  }
  return out;
}

Ellipse conditional_mean_region(const PosteriorDraws& draws, BlockIndex target, const MixedPoint& x_minus,
                                double level) {
  return credible_ellipse(conditional_means(draws, target, x_minus), level);
}

namespace {

std::string level_name(double level) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "q%03ld", std::lround(level * 1000.0));
  return buf;
}

}  // namespace

void write_density_csv(std::ostream& out, const DensityEstimate& est) {
  std::string line;
  for (const auto& n : est.coord_names) line += n + ",";
  line += "mean," + level_name(est.lower_level) + "," + level_name(est.upper_level);
  out << line << '\n';
  for (Eigen::Index i = 0; i < est.mean.size(); ++i) {
    line.clear();
    for (Eigen::Index c = 0; c < est.coords.cols(); ++c) {
      append_double(line, est.coords(i, c));
      line += ',';
    }
    append_double(line, est.mean[i]);
    line += ',';
    append_double(line, est.lower[i]);
    line += ',';
    append_double(line, est.upper[i]);
    out << line << '\n';
  }
}

void write_ellipse_csv(std::ostream& out, const Ellipse& e) {
  std::string line = "level,center1,center2,shape11,shape12,shape22\n";
  for (double v : {e.level, e.center[0], e.center[1], e.shape(0, 0), e.shape(0, 1), e.shape(1, 1)}) {
    append_double(line, v);
    line += ',';
  }
  line.back() = '\n';
  out << line;
}

}  // namespace dmbpp
