#include "dmbpp/model.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dmbpp {

ModelConfig default_model_config(const DomainSpec& spec) {
  ModelConfig config;
  config.spec = spec;
  config.degree_prior = TruncatedPoisson{std::vector<double>(spec.num_blocks(), kDefaultDegreeLambda)};
  return config;
}

namespace {

const std::vector<double>& prior_lambdas(const DegreePrior& prior) {
  return std::visit([](const auto& p) -> const std::vector<double>& { return p.lambda; }, prior);
}

int tail_power(const DomainSpec& spec) { return spec.num_blocks() * spec.total_dim(); }

}  // namespace

void check_config(const ModelConfig& config) {
  if (config.truncation < 2) throw InvalidArgument("truncation N must be at least 2");
  if (!(config.precision_prior.shape > 0.0 && config.precision_prior.rate > 0.0)) {
    throw InvalidArgument("precision prior shape and rate must be positive");
  }
  if (!(config.interior_epsilon > 0.0 && config.interior_epsilon <= 1e-3)) {
    throw InvalidArgument("interior epsilon must lie in (0, 1e-3]");
  }
  const auto& lambda = prior_lambdas(config.degree_prior);
  if (static_cast<int>(lambda.size()) != config.spec.num_blocks()) {
    throw InvalidArgument("degree prior needs one lambda per block");
  }
  for (double l : lambda) {
    if (!(l > 0.0)) throw InvalidArgument("degree prior lambda must be positive");
  }
  if (const auto* tail = std::get_if<TailModified>(&config.degree_prior)) {
    for (int b = 1; b <= config.spec.num_blocks(); ++b) {
      if (tail->k_tilde < degree_lower_bound(config.spec, b)) {
        throw InvalidArgument("k_tilde below the degree lower bound of block " + std::to_string(b));
      }
      const double a = tail->lambda[b - 1] * std::pow(tail->k_tilde + 1.0, tail_power(config.spec));
      if (a < std::log(2.0)) throw InvalidArgument("tail-modified prior needs lambda (k_tilde+1)^p >= log 2");
    }
  }
}

// ------------------------------------------------------------------ state

void check_state(const MixtureState& s, const ModelConfig& config) {
  const int N = config.truncation;
  if (s.v.size() != N - 1 || s.w.size() != N || static_cast<int>(s.theta.size()) != N) {
    throw InvalidArgument("state sizes do not match truncation");
  }
  if ((s.v.array() < 0.0).any() || (s.v.array() > 1.0).any()) throw InvalidArgument("stick fraction outside [0,1]");
  if ((s.w.array() < 0.0).any() || std::abs(s.w.sum() - 1.0) > 1e-12) throw InvalidArgument("weights off the simplex");
  if ((s.w - stick_to_weights(s.v)).cwiseAbs().maxCoeff() > 1e-12) {
    throw InvalidArgument("weights not derived from stick fractions");
  }
  for (const auto& t : s.theta) validate(t, config.spec);
  for (int label : s.xi) {
    if (label < 0 || label >= N) throw InvalidArgument("label out of range");
  }
  if (!(s.M0 > 0.0) || !std::isfinite(s.M0)) throw InvalidArgument("precision must be positive");
  check_degrees(config.spec, s.k);
}

Eigen::VectorXd stick_to_weights(const Eigen::VectorXd& v) {
  const Eigen::Index N = v.size() + 1;
  Eigen::VectorXd w(N);
  double remaining = 1.0;
  double used = 0.0;
  for (Eigen::Index j = 0; j + 1 < N; ++j) {
    w[j] = v[j] * remaining;
    remaining *= 1.0 - v[j];
    used += w[j];
  }
  w[N - 1] = std::max(0.0, 1.0 - used);
  return w;
}

// ------------------------------------------------------------------ kernel index map

MultiIndex ceil_map(int k, int d, const Eigen::VectorXd& theta_block) {
  if (k < d) throw Infeasible("degree " + std::to_string(k) + " cannot hold " + std::to_string(d) + " positive entries");
  if (theta_block.size() != d) throw InvalidArgument("atom block has the wrong length");
  MultiIndex j(d);
  for (int l = 0; l < d; ++l) {
    j[l] = std::max(1, static_cast<int>(std::ceil(k * theta_block[l])));
  }
  int excess = j.sum() - k;
  while (excess > 0) {
    int arg = 0;
    for (int l = 1; l < d; ++l) {
      if (j[l] >= j[arg]) arg = l;
    }
    --j[arg];
    --excess;
  }
  return j;
}

MultiIndex ceil_map_cube(int k, const Eigen::VectorXd& theta_block) {
  if (k < 1) throw Infeasible("cube degree must be at least 1");
  MultiIndex j(theta_block.size());
  for (Eigen::Index l = 0; l < theta_block.size(); ++l) {
    j[l] = std::clamp(static_cast<int>(std::ceil(k * theta_block[l])), 1, k);
  }
  return j;
}

std::vector<MultiIndex> atom_indices(const DomainSpec& spec, const DegreeVector& k, const MixedPoint& theta) {
  std::vector<MultiIndex> out;
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    out.push_back(spec.is_simplex(b) ? ceil_map(k[b], spec.block_dim(b), theta.block(b))
                                     : ceil_map_cube(k[b], theta.block(b)));
  }
  return out;
}

double kernel_logpdf(const MixedPoint& x, const MixedPoint& theta, const DegreeVector& k, const DomainSpec& spec) {
  const auto idx = atom_indices(spec, k, theta);
  double out = 0.0;
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    const auto& xb = x.block(b);
    if (spec.is_simplex(b)) {
      out += log_dirichlet_pdf<double>(xb, alpha_map(k[b], spec.block_dim(b), idx[b - 1]));
    } else {
      for (Eigen::Index l = 0; l < xb.size(); ++l) {
        out += log_beta_pdf<double>(xb[l], idx[b - 1][l], k[b] - idx[b - 1][l] + 1.0);
      }
    }
  }
  return out;
}

// ------------------------------------------------------------------ degree priors

namespace {

double log_poisson(int k, double lambda) { return -lambda + k * std::log(lambda) - log_factorial(k); }

// log(exp(-a) - exp(-b)) for b >= a
double log_exp_diff(double a, double b) {
  if (b == a) return kNegInf;
  return -a + std::log1p(-std::exp(-(b - a)));
}

struct TailParts {
  double head_mass;  // C
  double power;
};

TailParts tail_parts(const TailModified& p, const DomainSpec& spec, int block) {
  const int lb = degree_lower_bound(spec, block);
  const double lambda = p.lambda[block - 1];
  double c = 0.0;
  for (int k = lb; k < p.k_tilde; ++k) c += std::exp(log_poisson(k, lambda));
  return {c, static_cast<double>(tail_power(spec))};
}

}  // namespace

double degree_prior_block_logpmf(const DegreePrior& prior, const DomainSpec& spec, int block, int k) {
  const int lb = degree_lower_bound(spec, block);
  if (k < lb) throw OutOfSupport("degree " + std::to_string(k) + " below lower bound " + std::to_string(lb));
  if (const auto* tp = std::get_if<TruncatedPoisson>(&prior)) {
    const double lambda = tp->lambda[block - 1];
    // P(K >= lb) = P(lb, lambda), the regularized lower incomplete gamma
    const double upper = lb == 0 ? 1.0 : boost::math::gamma_p(static_cast<double>(lb), lambda);
    return log_poisson(k, lambda) - std::log(upper);
  }
  const auto& tm = std::get<TailModified>(prior);
  const double lambda = tm.lambda[block - 1];
  if (k < tm.k_tilde) return log_poisson(k, lambda);
  const auto [c, power] = tail_parts(tm, spec, block);
  const double log_rest = std::log1p(-c);
  const double first = lambda * std::pow(tm.k_tilde + 1.0, power);
  if (k == tm.k_tilde) return log_rest + std::log1p(-2.0 * std::exp(-first));
  if (k == tm.k_tilde + 1) return log_rest - first;
  return log_rest + log_exp_diff(lambda * std::pow(k - 1.0, power), lambda * std::pow(static_cast<double>(k), power));
}

double degree_prior_logpmf(const DegreePrior& prior, const DomainSpec& spec, const DegreeVector& k) {
  if (static_cast<int>(k.k.size()) != spec.num_blocks()) throw InvalidArgument("degree vector length");
  double out = 0.0;
  for (int b = 1; b <= spec.num_blocks(); ++b) out += degree_prior_block_logpmf(prior, spec, b, k[b]);
  return out;
}

double degree_prior_survival(const DegreePrior& prior, const DomainSpec& spec, int block, int k) {
  const int lb = degree_lower_bound(spec, block);
  if (k < lb) return 1.0;
  if (const auto* tp = std::get_if<TruncatedPoisson>(&prior)) {
    const double lambda = tp->lambda[block - 1];
    const double upper = lb == 0 ? 1.0 : boost::math::gamma_p(static_cast<double>(lb), lambda);
    return boost::math::gamma_p(k + 1.0, lambda) / upper;
  }
  const auto& tm = std::get<TailModified>(prior);
  const double lambda = tm.lambda[block - 1];
  const auto [c, power] = tail_parts(tm, spec, block);
  if (k > tm.k_tilde) return (1.0 - c) * std::exp(-lambda * std::pow(static_cast<double>(k), power));
  if (k == tm.k_tilde) return 2.0 * (1.0 - c) * std::exp(-lambda * std::pow(tm.k_tilde + 1.0, power));
  double head = 0.0;
  for (int i = lb; i <= k; ++i) head += std::exp(log_poisson(i, lambda));
  return 1.0 - head;
}

int sample_degree(const DegreePrior& prior, const DomainSpec& spec, int block, Rng& rng) {
  const int lb = degree_lower_bound(spec, block);
  const double u = uniform01(rng);
  double cumulative = 0.0;
  for (int k = lb; k < lb + 100000; ++k) {
    cumulative += std::exp(degree_prior_block_logpmf(prior, spec, block, k));
    if (cumulative >= u) return k;
  }
  return lb;
}

// ------------------------------------------------------------------ prior draws

MixedPoint sample_base_measure(const DomainSpec& spec, Rng& rng) {
  MixedPoint p;
  for (int d : spec.simplex_dims()) {
    Eigen::VectorXd x;
    do {
      x = sample_dirichlet(rng, Eigen::VectorXd::Ones(d + 1));
    } while ((x.array() <= 0.0).any() || x.sum() >= 1.0);
    p.simplex.push_back(std::move(x));
  }
  p.cube.resize(spec.cube_dim());
  for (int l = 0; l < spec.cube_dim(); ++l) {
    double u;
    do {
      u = uniform01(rng);
    } while (u <= 0.0);
    p.cube[l] = u;
  }
  return p;
}

MixtureState sample_prior(const ModelConfig& config, Rng& rng) {
  check_config(config);
  const int N = config.truncation;
  MixtureState s;
  s.M0 = sample_gamma(rng, config.precision_prior.shape, config.precision_prior.rate);
  s.v.resize(N - 1);
  for (int j = 0; j < N - 1; ++j) s.v[j] = sample_beta(rng, 1.0, s.M0);
  s.w = stick_to_weights(s.v);
  for (int j = 0; j < N; ++j) s.theta.push_back(sample_base_measure(config.spec, rng));
  s.k.k.resize(config.spec.num_blocks());
  for (int b = 1; b <= config.spec.num_blocks(); ++b) s.k[b] = sample_degree(config.degree_prior, config.spec, b, rng);
  return s;
}

double mixture_logpdf(const MixedPoint& x, const MixtureState& state, const DomainSpec& spec) {
  Eigen::VectorXd terms(state.truncation());
  for (int j = 0; j < state.truncation(); ++j) {
    terms[j] = state.w[j] > 0.0 ? std::log(state.w[j]) + kernel_logpdf(x, state.theta[j], state.k, spec) : kNegInf;
  }
  return log_sum_exp(terms);
}

// ------------------------------------------------------------------ fast kernel evaluation

BlockKernel make_block_kernel(const DomainSpec& spec, int block, int degree, const MultiIndex& j) {
  BlockKernel kern;
  const int d = spec.block_dim(block);
  if (spec.is_simplex(block)) {
    const DirichletParams alpha = alpha_map(degree, d, j);
    kern.exponents = alpha.array() - 1.0;
    kern.log_norm = log_factorial(degree);
    for (Eigen::Index l = 0; l <= d; ++l) kern.log_norm -= log_factorial(static_cast<int>(alpha[l]) - 1);
  } else {
    kern.exponents.resize(2 * d);
    kern.log_norm = 0.0;
    for (int l = 0; l < d; ++l) {
      if (j[l] < 1 || j[l] > degree) throw InvalidArgument("cube index outside 1..k");
      kern.exponents[2 * l] = j[l] - 1.0;
      kern.exponents[2 * l + 1] = degree - j[l];
      kern.log_norm += log_factorial(degree) - log_factorial(j[l] - 1) - log_factorial(degree - j[l]);
    }
  }
  return kern;
}

PreparedData::PreparedData(const DomainSpec& spec, const std::vector<MixedPoint>& points)
    : spec_(spec), n_(static_cast<Eigen::Index>(points.size())) {
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    const int d = spec.block_dim(b);
    const bool simplex = spec.is_simplex(b);
    RowMatrix logs(n_, simplex ? d + 1 : 2 * d);
    for (Eigen::Index i = 0; i < n_; ++i) {
      const auto& x = points[static_cast<std::size_t>(i)].block(b);
      if (x.size() != d) throw DimensionMismatch("observation block has the wrong length");
      if (simplex) {
        const double rest = 1.0 - x.sum();
        if ((x.array() <= 0.0).any() || !(rest > 0.0)) throw InvalidArgument("observation not interior");
        logs.row(i).head(d) = x.array().log().matrix().transpose();
        logs(i, d) = std::log(rest);
      } else {
        for (int l = 0; l < d; ++l) {
          if (!(x[l] > 0.0 && x[l] < 1.0)) throw InvalidArgument("observation not interior");
          logs(i, 2 * l) = std::log(x[l]);
          logs(i, 2 * l + 1) = std::log1p(-x[l]);
        }
      }
    }
    logs_.push_back(std::move(logs));
  }
}

Eigen::MatrixXd log_kernel_matrix(const PreparedData& data, const MixtureState& state) {
  const DomainSpec& spec = data.spec();
  const int N = state.truncation();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(data.size(), N);
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    const auto& logs = data.log_coords(b);
    Eigen::MatrixXd exps(logs.cols(), N);
    Eigen::RowVectorXd norms(N);
    for (int j = 0; j < N; ++j) {
      const auto& tb = state.theta[static_cast<std::size_t>(j)].block(b);
      const MultiIndex idx = spec.is_simplex(b) ? ceil_map(state.k[b], spec.block_dim(b), tb)
                                                : ceil_map_cube(state.k[b], tb);
      BlockKernel kern = make_block_kernel(spec, b, state.k[b], idx);
      exps.col(j) = kern.exponents;
      norms[j] = kern.log_norm;
    }
    out.noalias() += logs * exps;
    out.rowwise() += norms;
  }
  return out;
}

}  // namespace dmbpp
