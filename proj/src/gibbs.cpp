#include "dmbpp/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <istream>
#include <optional>
#include <ostream>
#include <thread>

#include "dmbpp/format.hpp"

namespace dmbpp {

void check_sampler_config(const SamplerConfig& c) {
  if (c.chain_length < 1) throw InvalidArgument("chain_length must be positive");
  if (c.burn_in < 0 || c.burn_in >= c.chain_length) throw InvalidArgument("burn_in must lie in [0, chain_length)");
  if (c.thinning < 1) throw InvalidArgument("thinning must be at least 1");
  if (c.n_chains < 1) throw InvalidArgument("n_chains must be at least 1");
  if (!(c.atom_step > 0.0)) throw InvalidArgument("atom_step must be positive");
  if (c.degree_step < 1) throw InvalidArgument("degree_step must be at least 1");
  if (!(c.atom_proposal_mix >= 0.0 && c.atom_proposal_mix <= 1.0)) {
    throw InvalidArgument("atom_proposal_mix must be a probability");
  }
  if (c.atom_moves < 1) throw InvalidArgument("atom_moves must be at least 1");
}

int retained_per_chain(const SamplerConfig& c) { return (c.chain_length - c.burn_in) / c.thinning; }

AcceptanceStats& AcceptanceStats::operator+=(const AcceptanceStats& o) {
  atom_proposals += o.atom_proposals;
  atom_accepts += o.atom_accepts;
  degree_proposals += o.degree_proposals;
  degree_accepts += o.degree_accepts;
  return *this;
}

AcceptanceStats PosteriorDraws::total_acceptance() const {
  AcceptanceStats out;
  for (const auto& a : acceptance) out += a;
  return out;
}

// ------------------------------------------------------------------ full conditionals

Eigen::VectorXd categorical_from_logs(const Eigen::VectorXd& logp) {
  const double m = logp.size() ? logp.maxCoeff() : kNegInf;
  if (!std::isfinite(m)) throw DegenerateLikelihood("every label has zero probability");
  Eigen::VectorXd p = (logp.array() - m).exp().matrix();
  return p / p.sum();
}

std::vector<std::pair<double, double>> stick_posterior(const std::vector<int>& labels, int truncation, double M0) {
  std::vector<long> counts(static_cast<std::size_t>(truncation), 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  std::vector<std::pair<double, double>> out(static_cast<std::size_t>(truncation - 1));
  long tail = 0;
  for (int j = truncation - 1; j >= 0; --j) {
    if (j < truncation - 1) out[static_cast<std::size_t>(j)] = {1.0 + counts[j], M0 + static_cast<double>(tail)};
    tail += counts[static_cast<std::size_t>(j)];
  }
  return out;
}

std::pair<double, double> precision_posterior(const Eigen::VectorXd& v, const GammaPrior& prior) {
  double rate = prior.rate;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (!std::isfinite(v[j])) throw NumericalGuard("non-finite stick fraction");
    rate -= std::log1p(-std::min(v[j], kMaxStick));
  }
  return {prior.shape + static_cast<double>(v.size()), rate};
}

double base_logpdf(const MixedPoint& theta, const DomainSpec& spec) {
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    const auto& x = theta.block(b);
    if ((x.array() <= 0.0).any()) return kNegInf;
    if (spec.is_simplex(b) ? !(x.sum() < 1.0) : (x.array() >= 1.0).any()) return kNegInf;
  }
  return -std::log(spec.volume());
}

// ------------------------------------------------------------------ helpers

namespace {

Eigen::VectorXd log_weights(const Eigen::VectorXd& w) {
  return w.unaryExpr([](double x) { return x > 0.0 ? std::log(x) : kNegInf; });
}

MultiIndex block_index(const DomainSpec& spec, int b, int degree, const Eigen::VectorXd& theta_block) {
  return spec.is_simplex(b) ? ceil_map(degree, spec.block_dim(b), theta_block) : ceil_map_cube(degree, theta_block);
}

BlockKernel atom_kernel(const DomainSpec& spec, int b, int degree, const Eigen::VectorXd& theta_block) {
  return make_block_kernel(spec, b, degree, block_index(spec, b, degree, theta_block));
}

/// n x N block contribution to the log-kernel matrix at a given degree.
Eigen::MatrixXd block_log_matrix(const PreparedData& data, const MixtureState& s, int b, int degree) {
  const auto& logs = data.log_coords(b);
  const int N = s.truncation();
  Eigen::MatrixXd exps(logs.cols(), N);
  Eigen::RowVectorXd norms(N);
  for (int j = 0; j < N; ++j) {
    BlockKernel kern = atom_kernel(data.spec(), b, degree, s.theta[static_cast<std::size_t>(j)].block(b));
    exps.col(j) = kern.exponents;
    norms[j] = kern.log_norm;
  }
  Eigen::MatrixXd out = logs * exps;
  out.rowwise() += norms;
  return out;
}

/// sum_i log sum_j w_j K_ij.
double data_loglik(const Eigen::MatrixXd& log_kernels, const Eigen::RowVectorXd& logw) {
  if (log_kernels.rows() == 0) return 0.0;
  Eigen::MatrixXd m = log_kernels.rowwise() + logw;
  const Eigen::VectorXd mx = m.rowwise().maxCoeff();
  m.colwise() -= mx;
  return (m.array().exp().rowwise().sum().log().matrix() + mx).sum();
}

Eigen::VectorXd to_unconstrained(const MixedPoint& theta, const DomainSpec& spec) {
  Eigen::VectorXd y(spec.total_dim());
  Eigen::Index pos = 0;
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    const auto& x = theta.block(b);
    if (spec.is_simplex(b)) {
      const double last = std::log1p(-x.sum());
      for (Eigen::Index l = 0; l < x.size(); ++l) y[pos++] = std::log(x[l]) - last;
    } else {
      for (Eigen::Index l = 0; l < x.size(); ++l) y[pos++] = std::log(x[l]) - std::log1p(-x[l]);
    }
  }
  return y;
}

std::optional<MixedPoint> from_unconstrained(const Eigen::VectorXd& y, const DomainSpec& spec) {
  MixedPoint out;
  Eigen::Index pos = 0;
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    const int d = spec.block_dim(b);
    if (spec.is_simplex(b)) {
      Eigen::VectorXd logits(d + 1);
      logits.head(d) = y.segment(pos, d);
      logits[d] = 0.0;
      pos += d;
      const double m = logits.maxCoeff();
      Eigen::VectorXd parts = (logits.array() - m).exp().matrix();
      parts /= parts.sum();
      if ((parts.array() <= 0.0).any()) return std::nullopt;
      Eigen::VectorXd x = parts.head(d);
      if (!(x.sum() < 1.0)) return std::nullopt;
      out.simplex.push_back(std::move(x));
    } else {
      out.cube.resize(d);
      for (int l = 0; l < d; ++l) {
        const double v = 1.0 / (1.0 + std::exp(-y[pos++]));
        if (!(v > 0.0 && v < 1.0)) return std::nullopt;
        out.cube[l] = v;
      }
    }
  }
  return out;
}

/// log |d theta / d y| of the inverse transform.
double log_jacobian(const MixedPoint& theta, const DomainSpec& spec) {
  double out = 0.0;
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    const auto& x = theta.block(b);
    if (spec.is_simplex(b)) {
      out += x.array().log().sum() + std::log1p(-x.sum());
    } else {
      out += (x.array().log() + (1.0 - x.array()).log()).sum();
    }
  }
  return out;
}

/// Per-atom sums of observation log coordinates, one (N x cols) matrix per block.
struct ClusterStats {
  std::vector<long> counts;
  std::vector<Eigen::MatrixXd> sums;
};

ClusterStats cluster_stats(const PreparedData& data, const MixtureState& s) {
  const DomainSpec& spec = data.spec();
  const int N = s.truncation();
  ClusterStats cs;
  cs.counts.assign(static_cast<std::size_t>(N), 0);
  for (int b = 1; b <= spec.num_blocks(); ++b) cs.sums.push_back(Eigen::MatrixXd::Zero(N, data.log_coords(b).cols()));
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const int j = s.xi[static_cast<std::size_t>(i)];
    ++cs.counts[static_cast<std::size_t>(j)];
    for (int b = 1; b <= spec.num_blocks(); ++b) cs.sums[b - 1].row(j) += data.log_coords(b).row(i);
  }
  return cs;
}

double cluster_loglik(const ClusterStats& cs, int j, const MixedPoint& theta, const DegreeVector& k,
                      const DomainSpec& spec) {
  const long n = cs.counts[static_cast<std::size_t>(j)];
  if (n == 0) return 0.0;
  double out = 0.0;
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    BlockKernel kern = atom_kernel(spec, b, k[b], theta.block(b));
    out += static_cast<double>(n) * kern.log_norm + cs.sums[b - 1].row(j).dot(kern.exponents);
  }
  return out;
}

}  // namespace

// ------------------------------------------------------------------ updates

void update_labels(MixtureState& state, const PreparedData& data, Rng& rng) {
  const Eigen::Index n = data.size();
  state.xi.assign(static_cast<std::size_t>(n), 0);
  if (n == 0) return;
  Eigen::MatrixXd logp = log_kernel_matrix(data, state);
  logp.rowwise() += log_weights(state.w).transpose();
  const int N = state.truncation();
  Eigen::VectorXd p(N);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = logp.row(i).maxCoeff();
    if (!std::isfinite(m)) throw DegenerateLikelihood("observation " + std::to_string(i) + " has zero likelihood");
    p = (logp.row(i).array() - m).exp().transpose();
    const double u = uniform01(rng) * p.sum();
    double acc = 0.0;
    int pick = N - 1;
    for (int j = 0; j < N; ++j) {
      acc += p[j];
      if (u < acc) {
        pick = j;
        break;
      }
    }
    // the fall-through slot must carry mass
    while (p[pick] == 0.0) --pick;
    state.xi[static_cast<std::size_t>(i)] = pick;
  }
}

void update_sticks(MixtureState& state, Rng& rng) {
  const auto params = stick_posterior(state.xi, state.truncation(), state.M0);
  for (std::size_t j = 0; j < params.size(); ++j) {
    state.v[static_cast<Eigen::Index>(j)] = std::min(sample_beta(rng, params[j].first, params[j].second), kMaxStick);
  }
  state.w = stick_to_weights(state.v);
}

void update_atoms(MixtureState& state, const PreparedData& data, const SamplerConfig& config, Rng& rng,
                  AcceptanceStats& stats) {
  const DomainSpec& spec = data.spec();
  const ClusterStats cs = cluster_stats(data, state);
  for (int j = 0; j < state.truncation(); ++j) {
    auto& theta = state.theta[static_cast<std::size_t>(j)];
    double current = cluster_loglik(cs, j, theta, state.k, spec);
    for (int move = 0; move < config.atom_moves; ++move) {
      ++stats.atom_proposals;
      std::optional<MixedPoint> proposal;
      double log_ratio = 0.0;
      if (uniform01(rng) < config.atom_proposal_mix) {
        proposal = sample_base_measure(spec, rng);
      } else {
        Eigen::VectorXd y = to_unconstrained(theta, spec);
        for (Eigen::Index l = 0; l < y.size(); ++l) y[l] += config.atom_step * standard_normal(rng);
        proposal = from_unconstrained(y, spec);
        if (proposal) log_ratio = log_jacobian(*proposal, spec) - log_jacobian(theta, spec);
      }
      if (!proposal) continue;
      const double next = cluster_loglik(cs, j, *proposal, state.k, spec);
      log_ratio += next - current;
      if (log_ratio >= 0.0 || std::log(uniform01(rng)) < log_ratio) {
        theta = std::move(*proposal);
        current = next;
        ++stats.atom_accepts;
      }
    }
  }
}

void update_degrees(MixtureState& state, const PreparedData& data, const ModelConfig& model,
                    const SamplerConfig& config, Rng& rng, AcceptanceStats& stats) {
  const DomainSpec& spec = model.spec;
  const Eigen::RowVectorXd logw = log_weights(state.w).transpose();
  std::vector<Eigen::MatrixXd> parts;
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(data.size(), state.truncation());
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    parts.push_back(block_log_matrix(data, state, b, state.k[b]));
    total += parts.back();
  }
  double current = data_loglik(total, logw);
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    ++stats.degree_proposals;
    const int step = uniform01(rng) < 0.5 ? -config.degree_step : config.degree_step;
    const int proposal = state.k[b] + step;
    if (proposal < degree_lower_bound(spec, b)) continue;
    Eigen::MatrixXd part = block_log_matrix(data, state, b, proposal);
    Eigen::MatrixXd candidate = total - parts[b - 1] + part;
    const double next = data_loglik(candidate, logw);
    const double log_ratio = next - current + degree_prior_block_logpmf(model.degree_prior, spec, b, proposal) -
                             degree_prior_block_logpmf(model.degree_prior, spec, b, state.k[b]);
    if (log_ratio >= 0.0 || std::log(uniform01(rng)) < log_ratio) {
      state.k[b] = proposal;
      total = std::move(candidate);
      parts[b - 1] = std::move(part);
      current = next;
      ++stats.degree_accepts;
    }
  }
}

void update_precision(MixtureState& state, const GammaPrior& prior, Rng& rng) {
  for (Eigen::Index j = 0; j < state.v.size(); ++j) state.v[j] = std::min(state.v[j], kMaxStick);
  const auto [shape, rate] = precision_posterior(state.v, prior);
  state.M0 = sample_gamma(rng, shape, rate);
  if (!(state.M0 > 0.0)) state.M0 = std::numeric_limits<double>::min();
}

void gibbs_sweep(MixtureState& state, const PreparedData& data, const ModelConfig& model,
                 const SamplerConfig& config, Rng& rng, AcceptanceStats& stats) {
  update_labels(state, data, rng);
  update_sticks(state, rng);
  update_atoms(state, data, config, rng, stats);
  update_degrees(state, data, model, config, rng, stats);
  update_precision(state, model.precision_prior, rng);
}

MixtureState initial_state(const ModelConfig& model, const std::vector<MixedPoint>& data, Rng& rng) {
  MixtureState s = sample_prior(model, rng);
  for (Eigen::Index j = 0; j < s.v.size(); ++j) s.v[j] = std::min(s.v[j], kMaxStick);
  s.w = stick_to_weights(s.v);
  if (!data.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    for (auto& theta : s.theta) theta = clamp_interior(data[pick(rng)], model.spec, 1e-3);
  }
  return s;
}

PosteriorDraws run_chain(const SamplerConfig& config, const ModelConfig& model, const std::vector<MixedPoint>& data) {
  check_sampler_config(config);
  check_config(model);
  if (data.empty()) throw EmptyInput("no observations to fit");
  std::vector<MixedPoint> clean;
  clean.reserve(data.size());
  for (const auto& x : data) clean.push_back(clamp_interior(validate(x, model.spec), model.spec, model.interior_epsilon));
  const PreparedData prepared(model.spec, clean);

  const int keep = retained_per_chain(config);
  PosteriorDraws out;
  out.model = model;
  out.sampler = config;
  out.draws_per_chain = keep;
  out.n_obs = static_cast<int>(data.size());
  out.states.resize(static_cast<std::size_t>(keep) * config.n_chains);
  out.acceptance.resize(static_cast<std::size_t>(config.n_chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(config.n_chains));

  auto run_one = [&](int c) {
    try {
      Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(c)));
      MixtureState state = initial_state(model, clean, rng);
      AcceptanceStats& stats = out.acceptance[static_cast<std::size_t>(c)];
      int kept = 0;
      for (int t = 1; t <= config.chain_length; ++t) {
        gibbs_sweep(state, prepared, model, config, rng, stats);
        if (t > config.burn_in && (t - config.burn_in) % config.thinning == 0 && kept < keep) {
          MixtureState copy = state;
          if (!config.keep_labels) copy.xi.clear();
          out.states[static_cast<std::size_t>(c) * keep + kept++] = std::move(copy);
        }
      }
    } catch (...) {
      errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
  };

  if (config.parallel && config.n_chains > 1) {
    std::vector<std::thread> pool;
    for (int c = 0; c < config.n_chains; ++c) pool.emplace_back(run_one, c);
    for (auto& t : pool) t.join();
  } else {
    for (int c = 0; c < config.n_chains; ++c) run_one(c);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

// ------------------------------------------------------------------ persistence

void write_draws_csv(std::ostream& out, const PosteriorDraws& draws) {
  const DomainSpec& spec = draws.spec();
  std::string line = "chain,draw,atom,weight,M0";
  for (int b = 1; b <= spec.num_blocks(); ++b) line += ",k" + std::to_string(b);
  for (const auto& name : coordinate_names(spec)) line += ",theta_" + name;
  out << line << '\n';
  const int per = std::max(draws.draws_per_chain, 1);
  for (std::size_t s = 0; s < draws.states.size(); ++s) {
    const auto& st = draws.states[s];
    for (int j = 0; j < st.truncation(); ++j) {
      line = std::to_string(s / per + 1) + "," + std::to_string(s % per + 1) + "," + std::to_string(j + 1) + ",";
      append_double(line, st.w[j]);
      line += ',';
      append_double(line, st.M0);
      for (int k : st.k.k) line += "," + std::to_string(k);
      const auto flat = flatten(st.theta[static_cast<std::size_t>(j)]);
      for (Eigen::Index l = 0; l < flat.size(); ++l) {
        line += ',';
        append_double(line, flat[l]);
      }
      out << line << '\n';
    }
  }
}

namespace {

constexpr char kMagic[6] = {'D', 'M', 'B', 'P', 'P', '1'};

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw ParseError("truncated draws file");
  return value;
}

}  // namespace

void write_draws_binary(std::ostream& out, const PosteriorDraws& draws) {
  const DomainSpec& spec = draws.spec();
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(spec.num_simplex_blocks()));
  for (int d : spec.simplex_dims()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(spec.cube_dim()));
  const int N = draws.states.empty() ? 0 : draws.states.front().truncation();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(N));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(draws.states.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(draws.draws_per_chain));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(draws.n_obs));
  for (const auto& s : draws.states) {
    put<double>(out, s.M0);
    for (int k : s.k.k) put<std::int32_t>(out, k);
    for (Eigen::Index j = 0; j < s.v.size(); ++j) put<double>(out, s.v[j]);
    for (const auto& t : s.theta) {
      const auto flat = flatten(t);
      for (Eigen::Index l = 0; l < flat.size(); ++l) put<double>(out, flat[l]);
    }
  }
  if (!out) throw Error(ErrorCategory::Data, "failed to write draws");
}

PosteriorDraws read_draws_binary(std::istream& in) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw ParseError("not a DMBPP1 draws file");
  }
  const auto M = get<std::uint32_t>(in);
  if (M > 1000) throw ParseError("implausible block count in draws file");
  std::vector<int> dims;
  for (std::uint32_t m = 0; m < M; ++m) dims.push_back(static_cast<int>(get<std::uint32_t>(in)));
  const int cube = static_cast<int>(get<std::uint32_t>(in));
  const DomainSpec spec(dims, cube);
  const int N = static_cast<int>(get<std::uint32_t>(in));
  const auto count = get<std::uint32_t>(in);
  PosteriorDraws out;
  out.model = default_model_config(spec);
  out.model.truncation = std::max(N, 2);
  out.draws_per_chain = static_cast<int>(get<std::uint32_t>(in));
  out.n_obs = static_cast<int>(get<std::uint32_t>(in));
  if (N < 1 || out.draws_per_chain < 1 || count % static_cast<std::uint32_t>(out.draws_per_chain) != 0) {
    throw ParseError("inconsistent draws file header");
  }
  out.sampler.n_chains = static_cast<int>(count / static_cast<std::uint32_t>(out.draws_per_chain));
  for (std::uint32_t s = 0; s < count; ++s) {
    MixtureState st;
    st.M0 = get<double>(in);
    st.k.k.resize(M + 1);
    for (auto& k : st.k.k) k = get<std::int32_t>(in);
    st.v.resize(N - 1);
    for (Eigen::Index j = 0; j < N - 1; ++j) st.v[j] = get<double>(in);
    st.w = stick_to_weights(st.v);
    for (int j = 0; j < N; ++j) {
      Eigen::VectorXd flat(spec.total_dim());
      for (Eigen::Index l = 0; l < flat.size(); ++l) flat[l] = get<double>(in);
      st.theta.push_back(unflatten(spec, flat));
    }
    check_degrees(spec, st.k);
    out.states.push_back(std::move(st));
  }
  return out;
}

}  // namespace dmbpp
