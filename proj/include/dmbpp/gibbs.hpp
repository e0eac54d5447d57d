#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dmbpp/model.hpp"

namespace dmbpp {

struct SamplerConfig {
  int chain_length = 2200;
  int burn_in = 2000;
  int thinning = 10;
  int n_chains = 5;
  std::uint64_t seed = 1;
  double atom_step = 0.25;
  int degree_step = 1;
  double atom_proposal_mix = 0.3;  // probability of an independence proposal from F_0
  int atom_moves = 1;              // Metropolis steps per atom per sweep
  bool keep_labels = false;
  bool parallel = true;
};

void check_sampler_config(const SamplerConfig& config);

/// Retained draws per chain, floor((chain_length - burn_in) / thinning).
int retained_per_chain(const SamplerConfig& config);

struct AcceptanceStats {
  long atom_proposals = 0;
  long atom_accepts = 0;
  long degree_proposals = 0;
  long degree_accepts = 0;

  double atom_rate() const { return atom_proposals ? double(atom_accepts) / atom_proposals : 0.0; }
  double degree_rate() const { return degree_proposals ? double(degree_accepts) / degree_proposals : 0.0; }
  AcceptanceStats& operator+=(const AcceptanceStats& o);
};

struct PosteriorDraws {
  ModelConfig model;
  SamplerConfig sampler;
  std::vector<MixtureState> states;  // chain-major
  int draws_per_chain = 0;
  int n_obs = 0;
  std::vector<AcceptanceStats> acceptance;  // one per chain

  const DomainSpec& spec() const { return model.spec; }
  AcceptanceStats total_acceptance() const;
};

// ------------------------------------------------------------------ full conditionals

/// Normalized label probabilities from unnormalized log values.
/// Throws DegenerateLikelihood when every entry is -inf.
Eigen::VectorXd categorical_from_logs(const Eigen::VectorXd& logp);

/// (a, b) of the Beta full conditional of each stick, v_j ~ Beta(1 + n_j, M0 + sum_{l>j} n_l).
std::vector<std::pair<double, double>> stick_posterior(const std::vector<int>& labels, int truncation, double M0);

/// (shape, rate) of the Gamma full conditional of the precision.
std::pair<double, double> precision_posterior(const Eigen::VectorXd& v, const GammaPrior& prior);

/// Upper clamp applied to stick fractions.
inline constexpr double kMaxStick = 1.0 - 1e-12;

/// Log density of F_0 (uniform on the product space), -inf off the interior.
double base_logpdf(const MixedPoint& theta, const DomainSpec& spec);

// ------------------------------------------------------------------ updates

void update_labels(MixtureState& state, const PreparedData& data, Rng& rng);
void update_sticks(MixtureState& state, Rng& rng);
void update_atoms(MixtureState& state, const PreparedData& data, const SamplerConfig& config, Rng& rng,
                  AcceptanceStats& stats);
void update_degrees(MixtureState& state, const PreparedData& data, const ModelConfig& model,
                    const SamplerConfig& config, Rng& rng, AcceptanceStats& stats);
void update_precision(MixtureState& state, const GammaPrior& prior, Rng& rng);

/// labels, sticks, atoms, degrees, precision.
void gibbs_sweep(MixtureState& state, const PreparedData& data, const ModelConfig& model,
                 const SamplerConfig& config, Rng& rng, AcceptanceStats& stats);

/// Starting state: prior sticks, precision and degrees; atoms at randomly chosen observations.
MixtureState initial_state(const ModelConfig& model, const std::vector<MixedPoint>& data, Rng& rng);

/// Runs every chain (in parallel unless disabled) and keeps the thinned post-burn-in states.
/// Data are clamped to the model's interior margin first.
PosteriorDraws run_chain(const SamplerConfig& config, const ModelConfig& model, const std::vector<MixedPoint>& data);

// ------------------------------------------------------------------ persistence

/// Columns: chain,draw,atom,weight,M0,k1..k{M+1},then the atom's coordinates.
void write_draws_csv(std::ostream& out, const PosteriorDraws& draws);

/// Binary dump with magic "DMBPP1". Stores the domain, sample size, degrees, sticks, precision
/// and atoms in host byte order.
void write_draws_binary(std::ostream& out, const PosteriorDraws& draws);
/// Restores a dump; model and sampler settings other than the domain are defaults.
PosteriorDraws read_draws_binary(std::istream& in);

}  // namespace dmbpp
