#include "dmbpp/simlab.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include "dmbpp/format.hpp"

namespace dmbpp {

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

Scenario scenario_I() {
  Scenario s;
  s.id = "I";
  s.spec = DomainSpec({2}, 1);
  s.weights = {0.3, 0.5, 0.2};
  s.components = {
      {{vec({2.1, 10, 3})}, {{1, 10}}},
      {{vec({10, 3.1, 10})}, {{5, 5}}},
      {{vec({10, 3.1, 10})}, {{10, 1}}},
  };
  return s;
}

Scenario scenario_II() {
  Scenario s;
  s.id = "II";
  s.spec = DomainSpec({3, 2}, 2);
  s.weights = {0.3, 0.2, 0.2, 0.1, 0.1, 0.1};
  const Eigen::VectorXd common = vec({10, 3.1, 10});
  s.components = {
      {{vec({8, 14, 2, 3}), vec({2.1, 10, 3})}, {{1, 5}, {1, 10}}},
      {{vec({18, 2, 4, 5}), common}, {{1, 5}, {5, 5}}},
      {{vec({9, 18, 2, 4}), common}, {{2, 3}, {5, 5}}},
      {{vec({14, 2, 8, 3}), common}, {{10, 8}, {5, 5}}},
      {{vec({2, 28, 4, 2}), common}, {{15, 10}, {10, 1}}},
      {{vec({22, 4, 8, 1}), common}, {{20, 1}, {10, 1}}},
  };
  return s;
}

Scenario scenario_by_id(const std::string& id) {
  if (id == "I") return scenario_I();
  if (id == "II") return scenario_II();
  throw InvalidArgument("unknown scenario '" + id + "'");
}

void check_scenario(const Scenario& s) {
  if (s.weights.size() != s.components.size() || s.weights.empty()) {
    throw InvalidArgument("scenario needs one weight per component");
  }
  double total = 0.0;
  for (double w : s.weights) {
    if (!(w >= 0.0)) throw InvalidArgument("negative scenario weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("scenario weights do not sum to 1");
  for (const auto& c : s.components) {
    if (static_cast<int>(c.dirichlet.size()) != s.spec.num_simplex_blocks() ||
        static_cast<int>(c.beta.size()) != s.spec.cube_dim()) {
      throw InvalidArgument("component shape does not match the domain");
    }
    for (int m = 1; m <= s.spec.num_simplex_blocks(); ++m) {
      const auto& a = c.dirichlet[static_cast<std::size_t>(m - 1)];
      if (a.size() != s.spec.block_dim(m) + 1 || (a.array() <= 0.0).any()) {
        throw InvalidArgument("bad Dirichlet parameters");
      }
    }
    for (const auto& [a, b] : c.beta) {
      if (!(a > 0.0 && b > 0.0)) throw InvalidArgument("bad Beta parameters");
    }
  }
}

namespace {

double component_logpdf(const ScenarioComponent& c, const DomainSpec& spec, const MarginalSubset& subset,
                        const MixedPoint& x) {
  double out = 0.0;
  int b = 0;
  for (int m = 1; m <= spec.num_simplex_blocks(); ++m) {
    const auto& parts = subset.simplex_parts[static_cast<std::size_t>(m - 1)];
    if (parts.empty()) continue;
    const auto& alpha = c.dirichlet[static_cast<std::size_t>(m - 1)];
    Eigen::VectorXd agg(static_cast<Eigen::Index>(parts.size()) + 1);
    for (std::size_t i = 0; i < parts.size(); ++i) agg[static_cast<Eigen::Index>(i)] = alpha[parts[i]];
    agg[agg.size() - 1] = alpha.sum() - agg.head(agg.size() - 1).sum();
    out += log_dirichlet_pdf<double>(x.simplex[static_cast<std::size_t>(b++)], agg);
  }
  int kept = 0;
  for (int l = 0; l < spec.cube_dim(); ++l) {
    if (!subset.cube_keep[static_cast<std::size_t>(l)]) continue;
    const auto [a, bb] = c.beta[static_cast<std::size_t>(l)];
    out += log_beta_pdf<double>(x.cube[kept++], a, bb);
  }
  return out;
}

double scenario_subset_logpdf(const Scenario& s, const MarginalSubset& subset, const MixedPoint& x) {
  std::vector<double> terms;
  terms.reserve(s.components.size());
  for (std::size_t c = 0; c < s.components.size(); ++c) {
    terms.push_back(std::log(s.weights[c]) + component_logpdf(s.components[c], s.spec, subset, x));
  }
  return log_sum_exp(terms);
}

}  // namespace

double scenario_logpdf(const Scenario& s, const MixedPoint& x) {
  validate(x, s.spec);
  return scenario_subset_logpdf(s, MarginalSubset::all(s.spec), x);
}

double scenario_density(const Scenario& s, const MixedPoint& x) { return std::exp(scenario_logpdf(s, x)); }

double scenario_marginal_density(const Scenario& s, const MarginalSubset& subset, const MixedPoint& x_partial) {
  validate(x_partial, subset_domain(s.spec, subset));
  return std::exp(scenario_subset_logpdf(s, subset, x_partial));
}

Eigen::VectorXd scenario_density_values(const Scenario& s, const std::vector<MixedPoint>& points) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(points.size()));
  const MarginalSubset all = MarginalSubset::all(s.spec);
  for (std::size_t i = 0; i < points.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = std::exp(scenario_subset_logpdf(s, all, points[i]));
  }
  return out;
}

Eigen::VectorXd scenario_marginal_values(const Scenario& s, const MarginalSubset& subset,
                                         const std::vector<MixedPoint>& points) {
  subset_domain(s.spec, subset);
  Eigen::VectorXd out(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = std::exp(scenario_subset_logpdf(s, subset, points[i]));
  }
  return out;
}

MeasureOracle scenario_measure(const Scenario& s) {
  check_scenario(s);
  std::vector<std::vector<BlockMeasure>> comps;
  for (const auto& c : s.components) {
    std::vector<BlockMeasure> blocks;
    for (const auto& a : c.dirichlet) blocks.push_back(dirichlet_measure(a));
    blocks.push_back(s.spec.cube_dim() > 0 ? beta_product_measure(c.beta) : uniform_cube_measure());
    comps.push_back(std::move(blocks));
  }
  return MeasureOracle::product_mixture(s.weights, std::move(comps));
}

std::vector<MixedPoint> scenario_sample(const Scenario& s, int n, Rng& rng) {
  if (n < 1) throw InvalidArgument("sample size must be positive");
  check_scenario(s);
  std::discrete_distribution<std::size_t> pick(s.weights.begin(), s.weights.end());
  std::vector<MixedPoint> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& c = s.components[pick(rng)];
    MixedPoint x;
    for (const auto& a : c.dirichlet) x.simplex.push_back(sample_dirichlet(rng, a));
    x.cube.resize(s.spec.cube_dim());
    for (int l = 0; l < s.spec.cube_dim(); ++l) {
      x.cube[l] = sample_beta(rng, c.beta[static_cast<std::size_t>(l)].first, c.beta[static_cast<std::size_t>(l)].second);
    }
    out.push_back(std::move(x));
  }
  return out;
}

// ------------------------------------------------------------------ replicate experiments

namespace {

/// Integration rules and true density values, shared by every fit of a scenario.
struct L1Plan {
  std::vector<MarginalSubset> subsets;
  std::vector<IntegrationRule> rules;
  std::vector<PreparedData> prepared;
  std::vector<Eigen::VectorXd> truth;
  IntegrationRule joint_rule;
  PreparedData joint_prepared;
  Eigen::VectorXd joint_truth;
};

L1Plan make_plan(const Scenario& s, const ReplicateOptions& options) {
  L1Plan plan;
  const int vars = static_cast<int>(variable_names(s.spec).size());
  for (int v = 0; v < vars; ++v) {
    MarginalSubset subset = single_variable(s.spec, v);
    const DomainSpec sub = subset_domain(s.spec, subset);
    IntegrationRule rule = make_grid(sub, uniform_grid_spec(sub, options.marginal_resolution));
    plan.truth.push_back(scenario_marginal_values(s, subset, rule.points));
    plan.prepared.emplace_back(sub, rule.points);
    plan.rules.push_back(std::move(rule));
    plan.subsets.push_back(std::move(subset));
  }
  plan.joint_rule = integration_rule(s.spec, options.joint);
  plan.joint_truth = scenario_density_values(s, plan.joint_rule.points);
  plan.joint_prepared = PreparedData(s.spec, plan.joint_rule.points);
  return plan;
}

Eigen::VectorXd plan_l1(const L1Plan& plan, const Scenario& s, const PosteriorDraws& draws) {
  if (draws.states.empty()) throw EmptyInput("no posterior draws");
  const auto vars = static_cast<Eigen::Index>(plan.subsets.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(vars + 1);
  for (const auto& st : draws.states) {
    for (Eigen::Index v = 0; v < vars; ++v) {
      const auto vi = static_cast<std::size_t>(v);
      const Eigen::VectorXd f = mixture_marginal_values(st, s.spec, plan.subsets[vi], plan.prepared[vi]);
      out[v] += l1_distance(f, plan.truth[vi], plan.rules[vi]);
    }
    out[vars] += l1_distance(mixture_density_values(st, plan.joint_prepared), plan.joint_truth, plan.joint_rule);
  }
  return out / static_cast<double>(draws.states.size());
}

}  // namespace

Eigen::VectorXd posterior_l1(const Scenario& s, const PosteriorDraws& draws, const ReplicateOptions& options) {
  if (!(draws.spec() == s.spec)) throw DimensionMismatch("draws and scenario live on different domains");
  return plan_l1(make_plan(s, options), s, draws);
}

ReplicateReport run_replicates(const Scenario& s, int n, int replicates, const SamplerConfig& sampler,
                               const ModelConfig& model, const ReplicateOptions& options) {
  if (replicates < 1) throw InvalidArgument("replicate count must be positive");
  if (!(model.spec == s.spec)) throw DimensionMismatch("model and scenario live on different domains");
  const auto start = std::chrono::steady_clock::now();
  const L1Plan plan = make_plan(s, options);
  ReplicateReport report;
  report.scenario = s.id;
  report.n = n;
  report.replicates = replicates;
  report.variables = variable_names(s.spec);
  report.variables.push_back("joint");
  report.per_replicate.resize(replicates, static_cast<Eigen::Index>(report.variables.size()));
  AcceptanceStats acc;
  for (int r = 0; r < replicates; ++r) {
    Rng data_rng(derive_seed(sampler.seed, 2 * static_cast<std::uint64_t>(r)));
    const auto data = scenario_sample(s, n, data_rng);
    SamplerConfig cfg = sampler;
    cfg.seed = derive_seed(sampler.seed, 2 * static_cast<std::uint64_t>(r) + 1);
    const PosteriorDraws draws = run_chain(cfg, model, data);
    acc += draws.total_acceptance();
    report.per_replicate.row(r) = plan_l1(plan, s, draws).transpose();
  }
  report.mpel1 = report.per_replicate.colwise().mean().transpose();
  report.atom_acceptance = acc.atom_rate();
  report.degree_acceptance = acc.degree_rate();
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_table_csv(std::ostream& out, const std::vector<ReplicateReport>& reports) {
  if (reports.empty()) throw EmptyInput("no reports to tabulate");
  std::string line = "variable";
  for (const auto& r : reports) {
    if (r.variables != reports.front().variables) throw InvalidArgument("reports cover different variables");
    line += ",n=" + std::to_string(r.n);
  }
  out << line << '\n';
  for (std::size_t v = 0; v < reports.front().variables.size(); ++v) {
    line = reports.front().variables[v];
    for (const auto& r : reports) {
      line += ',';
      append_double(line, r.mpel1[static_cast<Eigen::Index>(v)]);
    }
    out << line << '\n';
  }
}

void write_dataset_csv(std::ostream& out, const DomainSpec& spec, const std::vector<MixedPoint>& data) {
  std::string line;
  for (const auto& name : coordinate_names(spec)) line += name + ",";
  if (!line.empty()) line.back() = '\n';
  out << line;
  for (const auto& x : data) {
    line.clear();
    const auto flat = flatten(x);
    for (Eigen::Index l = 0; l < flat.size(); ++l) {
      append_double(line, flat[l]);
      line += ',';
    }
    if (!line.empty()) line.back() = '\n';
    out << line;
  }
}

}  // namespace dmbpp
