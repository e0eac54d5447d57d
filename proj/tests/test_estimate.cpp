#include "doctest.h"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <sstream>

#include "dmbpp/estimate.hpp"
#include "generators.hpp"

using namespace dmbpp;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

MixedPoint pt(std::vector<Eigen::VectorXd> simplex, Eigen::VectorXd cube = Eigen::VectorXd()) {
  return MixedPoint{std::move(simplex), std::move(cube)};
}

MixtureState random_state(const DomainSpec& spec, int N, double lambda, Rng& rng) {
  ModelConfig m = default_model_config(spec);
  m.truncation = N;
  m.degree_prior = TruncatedPoisson{std::vector<double>(spec.num_blocks(), lambda)};
  return sample_prior(m, rng);
}

/// A one-atom state: w = (1, 0, ...).
MixtureState single_atom(const DomainSpec& spec, const MixedPoint& theta, DegreeVector k) {
  MixtureState s;
  s.v = vec({1.0});
  s.w = stick_to_weights(s.v);
  s.theta = {theta, theta};
  s.k = std::move(k);
  return s;
}

PosteriorDraws draws_of(const DomainSpec& spec, std::vector<MixtureState> states) {
  PosteriorDraws d;
  d.model = default_model_config(spec);
  d.model.truncation = states.front().truncation();
  d.draws_per_chain = static_cast<int>(states.size());
  d.states = std::move(states);
  return d;
}

double gk(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 12, 1e-12);
}

}  // namespace

TEST_CASE("coordinate subsets") {
  const DomainSpec spec({2}, 1);
  CHECK(variable_names(spec) == std::vector<std::string>{"x1_1", "x1_2", "x1_3", "x2"});
  CHECK(subset_domain(spec, single_variable(spec, 2)) == DomainSpec({1}, 0));
  CHECK(subset_domain(spec, single_variable(spec, 3)) == DomainSpec({}, 1));
  CHECK(subset_domain(spec, MarginalSubset::all(spec)) == spec);
  CHECK(subset_domain(spec, drop_block(spec, BlockIndex{1})) == DomainSpec({}, 1));
  CHECK_THROWS_AS(single_variable(spec, 4), InvalidArgument);

  MarginalSubset everything = MarginalSubset::none(spec);
  everything.simplex_parts[0] = {0, 1, 2};
  CHECK_THROWS_AS(check_subset(spec, everything), UnsupportedSubset);
  CHECK_THROWS_AS(check_subset(spec, MarginalSubset::none(spec)), UnsupportedSubset);
  MarginalSubset unordered = MarginalSubset::none(spec);
  unordered.simplex_parts[0] = {1, 0};
  CHECK_THROWS_AS(check_subset(spec, unordered), UnsupportedSubset);
  MarginalSubset wrong = MarginalSubset::none(spec);
  wrong.cube_keep.push_back(true);
  CHECK_THROWS_AS(check_subset(spec, wrong), DimensionMismatch);

  MarginalSubset tail = MarginalSubset::none(spec);
  tail.simplex_parts[0] = {2};
  tail.cube_keep[0] = true;
  const MixedPoint p = project(pt({vec({0.2, 0.3})}, vec({0.9})), spec, tail);
  REQUIRE(p.simplex.size() == 1);
  CHECK(p.simplex[0][0] == doctest::Approx(0.5));
  CHECK(p.cube == vec({0.9}));
}

TEST_CASE("Dirichlet aggregation of a kernel") {
  // alpha_map(8, 2, (2,3)) = (2, 3, 4); the atom (0.2, 0.3) maps to j = (2, 3) at k = 8
  const DomainSpec spec({2}, 0);
  const MixtureState s = single_atom(spec, pt({vec({0.2, 0.3})}), DegreeVector{{8, 1}});
  for (double x : {0.05, 0.3, 0.6, 0.9}) {
    CHECK(mixture_marginal_logpdf(s, spec, single_variable(spec, 0), pt({vec({x})})) ==
          doctest::Approx(log_beta_pdf(x, 2.0, 7.0)).epsilon(1e-13));
    CHECK(mixture_marginal_logpdf(s, spec, single_variable(spec, 2), pt({vec({x})})) ==
          doctest::Approx(log_beta_pdf(x, 4.0, 5.0)).epsilon(1e-13));
  }
}

TEST_CASE("keeping every variable reproduces the joint") {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const DomainSpec spec = gen::small_spec(rng);
    const MixtureState s = random_state(spec, 5, 8.0, rng);
    const MixedPoint x = gen::interior_point(spec, rng, 1e-4);
    CHECK(mixture_marginal_logpdf(s, spec, MarginalSubset::all(spec), x) ==
          doctest::Approx(mixture_logpdf(x, s, spec)).epsilon(1e-14));
  }
}

TEST_CASE("aggregated marginals match direct integration of the joint") {
  Rng rng(2);
  const DomainSpec spec({2}, 1);
  for (int t = 0; t < 10; ++t) {
    const MixtureState s = random_state(spec, 5, 10.0, rng);
    const double a = 0.05 + 0.5 * uniform01(rng);
    const double c = uniform01(rng);
    // keep x1_2 and x2: integrate x1_1 over (0, 1 - a)
    MarginalSubset keep = MarginalSubset::none(spec);
    keep.simplex_parts[0] = {1};
    keep.cube_keep[0] = true;
    const double direct = gk([&](double u) { return std::exp(mixture_logpdf(pt({vec({u, a})}, vec({c})), s, spec)); }, 0.0, 1.0 - a);
    CHECK(std::exp(mixture_marginal_logpdf(s, spec, keep, pt({vec({a})}, vec({c})))) == doctest::Approx(direct).epsilon(1e-6));

    // keep only the implicit part r = 1 - x1_1 - x1_2: integrate over x1_1 in (0, 1 - r) and the cube
    const double r = a;
    const double implicit = gk([&](double u) {
      return gk([&](double z) { return std::exp(mixture_logpdf(pt({vec({u, 1.0 - r - u})}, vec({z})), s, spec)); }, 0.0, 1.0);
    }, 0.0, 1.0 - r);
    CHECK(std::exp(mixture_marginal_logpdf(s, spec, single_variable(spec, 2), pt({vec({r})}))) ==
          doctest::Approx(implicit).epsilon(1e-6));
  }

  // two kept parts of an S_3 block: integrate the dropped stored coordinate
  const DomainSpec s3({3}, 0);
  for (int t = 0; t < 5; ++t) {
    const MixtureState s = random_state(s3, 4, 9.0, rng);
    const double a = 0.1 + 0.3 * uniform01(rng);
    const double c = 0.1 + 0.3 * uniform01(rng);
    MarginalSubset keep = MarginalSubset::none(s3);
    keep.simplex_parts[0] = {0, 2};
    const double direct = gk([&](double u) { return std::exp(mixture_logpdf(pt({vec({a, u, c})}), s, s3)); }, 0.0, 1.0 - a - c);
    CHECK(std::exp(mixture_marginal_logpdf(s, s3, keep, pt({vec({a, c})}))) == doctest::Approx(direct).epsilon(1e-6));

    // keeping d of the d+1 parts only reparametrizes the block
    MarginalSubset last = MarginalSubset::none(s3);
    last.simplex_parts[0] = {1, 2, 3};
    const double b = 0.2;
    CHECK(mixture_marginal_logpdf(s, s3, last, pt({vec({a, c, b})})) ==
          doctest::Approx(mixture_logpdf(pt({vec({1.0 - a - c - b, a, c})}), s, s3)).epsilon(1e-12));
  }
}

TEST_CASE("marginal by Monte Carlo over the dropped block") {
  Rng rng(3);
  const DomainSpec spec({2}, 2);
  const MixtureState s = random_state(spec, 6, 6.0, rng);
  const MarginalSubset keep = drop_block(spec, BlockIndex{1});
  const MixedPoint at = pt({Eigen::VectorXd()}, vec({0.3, 0.6}));
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    MixedPoint x = gen::interior_point(spec, rng, 1e-9);
    x.cube = at.cube;
    sum += std::exp(mixture_logpdf(x, s, spec)) * 0.5;
  }
  const MixedPoint kept = pt({}, vec({0.3, 0.6}));
  CHECK(std::exp(mixture_marginal_logpdf(s, spec, keep, kept)) == doctest::Approx(sum / n).epsilon(2e-2));
}

TEST_CASE("conditional times marginal equals joint") {
  Rng rng(4);
  const DomainSpec spec({2}, 2);
  for (int t = 0; t < 50; ++t) {
    const MixtureState s = random_state(spec, 5, 8.0, rng);
    const MixedPoint x = gen::interior_point(spec, rng, 1e-3);
    for (int target = 1; target <= 2; ++target) {
      const MarginalSubset rest = drop_block(spec, BlockIndex{target});
      const double joint = mixture_logpdf(x, s, spec);
      const double marg = mixture_marginal_logpdf(s, spec, rest, project(x, spec, rest));
      const double cond = mixture_conditional_logpdf(s, spec, BlockIndex{target}, x.block(target), x);
      CHECK(std::exp(cond + marg - joint) == doctest::Approx(1.0).epsilon(1e-10));
      const Eigen::VectorXd W = conditional_weights(s, spec, BlockIndex{target}, x);
      CHECK(W.sum() == doctest::Approx(1.0).epsilon(1e-14));
    }
  }

  // a single component conditional is the target kernel
  const MixedPoint theta = gen::interior_point(spec, rng);
  const MixtureState one = single_atom(spec, theta, DegreeVector{{7, 4}});
  const MixedPoint x = gen::interior_point(spec, rng);
  const DomainSpec target = block_domain(spec, BlockIndex{1});
  CHECK(target == DomainSpec({2}, 0));
  const double kernel = kernel_logpdf(pt({x.simplex[0]}), pt({theta.simplex[0]}), DegreeVector{{7, 1}}, target);
  CHECK(mixture_conditional_logpdf(one, spec, BlockIndex{1}, x.simplex[0], x) == doctest::Approx(kernel).epsilon(1e-12));

  // integrates to one over the target block
  const MixtureState s = random_state(spec, 5, 8.0, rng);
  const IntegrationRule rule = make_grid(target, uniform_grid_spec(target, 100));
  const Eigen::VectorXd vals = mixture_conditional_values(s, spec, BlockIndex{1}, x, PreparedData(target, rule.points));
  CHECK(rule.weights.dot(vals) == doctest::Approx(1.0).epsilon(1e-2));

  const DomainSpec line({1}, 1);
  MixtureState far = single_atom(line, pt({vec({0.999})}, vec({0.5})), DegreeVector{{400, 1}});
  CHECK_THROWS_AS(conditional_weights(far, line, BlockIndex{2}, pt({vec({1e-6})}, vec({0.5}))), ZeroMarginal);
}

TEST_CASE("integration rules") {
  for (const auto& spec : {DomainSpec({}, 1), DomainSpec({1}, 1), DomainSpec({2}, 1), DomainSpec({}, 3), DomainSpec({3}, 0)}) {
    const IntegrationRule g = make_grid(spec, uniform_grid_spec(spec, 12));
    CHECK(g.weights.sum() == doctest::Approx(spec.volume()).epsilon(1e-12));
    for (const auto& p : g.points) CHECK(is_interior(p, 0.0));
  }
  const DomainSpec tri({2}, 1);
  CHECK(make_grid(tri, uniform_grid_spec(tri, 10)).points.size() == 10u * 10u * 10u);

  const IntegrationRule mc = make_mc_rule(DomainSpec({3, 2}, 2), 5000, 7);
  CHECK(mc.points.size() == 5000);
  CHECK(mc.weights.sum() == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
  for (const auto& p : mc.points) CHECK_NOTHROW(validate(p, DomainSpec({3, 2}, 2)));

  L1Options grid;
  CHECK(integration_rule(tri, grid).points.size() == 40u * 40u * 40u);
  const IntegrationRule forced = integration_rule(DomainSpec({2}, 2), grid);
  CHECK(forced.points.size() == 200000);
  CHECK(integration_rule(DomainSpec({3}, 0), grid).points.size() == 200000);
  grid.grid_resolution = 3;
  CHECK_THROWS_AS(integration_rule(tri, grid), BudgetTooSmall);
  L1Options mcopt{L1Method::MonteCarlo, 40, 999, 1};
  CHECK_THROWS_AS(integration_rule(tri, mcopt), BudgetTooSmall);
}

TEST_CASE("L1 distance") {
  const DomainSpec line({}, 1);
  const DensityFn flat = [](const MixedPoint&) { return 1.0; };
  const DensityFn ramp = [](const MixedPoint& x) { return 2.0 * x.cube[0]; };
  CHECK(l1_distance(flat, ramp, line) == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(l1_distance(ramp, ramp, line) == 0.0);

  Rng rng(5);
  const DomainSpec spec({2}, 1);
  const MixtureState a = random_state(spec, 5, 8.0, rng);
  const MixtureState b = random_state(spec, 5, 8.0, rng);
  const MixtureState c = random_state(spec, 5, 8.0, rng);
  auto f = [&](const MixtureState& s) { return DensityFn([&](const MixedPoint& x) { return std::exp(mixture_logpdf(x, s, spec)); }); };
  L1Options opts;
  opts.grid_resolution = 20;
  const double ab = l1_distance(f(a), f(b), spec, opts);
  CHECK(ab == l1_distance(f(b), f(a), spec, opts));
  CHECK(ab <= l1_distance(f(a), f(c), spec, opts) + l1_distance(f(c), f(b), spec, opts) + 1e-12);
  CHECK(ab >= 0.0);
  CHECK(ab <= 2.0 + 1e-6);

  opts.method = L1Method::MonteCarlo;
  opts.mc_draws = 100000;
  CHECK(l1_distance(f(a), f(b), spec, opts) == doctest::Approx(ab).epsilon(0.03));

  CHECK(mpel1({0.37}) == 0.37);
  CHECK(mpel1({0.1, 0.2, 0.3}) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK_THROWS_AS(mpel1({}), EmptyInput);
}

TEST_CASE("posterior summaries") {
  CHECK(quantile({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
  CHECK(quantile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({5}, 0.975) == 5);

  Rng rng(6);
  const DomainSpec spec({2}, 1);
  const MixtureState a = random_state(spec, 4, 8.0, rng);
  const MixtureState b = random_state(spec, 4, 8.0, rng);
  std::vector<MixedPoint> pts;
  for (int i = 0; i < 30; ++i) pts.push_back(gen::interior_point(spec, rng, 1e-3));

  const DensityEstimate single = predictive_density(draws_of(spec, {a}), pts);
  for (int i = 0; i < 30; ++i) {
    CHECK(single.mean[i] == doctest::Approx(std::exp(mixture_logpdf(pts[i], a, spec))).epsilon(1e-12));
    CHECK(single.lower[i] == single.mean[i]);
    CHECK(single.upper[i] == single.mean[i]);
  }
  const DensityEstimate pair = predictive_density(draws_of(spec, {a, b}), pts);
  for (int i = 0; i < 30; ++i) {
    const double fa = std::exp(mixture_logpdf(pts[i], a, spec));
    const double fb = std::exp(mixture_logpdf(pts[i], b, spec));
    CHECK(pair.mean[i] == doctest::Approx(0.5 * (fa + fb)).epsilon(1e-12));
  }

  std::vector<MixtureState> many;
  for (int i = 0; i < 40; ++i) many.push_back(random_state(spec, 4, 8.0, rng));
  const PosteriorDraws d = draws_of(spec, many);
  const DensityEstimate est = predictive_density(d, pts);
  CHECK(est.coord_names == std::vector<std::string>{"x1_1", "x1_2", "x2"});
  for (int i = 0; i < 30; ++i) {
    CHECK(est.lower[i] <= est.mean[i]);
    CHECK(est.mean[i] <= est.upper[i]);
    CHECK(est.lower[i] >= 0.0);
  }

  const MarginalSubset x2 = single_variable(spec, 3);
  std::vector<MixedPoint> line;
  for (double c : {0.1, 0.5, 0.9}) line.push_back(pt({}, vec({c})));
  const DensityEstimate marg = predictive_marginal(d, x2, line);
  CHECK(marg.coord_names == std::vector<std::string>{"x2"});

  // conditional times marginal equals the joint draw by draw, hence in the mean for one draw
  const MixedPoint x = pts[0];
  const DensityEstimate cond = predictive_conditional(draws_of(spec, {a}), BlockIndex{2}, x, {pt({}, x.cube)});
  const MarginalSubset rest = drop_block(spec, BlockIndex{2});
  const double m = std::exp(mixture_marginal_logpdf(a, spec, rest, project(x, spec, rest)));
  CHECK(cond.mean[0] * m == doctest::Approx(std::exp(mixture_logpdf(x, a, spec))).epsilon(1e-10));

  std::stringstream csv;
  write_density_csv(csv, marg);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "x2,mean,q025,q975");
}

TEST_CASE("credible ellipses") {
  Rng rng(7);
  const int n = 4000;
  Eigen::MatrixX2d draws(n, 2);
  for (int i = 0; i < n; ++i) {
    const double z1 = standard_normal(rng), z2 = standard_normal(rng);
    draws(i, 0) = 0.3 + 0.05 * z1;
    draws(i, 1) = 0.4 + 0.03 * z1 + 0.02 * z2;
  }
  const Ellipse e = credible_ellipse(draws);
  CHECK(e.shape(0, 0) == doctest::Approx(0.0025 * 5.991464547).epsilon(0.06));
  int inside = 0;
  for (int i = 0; i < n; ++i) inside += contains(e, draws.row(i).transpose());
  CHECK(std::abs(inside / double(n) - 0.95) < 3 * std::sqrt(0.95 * 0.05 / n) + 0.005);

  Eigen::MatrixX2d same(5, 2);
  same.rowwise() = Eigen::RowVector2d(0.2, 0.3);
  const Ellipse flat = credible_ellipse(same);
  CHECK(flat.shape.isZero());
  CHECK(contains(flat, Eigen::Vector2d(0.2, 0.3)));
  CHECK_FALSE(contains(flat, Eigen::Vector2d(0.2, 0.31)));
  CHECK_THROWS_AS(credible_ellipse(Eigen::MatrixX2d(0, 2)), EmptyInput);

  // Dirichlet(1,1,1) target kernel: minimal degree on S_2
  const DomainSpec spec({2}, 1);
  const MixtureState s = single_atom(spec, gen::interior_point(spec, rng), DegreeVector{{2, 3}});
  const PosteriorDraws d = draws_of(spec, {s, s, s});
  const MixedPoint x = gen::interior_point(spec, rng);
  const Eigen::MatrixX2d means = conditional_means(d, BlockIndex{1}, x);
  CHECK(means(0, 0) == doctest::Approx(1.0 / 3));
  CHECK(means(0, 1) == doctest::Approx(1.0 / 3));
  const Ellipse region = conditional_mean_region(d, BlockIndex{1}, x);
  CHECK(region.center.isApprox(Eigen::Vector2d(1.0 / 3, 1.0 / 3)));
  CHECK(region.shape.isZero());
  CHECK_THROWS(conditional_means(d, BlockIndex{2}, x));

  std::stringstream csv;
  write_ellipse_csv(csv, region);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "level,center1,center2,shape11,shape12,shape22");
}
