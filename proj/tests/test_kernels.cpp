#include "doctest.h"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>

#include "dmbpp/kernels.hpp"
#include "dmbpp/random.hpp"

using namespace dmbpp;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

MultiIndex idx(std::initializer_list<int> v) {
  MultiIndex out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

// n choose r by direct multiplication
double choose(int n, int r) {
  double c = 1.0;
  for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
  return c;
}

}  // namespace

TEST_CASE("binomial pmf") {
  CHECK(log_binomial_pmf(1, 1, 0.3) == doctest::Approx(std::log(0.3)).epsilon(1e-14));
  CHECK(log_binomial_pmf(2, 4, 0.5) == doctest::Approx(std::log(0.375)).epsilon(1e-14));
  CHECK(log_binomial_pmf(0, 3, 0.0) == 0.0);
  CHECK(log_binomial_pmf(1, 3, 0.0) == kNegInf);
  CHECK_THROWS_AS(log_binomial_pmf(5, 4, 0.5), InvalidArgument);
  CHECK_THROWS_AS(log_binomial_pmf(1, 4, 1.5), InvalidArgument);
  for (int k = 0; k <= 20; ++k) {
    for (double x : {0.0, 0.01, 0.3, 0.5, 0.77, 1.0}) {
      std::vector<double> logs;
      for (int j = 0; j <= k; ++j) logs.push_back(log_binomial_pmf(j, k, x));
      CHECK(log_sum_exp(logs) == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("multinomial pmf") {
  CHECK(log_multinomial_pmf<double>(idx({1, 1}), 2, vec({0.5, 0.5})) == doctest::Approx(std::log(0.5)));
  for (int k = 0; k <= 9; ++k) {
    for (int j = 0; j <= k; ++j) {
      CHECK(log_multinomial_pmf<double>(idx({j}), k, vec({0.37})) ==
            doctest::Approx(log_binomial_pmf(j, k, 0.37)).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(log_multinomial_pmf<double>(idx({2, 2}), 3, vec({0.2, 0.2})), InvalidArgument);
  Rng rng(5);
  for (int d = 1; d <= 3; ++d) {
    for (int k = 0; k <= 8; ++k) {
      const Eigen::VectorXd x = sample_dirichlet(rng, Eigen::VectorXd::Ones(d + 1));
      std::vector<double> logs;
      for (const auto& j : enumerate_J(d, k)) logs.push_back(log_multinomial_pmf<double>(j, k, x));
      CHECK(std::abs(log_sum_exp(logs)) < 1e-12);
    }
  }
}

TEST_CASE("Dirichlet and Beta densities") {
  CHECK(log_dirichlet_pdf<double>(vec({0.2, 0.3}), vec({1, 1, 1})) == doctest::Approx(std::log(2.0)));
  CHECK(log_dirichlet_pdf<double>(vec({0.5}), vec({2, 2})) == doctest::Approx(std::log(1.5)));
  CHECK(log_beta_pdf(0.5, 1.0, 1.0) == doctest::Approx(0.0));
  CHECK(log_beta_pdf(0.25, 2.0, 1.0) == doctest::Approx(std::log(0.5)));
  CHECK_THROWS_AS(log_dirichlet_pdf<double>(vec({0.5}), vec({0, 2})), InvalidArgument);
  CHECK_THROWS_AS(log_dirichlet_pdf<double>(vec({0.5}), vec({1, 2, 3})), InvalidArgument);
  CHECK_THROWS_AS(log_beta_pdf(0.5, -1.0, 1.0), InvalidArgument);
  CHECK(log_dirichlet_pdf<double>(vec({0.7, 0.4}), vec({2, 2, 2})) == kNegInf);

  const double mass = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      [](double x) { return std::exp(log_beta_pdf(x, 3.0, 2.0)); }, 0.0, 1.0, 10, 1e-14);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));

  // centroid rule on the uniform triangulation of S_2
  const int r = 200;
  const Eigen::VectorXd alpha = vec({2.0, 3.5, 1.5});
  double total = 0.0;
  for (int a = 0; a < r; ++a) {
    for (int b = 0; a + b < r; ++b) {
      total += std::exp(log_dirichlet_pdf<double>(vec({(a + 1.0 / 3) / r, (b + 1.0 / 3) / r}), alpha));
      if (a + b + 1 < r) {
        total += std::exp(log_dirichlet_pdf<double>(vec({(a + 2.0 / 3) / r, (b + 2.0 / 3) / r}), alpha));
      }
    }
  }
  CHECK(total * 0.5 / (r * r) == doctest::Approx(1.0).epsilon(1e-3));

  Rng rng(9);
  for (int t = 0; t < 200; ++t) {
    const double x = uniform01(rng);
    const double a = 0.5 + 10 * uniform01(rng);
    const double b = 0.5 + 10 * uniform01(rng);
    CHECK(log_dirichlet_pdf<double>(vec({x}), vec({a, b})) == doctest::Approx(log_beta_pdf(x, a, b)).epsilon(1e-12));
  }
}

TEST_CASE("index enumeration") {
  const auto j21 = enumerate_J(1, 2);
  REQUIRE(j21.size() == 3);
  CHECK(j21[0][0] == 0);
  CHECK(j21[2][0] == 2);
  CHECK(enumerate_J(2, 3).size() == 10);
  CHECK(enumerate_J(3, 2).size() == 10);

  const auto i23 = enumerate_I(2, 3);
  REQUIRE(i23.size() == 3);
  CHECK(i23[0] == idx({1, 1}));
  CHECK(i23[1] == idx({1, 2}));
  CHECK(i23[2] == idx({2, 1}));
  CHECK(enumerate_I(1, 1).size() == 1);

  for (int d = 1; d <= 3; ++d) {
    for (int k = 0; k <= 10; ++k) {
      const auto J = enumerate_J(d, k);
      CHECK(J.size() == static_cast<std::size_t>(choose(k + d, d)));
      if (k >= d) CHECK(enumerate_I(d, k).size() == static_cast<std::size_t>(choose(k, d)));
      CHECK(std::is_sorted(J.begin(), J.end(), [](const MultiIndex& a, const MultiIndex& b) {
        return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
      }));
      for (const auto& j : J) CHECK((j.sum() <= k && j.minCoeff() >= 0));
    }
  }
  CHECK(enumerate_box(2, 3).size() == 9);
  CHECK_THROWS_AS(enumerate_J(3, 100, 1000), SizeLimit);
}

TEST_CASE("alpha_map") {
  CHECK(alpha_map(4, 2, idx({1, 1})) == vec({1, 1, 3}));
  CHECK(alpha_map(3, 3, idx({1, 1, 1})) == vec({1, 1, 1, 1}));
  CHECK(alpha_map(3, 1, idx({3})) == vec({3, 1}));
  CHECK_THROWS_AS(alpha_map(3, 2, idx({2, 2})), InvalidArgument);
  for (int d = 1; d <= 3; ++d) {
    for (int k = d; k <= 10; ++k) {
      for (const auto& j : enumerate_I(d, k)) {
        const Eigen::VectorXd a = alpha_map(k, d, j);
        CHECK(a.sum() == k + 1);
        CHECK(a.minCoeff() >= 1.0);
      }
    }
  }
}

TEST_CASE("cells tile the unit box") {
  const Cell c = cell_of(idx({1}), 2);
  CHECK(c.lower[0] == 0.0);
  CHECK(c.upper[0] == 0.5);
  const Cell c2 = cell_of(idx({2, 1}), 3);
  CHECK(c2.lower == vec({1.0 / 3, 0.0}));
  CHECK(c2.upper == vec({2.0 / 3, 1.0 / 3}));
  CHECK_THROWS_AS(cell_of(idx({0}), 2), InvalidArgument);
  CHECK_THROWS_AS(cell_of(idx({3}), 2), InvalidArgument);

  // every point of the box lies in exactly one cell; volumes sum to 1
  Rng rng(1);
  for (int k = 1; k <= 6; ++k) {
    const auto cells = enumerate_box(2, k);
    double volume = 0.0;
    for (const auto& j : cells) {
      const Cell cl = cell_of(j, k);
      volume += (cl.upper - cl.lower).prod();
      CHECK((cl.upper - cl.lower).array().isApprox(Eigen::ArrayXd::Constant(2, 1.0 / k)));
    }
    CHECK(volume == doctest::Approx(1.0).epsilon(1e-12));
    for (int t = 0; t < 100; ++t) {
      const Eigen::VectorXd x = vec({uniform01(rng), uniform01(rng)});
      int hits = 0;
      for (const auto& j : cells) {
        const Cell cl = cell_of(j, k);
        if ((x.array() > cl.lower.array()).all() && (x.array() <= cl.upper.array()).all()) ++hits;
      }
      CHECK(hits == 1);
    }
  }
}

TEST_CASE("log_sum_exp and log_factorial") {
  CHECK(log_sum_exp(std::vector<double>{}) == kNegInf);
  CHECK(log_sum_exp(std::vector<double>{kNegInf, kNegInf}) == kNegInf);
  CHECK(log_sum_exp(std::vector<double>{1000.0, 1000.0}) == doctest::Approx(1000.0 + std::log(2.0)));
  CHECK(log_factorial(0) == 0.0);
  CHECK(log_factorial(5) == doctest::Approx(std::log(120.0)).epsilon(1e-15));
  CHECK(log_factorial(2000) == doctest::Approx(std::lgamma(2001.0)).epsilon(1e-14));
  CHECK(binomial_coefficient(10, 3) == 120.0);
}
