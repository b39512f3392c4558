#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace locos;
using Catch::Approx;

TEST_CASE("Gauss-Legendre rules integrate polynomials exactly", "[quadrature]") {
  for (int n = 1; n <= 24; ++n) {
    const auto& r = gauss_legendre(n);
    double wsum = 0.0;
    for (double w : r.weights) wsum += w;
    CHECK(wsum == Approx(2.0).epsilon(1e-14));
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double got = gauss_integrate([k](double x) { return std::pow(x, k); }, -0.3, 1.7, n);
      CHECK(got == Approx(oracle::monomial_integral(k, -0.3, 1.7)).epsilon(1e-12).margin(1e-13));
    }
  }
}

TEST_CASE("inner products and norms on [0,1]", "[quadrature]") {
  auto sp = ProbabilitySpace::parse("interval:0,1");
  auto one = Function::constant(1.0);
  auto x = Function::identity();
  CHECK(inner(sp, one, one, sp.omega()) == Approx(1.0));
  CHECK(inner(sp, x, one, sp.omega()) == Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(inner(sp, x, x, sp.omega()) - 1.0 / 3.0) < 1e-13);

  for (double p : {1.0, 1.5, 2.0, 3.0, 7.0, double(INFINITY)}) CHECK(lp_norm(sp, one, p, sp.omega()) == Approx(1.0));
  auto haar = Function::steps({0.0, 0.5, 1.0}, {1.0, -1.0});
  for (double p : {1.0, 1.5, 2.0, 4.0, double(INFINITY)}) CHECK(lp_norm(sp, haar, p, sp.omega()) == Approx(1.0).epsilon(1e-14));
  CHECK(lp_norm(sp, x, 2.0, sp.omega()) == Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
  // |x - 1/3|^p has a kink inside the interval
  auto y = Function::polynomial({-1.0 / 3.0, 1.0});
  double exact = (std::pow(1.0 / 3.0, 2.5) + std::pow(2.0 / 3.0, 2.5)) / 2.5;
  CHECK(std::pow(lp_norm(sp, y, 1.5, sp.omega()), 1.5) == Approx(exact).epsilon(1e-12));
}

TEST_CASE("discrete backing sums over points", "[quadrature]") {
  auto sp = ProbabilitySpace::parse("points:0@1,1@1,2@2");
  auto sq = Function::polynomial({0.0, 0.0, 1.0});
  CHECK(integrate(sp, sp.omega(), sq) == Approx(0.25 * 1 + 0.5 * 4));
  CHECK(sup_norm(sp, sq, sp.omega()) == Approx(4.0));
  CHECK(superlevel_measure(sp, sp.omega(), sq.eval, 1.0, 2) == Approx(0.75));
  CHECK(superlevel_measure(sp, sp.omega(), sq.eval, 1.0, 2, {}, {}, true) == Approx(0.5));
}

TEST_CASE("level sets of polynomials", "[quadrature]") {
  auto sp = ProbabilitySpace::parse("interval:0,1");
  // |x^2 - 1/4| >= 1/8: x <= sqrt(1/8) or x >= sqrt(3/8)
  auto f = [](double x) { return x * x - 0.25; };
  double want = std::sqrt(0.125) + 1.0 - std::sqrt(0.375);
  CHECK(superlevel_measure(sp, sp.omega(), f, 0.125, 2) == Approx(want).epsilon(1e-10));
  CHECK(superlevel_measure(sp, sp.omega(), f, 10.0, 2) == 0.0);
}

TEST_CASE("adaptive fallback for non-polynomial integrands", "[quadrature]") {
  auto sp = ProbabilitySpace::parse("interval:0,2");
  Function e{[](double x) { return std::exp(x); }, -1, {}};
  CHECK(integrate(sp, sp.omega(), e) == Approx((std::exp(2.0) - 1.0) / 2.0).epsilon(1e-11));
  Function bad{[](double) { return NAN; }, -1, {}};
  CHECK_THROWS_AS(integrate(sp, sp.omega(), bad), Error);
}

TEST_CASE("integrals over random subsets match piecewise closed forms", "[quadrature][property]") {
  oracle::Gen g(3);
  auto sp = ProbabilitySpace::parse("interval:0,1");
  for (int t = 0; t < 50; ++t) {
    double a = g.uniform(0.0, 0.5), b = g.uniform(0.5, 1.0);
    auto s = Support::intervals({{a, b}});
    int k = g.integer(0, 9);
    Function f{[k](double x) { return std::pow(x, k); }, k, {}};
    CHECK(integrate(sp, s, f) == Approx(oracle::monomial_integral(k, a, b)).epsilon(1e-12));
  }
}
