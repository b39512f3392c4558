#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace locos;
using Catch::Approx;

namespace {

// Haar system on a discrete space: every quantity is a finite sum over points
struct PointHaar {
  ProbabilitySpace sp;
  std::shared_ptr<BinaryFiltration> F;
  oracle::PointSpace P;
  OrthoSystem sys;
};

PointHaar point_haar(std::uint64_t seed, std::size_t points, int depth, const char* local = "indicator") {
  oracle::Gen g(seed);
  auto sp = g.point_space(points);
  auto F = g.point_filtration(sp, depth);
  return {sp, F, oracle::points_of(sp), OrthoSystem::build(F, LocalSpace::parse(local))};
}

double pnorm(const oracle::PointSpace& P, const Eigen::VectorXd& v, double p) {
  double s = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) s += P.mass[i] * std::pow(std::abs(v(static_cast<Eigen::Index>(i))), p);
  return std::pow(s, 1.0 / p);
}

// steps as point vectors
std::vector<Eigen::VectorXd> step_values(const PointHaar& h, const Eigen::VectorXd& f) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& d : h.sys.differences(f)) out.push_back(oracle::values(h.sys.layout(), h.P, d));
  return out;
}

}  // namespace

TEST_CASE("sign search", "[analysis][signs]") {
  CHECK(parse_sign_mode("exhaustive") == SignMode::exhaustive);
  CHECK_THROWS_AS(parse_sign_mode("lucky"), Error);
  auto w = detail::pattern_from_mask(0b101, 4);
  REQUIRE(w.size() == 4);
  CHECK(w[0] == 1);
  // the first sign is pinned to +, the mask covers the rest
  Rng rng(1);
  int calls = 0;
  auto r = detail::search_signs(6, SignMode::exhaustive, 12, 10, rng, [&](const std::vector<signed char>& s) {
    ++calls;
    double v = 0;
    for (std::size_t i = 0; i < s.size(); ++i) v += s[i] * (i % 2 ? -1.0 : 1.0);
    return v;
  });
  CHECK(calls == 32);
  CHECK(r.value == 6.0);
}

TEST_CASE("unconditionality at p = 2 is Parseval", "[analysis][uncond]") {
  oracle::Gen g(41);
  for (int t = 0; t < 5; ++t) {
    auto F = g.interval_filtration(g.integer(2, 10));
    auto sys = OrthoSystem::build(F, LocalSpace::polynomial(1));
    UncondOptions o;
    o.trials = 3;
    o.seed = g.bits();
    o.random_patterns = 50;
    CHECK(std::abs(unconditionality_constant(sys, 2.0, o).constant - 1.0) < 1e-10);
    Eigen::VectorXd f = g.vector(sys.dim());
    auto s = g.signs(sys.steps().size());
    CHECK(std::abs(signed_sum_ratio(sys, f, s, 2.0) - 1.0) < 1e-10);
  }
}

TEST_CASE("a single psi has ratio 1 for every pattern", "[analysis][uncond]") {
  auto F = std::make_shared<BinaryFiltration>(gen::dyadic(ProbabilitySpace::parse("interval:0,1"), 3));
  auto sys = OrthoSystem::build(F, LocalSpace::indicator());
  auto f = sys.full(5);
  oracle::Gen g(42);
  for (int t = 0; t < 20; ++t) CHECK(signed_sum_ratio(sys, f, g.signs(sys.steps().size()), 4.0) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("unconditionality constant matches a brute-force sign sweep", "[analysis][uncond][oracle]") {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto h = point_haar(seed, 9, 7);
    for (double p : {1.5, 3.0, 4.0}) {
      UncondOptions o;
      o.trials = 4;
      o.seed = seed;
      auto rep = unconditionality_constant(h.sys, p, o);
      Eigen::VectorXd f = Eigen::Map<Eigen::VectorXd>(rep.witness_f.data(), static_cast<Eigen::Index>(rep.witness_f.size()));
      auto steps = step_values(h, f);
      Eigen::VectorXd fv = oracle::values(h.sys.layout(), h.P, f);
      double best = 0.0;
      std::size_t K = steps.size();
      for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << K); ++mask) {
        Eigen::VectorXd s = Eigen::VectorXd::Zero(fv.size());
        for (std::size_t k = 0; k < K; ++k) s += ((mask >> k) & 1 ? -1.0 : 1.0) * steps[k];
        best = std::max(best, pnorm(h.P, s, p) / pnorm(h.P, fv, p));
      }
      CHECK(rep.constant == Approx(best).epsilon(1e-10));
      CHECK(rep.constant >= 1.0 - 1e-12);
      CHECK(signed_sum_ratio(h.sys, f, rep.witness_signs, p) == Approx(rep.constant).epsilon(1e-10));
    }
  }
}

TEST_CASE("memoized sums agree with direct norms", "[analysis][terms]") {
  oracle::Gen g(43);
  auto F = g.interval_filtration(9);
  auto sys = OrthoSystem::build(F, LocalSpace::polynomial(2));
  Eigen::VectorXd f = g.vector(sys.dim());
  auto d = sys.differences(f);
  TermSums ts(sys.layout(), d);
  for (int t = 0; t < 20; ++t) {
    std::vector<signed char> w(d.size());
    Eigen::VectorXd s = Eigen::VectorXd::Zero(f.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
      w[k] = static_cast<signed char>(g.integer(-1, 1));
      s += w[k] * d[k];
    }
    for (double p : {1.0, 1.5, 2.0, 3.0}) CHECK(ts.norm(w, p) == Approx(sys.layout().lp_norm(s, p)).epsilon(1e-12).margin(1e-15));
  }
}

TEST_CASE("weak type of a single Haar function", "[analysis][weak]") {
  auto F = std::make_shared<BinaryFiltration>(ProbabilitySpace::parse("interval:0,1"));
  F->split(0, Cut::at(0.2));
  auto sys = OrthoSystem::build(F, LocalSpace::indicator());
  auto h = oracle::haar(0.2, 0.8);
  auto f = sys.full(1);
  double l1 = h.on_small * 0.2 + std::abs(h.on_large) * 0.8;
  for (double lambda : {h.on_small / 2, 0.1, 3.0}) {
    double prob = 0.2 * (h.on_small > lambda) + 0.8 * (std::abs(h.on_large) > lambda);
    for (auto s : {std::vector<int>{1, 1}, std::vector<int>{1, -1}})
      CHECK(weak_type_ratio(sys, f, s, {lambda}) == Approx(lambda * prob / l1).epsilon(1e-12));
  }
  // the level is strict
  CHECK(weak_type_ratio(sys, f, {1, 1}, {h.on_small}) == 0.0);
}

TEST_CASE("weak type tail matches a point-wise brute force", "[analysis][weak][oracle]") {
  oracle::Gen g(44);
  for (std::uint64_t seed : {4, 5}) {
    auto h = point_haar(seed, 10, 8, seed == 4 ? "indicator" : "polynomial:1");
    Eigen::VectorXd f = g.vector(h.sys.dim());
    auto steps = step_values(h, f);
    double l1 = pnorm(h.P, oracle::values(h.sys.layout(), h.P, f), 1.0);
    auto grid = default_lambda_grid(l1);
    for (int t = 0; t < 10; ++t) {
      auto s = g.signs(steps.size());
      Eigen::VectorXd run = Eigen::VectorXd::Zero(steps[0].size()), sup = run;
      for (std::size_t k = 0; k < steps.size(); ++k) {
        run += s[k] * steps[k];
        sup = sup.cwiseMax(run.cwiseAbs());
      }
      double best = 0.0;
      for (double lam : grid) {
        double prob = 0.0;
        for (std::size_t i = 0; i < h.P.size(); ++i) prob += h.P.mass[i] * (sup(static_cast<Eigen::Index>(i)) > lam * (1 + 1e-12));
        best = std::max(best, lam * prob);
      }
      CHECK(weak_type_ratio(h.sys, f, s) == Approx(best / l1).epsilon(1e-9));
    }
  }
}

TEST_CASE("weak type sweep is bounded and reproducible", "[analysis][weak]") {
  auto F = std::make_shared<BinaryFiltration>(gen::dyadic(ProbabilitySpace::parse("interval:0,1"), 3));
  auto sys = OrthoSystem::build(F, LocalSpace::indicator());
  WeakOptions o;
  o.trials = 5;
  o.seed = 9;
  auto a = weak_type_sweep(sys, o);
  o.jobs = 3;
  auto b = weak_type_sweep(sys, o);
  CHECK(a.constant == b.constant);
  CHECK(a.witness_signs == b.witness_signs);
  CHECK(a.constant > 0.0);
  CHECK(a.constant < 10.0);
}

TEST_CASE("square function sides", "[analysis][square]") {
  auto F = std::make_shared<BinaryFiltration>(gen::dyadic(ProbabilitySpace::parse("interval:0,1"), 3));
  auto sys = OrthoSystem::build(F, LocalSpace::indicator());
  oracle::Gen g(45);
  Eigen::VectorXd a = g.vector(sys.size());
  auto s2 = square_function_sides(sys, a, 2.0);
  CHECK(s2.lhs == Approx(a.norm()).epsilon(1e-12));
  CHECK(s2.rhs == Approx(a.norm()).epsilon(1e-12));
  auto z = square_function_sides(sys, Eigen::VectorXd::Zero(a.size()), 3.0);
  CHECK(z.lhs == 0.0);
  CHECK(z.rhs == 0.0);
  // a single coefficient on an even split: |psi|^2 = 1_{A_n}/|A_n| against 1_{A'}/|A'|
  Eigen::VectorXd e = Eigen::VectorXd::Zero(a.size());
  e(4) = 1.0;
  for (double p : {1.5, 3.0}) {
    auto s = square_function_sides(sys, e, p);
    double An = F->atom(sys.psi(4).atom).measure;
    CHECK(s.lhs == Approx(std::pow(An, 1 / p - 0.5)).epsilon(1e-12));
    CHECK(s.rhs == Approx(std::pow(An / 2, 1 / p - 0.5)).epsilon(1e-12));
  }
  auto r = square_function_equivalence(sys, 3.0, 10, 1);
  CHECK(r.low <= r.high);
  CHECK(r.low >= 1 / std::sqrt(2.0) - 1e-9);
  CHECK(r.high <= std::sqrt(2.0) + 1e-9);
}

TEST_CASE("democracy", "[analysis][democracy]") {
  auto F = std::make_shared<BinaryFiltration>(gen::dyadic(ProbabilitySpace::parse("interval:0,1"), 4));
  auto sys = OrthoSystem::build(F, LocalSpace::indicator());
  // splits 2^g .. 2^{g+1}-1 form dyadic generation g with disjoint supports
  for (int gen = 0; gen < 4; ++gen) {
    std::vector<std::size_t> L;
    for (std::size_t m = std::size_t(1) << gen; m < (std::size_t(2) << gen); ++m) L.push_back(m);
    for (double p : {1.5, 3.0}) CHECK(democracy_ratio(sys, p, L) == Approx(1.0).epsilon(1e-9));
  }
  CHECK(democracy_ratio(sys, 3.0, {7}) == Approx(1.0).epsilon(1e-12));
  CHECK(democracy_ratio(sys, 3.0, {7, 3, 12}) == Approx(democracy_ratio(sys, 3.0, {12, 7, 3})));
  CHECK_THROWS_AS(democracy_ratio(sys, 3.0, {}), Error);
  CHECK_THROWS_AS(democracy_ratio(sys, 3.0, {2, 2}), Error);
}

TEST_CASE("democracy of a nested Haar chain in closed form", "[analysis][democracy][oracle]") {
  // A_k = [0, 2^-k), split evenly; psi_k / ||psi_k||_p = +-|A_k|^{-1/p}
  const int depth = 8;
  const double p = 3.0;
  auto F = std::make_shared<BinaryFiltration>(gen::chain(ProbabilitySpace::parse("interval:0,1"), depth));
  auto sys = OrthoSystem::build(F, LocalSpace::indicator());
  std::vector<std::size_t> L;
  for (std::size_t m = 1; m <= depth; ++m) L.push_back(m);
  // value on the right half of A_j and on the last left half
  double power = 0.0;
  for (int j = 0; j < depth; ++j) {
    double v = -std::pow(2.0, j / p);
    for (int k = 0; k < j; ++k) v += std::pow(2.0, k / p);
    power += std::pow(2.0, -j - 1) * std::pow(std::abs(v), p);
  }
  double last = 0.0;
  for (int k = 0; k < depth; ++k) last += std::pow(2.0, k / p);
  power += std::pow(2.0, -depth) * std::pow(last, p);
  double want = std::pow(power, 1 / p) / std::pow(depth, 1 / p);
  CHECK(democracy_ratio(sys, p, L) == Approx(want).epsilon(1e-12));
}

TEST_CASE("p-norms of psi", "[analysis][psinorm]") {
  auto F = std::make_shared<BinaryFiltration>(ProbabilitySpace::parse("interval:0,1"));
  F->split(0, Cut::at(0.25));
  auto sys = OrthoSystem::build(F, LocalSpace::indicator());
  auto r = p_norm_of_psi(sys, 1, 4.0);
  CHECK(r.measured == Approx(std::pow(9 * 0.25 + 0.75 / 9, 0.25)).epsilon(1e-12));
  CHECK(r.measured == Approx(1.236).margin(1e-3));
  CHECK(r.predicted == Approx(std::pow(0.25, 0.25 - 0.5)).epsilon(1e-14));
  CHECK(r.ratio == Approx(0.874).margin(1e-3));
  auto two = p_norm_of_psi(sys, 1, 2.0);
  CHECK(two.measured == Approx(1.0).epsilon(1e-14));
  CHECK(two.predicted == Approx(1.0));

  auto E = std::make_shared<BinaryFiltration>(ProbabilitySpace::parse("interval:0,1"));
  E->split(0, Cut::at(0.5));
  auto even = OrthoSystem::build(E, LocalSpace::indicator());
  for (double p : {1.0, 1.5, 3.0, 6.0}) {
    auto q = p_norm_of_psi(even, 1, p);
    CHECK(q.measured == Approx(1.0).epsilon(1e-13));
    CHECK(q.predicted == Approx(std::pow(0.5, 1 / p - 0.5)));
  }
}

TEST_CASE("greedy approximation", "[analysis][greedy]") {
  oracle::Gen g(46);
  auto F = g.interval_filtration(11);
  auto sys = OrthoSystem::build(F, LocalSpace::indicator());
  REQUIRE(sys.size() == 12);
  for (int t = 0; t < 5; ++t) {
    Eigen::VectorXd f = g.vector(sys.dim());
    for (std::size_t m = 0; m <= 12; m += 3) {
      auto r = greedy_vs_best(sys, f, m, 2.0);
      CHECK(r.exhaustive);
      CHECK(r.greedy_error == Approx(r.best_error).epsilon(1e-12).margin(1e-14));
    }
    auto full = greedy_vs_best(sys, f, 12, 3.0);
    CHECK(full.greedy_error < 1e-12);
    CHECK(full.best_error < 1e-12);
  }
}

TEST_CASE("best m-term error matches subset enumeration", "[analysis][greedy][oracle]") {
  auto h = point_haar(47, 10, 9);
  REQUIRE(h.sys.size() == 10);
  oracle::Gen g(47);
  for (int t = 0; t < 3; ++t) {
    Eigen::VectorXd f = g.vector(h.sys.dim());
    auto a = h.sys.coefficients(f);
    std::vector<Eigen::VectorXd> term;
    for (std::size_t k = 0; k < 10; ++k) term.push_back(a(static_cast<Eigen::Index>(k)) * oracle::values(h.sys.layout(), h.P, h.sys.full(k)));
    for (std::size_t m : {1, 3, 5}) {
      for (double p : {1.5, 3.0}) {
        double best = INFINITY;
        for (std::uint64_t mask = 0; mask < 1024; ++mask) {
          if (static_cast<std::size_t>(__builtin_popcountll(mask)) != m) continue;
          Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(h.P.size()));
          for (std::size_t k = 0; k < 10; ++k)
            if (!((mask >> k) & 1)) r += term[k];
          best = std::min(best, pnorm(h.P, r, p));
        }
        auto res = greedy_vs_best(h.sys, f, m, p);
        CHECK(res.best_error == Approx(best).epsilon(1e-10));
        CHECK(res.ratio >= 1.0 - 1e-12);
      }
    }
  }
}

TEST_CASE("greedy falls back to bounds on large systems", "[analysis][greedy]") {
  oracle::Gen g(48);
  auto F = g.interval_filtration(30);
  auto sys = OrthoSystem::build(F, LocalSpace::indicator());
  Eigen::VectorXd f = g.vector(sys.dim());
  auto hi = greedy_vs_best(sys, f, 5, 3.0);
  CHECK_FALSE(hi.exhaustive);
  CHECK(hi.best_kind == "lower_bound");
  CHECK(hi.ratio >= 1.0 - 1e-12);
  auto lo = greedy_vs_best(sys, f, 5, 1.5);
  CHECK(lo.best_kind == "upper_bound");
}

TEST_CASE("density of indicators", "[analysis][density]") {
  auto sp = ProbabilitySpace::parse("interval:0,1");
  auto third = Support::intervals({{0.0, 1.0 / 3.0}});
  auto seq = density_experiment(sp, LocalSpace::indicator(), third, Refinement::dyadic, 12, 2.0);
  REQUIRE(seq.size() == 13);
  for (int L = 1; L <= 12; ++L) CHECK(seq[static_cast<std::size_t>(L)].error == Approx(std::sqrt(2.0) / 3 * std::pow(2.0, -L / 2.0)).epsilon(1e-9));

  auto quarter = Support::intervals({{0.0, 0.25}});
  auto q = density_experiment(sp, LocalSpace::indicator(), quarter, Refinement::dyadic, 4, 1.5);
  CHECK(q[1].error > 0.0);
  for (std::size_t L = 2; L < q.size(); ++L) CHECK(q[L].error < 1e-14);

  // adaptive refinement only touches the atom carrying 1/3
  auto ad = density_experiment(sp, LocalSpace::indicator(), third, Refinement::adaptive, 8, 2.0);
  for (std::size_t L = 1; L < ad.size(); ++L) {
    CHECK(ad[L].splits == static_cast<int>(L));
    CHECK(ad[L].error <= ad[L - 1].error + 1e-15);
  }

  // S = span{x} vanishes at 0: the point mass at 0 is never reached
  auto pts = ProbabilitySpace::parse("points:0@1,1@1,2@1,3@1");
  auto zero = Support::points({0});
  auto bad = density_experiment(pts, LocalSpace::parse("custom:x"), zero, Refinement::dyadic, 3, 2.0);
  for (const auto& d : bad) CHECK(d.error >= std::pow(0.25, 0.5) - 1e-12);
  CHECK_THROWS_AS(density_experiment(pts, LocalSpace::parse("custom:x"), zero, Refinement::adaptive, 5, 2.0), Error);
}
