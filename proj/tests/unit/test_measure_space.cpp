#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace locos;
using Catch::Approx;

TEST_CASE("space descriptors", "[space]") {
  auto unit = ProbabilitySpace::parse("interval:0,1");
  CHECK(unit.measure(unit.omega()) == Approx(1.0));
  CHECK_FALSE(unit.is_discrete());

  auto four = ProbabilitySpace::parse("uniform:4");
  CHECK(four.is_discrete());
  CHECK(four.num_points() == 4);
  for (double m : four.masses()) CHECK(m == Approx(0.25));

  // two segments of length 0.3 each carry half the mass
  auto two = ProbabilitySpace::parse("segments:0,0.3;0.7,1");
  auto [a, b] = two.cut_at(two.omega(), 0.5);
  CHECK(two.measure(a) == Approx(0.5).epsilon(1e-14));
  CHECK(two.measure(b) == Approx(0.5).epsilon(1e-14));

  auto pts = ProbabilitySpace::parse("points:0@1,1@3");
  CHECK(pts.mass(1) == Approx(0.75));
}

TEST_CASE("malformed space descriptors are rejected", "[space]") {
  CHECK_THROWS_AS(ProbabilitySpace::parse(""), Error);
  CHECK_THROWS_AS(ProbabilitySpace::parse("interval:1,0"), Error);
  CHECK_THROWS_AS(ProbabilitySpace::parse("interval:0,1;2,3"), Error);
  CHECK_THROWS_AS(ProbabilitySpace::parse("points:0@-1"), Error);
  CHECK_THROWS_AS(ProbabilitySpace::parse("uniform:0"), Error);
  CHECK_THROWS_AS(ProbabilitySpace::parse("sphere:2"), Error);
}

TEST_CASE("splits order children by measure", "[filtration]") {
  auto unit = ProbabilitySpace::parse("interval:0,1");
  SECTION("even cut keeps the left part first") {
    BinaryFiltration F(unit);
    auto [s, l] = F.split(0, Cut::at(0.5));
    CHECK(F.atom(s).measure == Approx(0.5));
    CHECK(F.space().contains_point(F.atom(s).support, 0.25));
    CHECK(F.space().contains_point(F.atom(l).support, 0.75));
  }
  SECTION("cut at 0.25") {
    BinaryFiltration F(unit);
    auto [s, l] = F.split(0, Cut::at(0.25));
    CHECK(F.atom(s).measure == Approx(0.25));
    CHECK(F.space().contains_point(F.atom(s).support, 0.1));
    CHECK(F.atom(l).measure == Approx(0.75));
  }
  SECTION("cut at 0.75 labels the right part A'") {
    BinaryFiltration F(unit);
    auto [s, l] = F.split(0, Cut::at(0.75));
    CHECK(F.atom(s).measure == Approx(0.25));
    CHECK(F.space().contains_point(F.atom(s).support, 0.9));
    CHECK_FALSE(F.space().contains_point(F.atom(s).support, 0.5));
    CHECK(s == 1);
    CHECK(l == 2);
  }
}

TEST_CASE("bad splits are rejected", "[filtration]") {
  BinaryFiltration F(ProbabilitySpace::parse("interval:0,1"));
  CHECK_THROWS_AS(F.split(0, Cut::at(1.5)), Error);
  CHECK_THROWS_AS(F.split(0, Cut::at(0.0)), Error);
  F.split(0, Cut::at(0.5));
  CHECK_THROWS_AS(F.split(0, Cut::at(0.25)), Error);
  CHECK_THROWS_AS(F.split(7, Cut::at(0.25)), Error);
  BinaryFiltration D(ProbabilitySpace::parse("uniform:3"));
  CHECK_THROWS_AS(D.split(0, Cut::subset(Support::points({0, 1, 2}))), Error);
  CHECK_THROWS_AS(D.split(0, Cut::at(5.0)), Error);
  CHECK_NOTHROW(D.split(0, Cut::at(0.5)));
}

TEST_CASE("random filtrations keep their invariants and survive a text round trip", "[filtration][property]") {
  oracle::Gen g(11);
  for (int trial = 0; trial < 40; ++trial) {
    int depth = g.integer(0, 14);
    std::shared_ptr<BinaryFiltration> F;
    if (trial % 2) F = g.interval_filtration(depth);
    else F = g.point_filtration(g.point_space(static_cast<std::size_t>(g.integer(2, 12))), depth);
    CHECK_NOTHROW(F->check_invariants());
    // leaves partition Omega
    double total = 0.0;
    for (auto id : F->leaves()) total += F->atom(id).measure;
    CHECK(total == Approx(1.0).epsilon(1e-12));
    for (const auto& r : F->splits()) {
      CHECK(r.small == static_cast<AtomId>(2 * r.n - 1));
      CHECK(r.large == static_cast<AtomId>(2 * r.n));
      CHECK(F->atom(r.small).measure <= F->atom(r.large).measure * (1 + 1e-14));
    }
    auto back = BinaryFiltration::from_text(F->to_text());
    REQUIRE(back.depth() == F->depth());
    CHECK(back.to_text() == F->to_text());
    for (std::size_t i = 0; i < F->atoms().size(); ++i)
      CHECK(back.atom(i).measure == Approx(F->atom(i).measure).epsilon(1e-15));
  }
}

TEST_CASE("filtration text errors carry the line number", "[filtration]") {
  std::string bad = "# c\nspace interval:0,1\n1 0 at:0.5\n3 1 at:0.1\n";
  try {
    BinaryFiltration::from_text(bad);
    FAIL("accepted an out-of-sequence split");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
  CHECK_THROWS_AS(BinaryFiltration::from_text("1 0 at:0.5\n"), Error);
}

TEST_CASE("conditional expectation", "[expectation]") {
  auto F = std::make_shared<BinaryFiltration>(ProbabilitySpace::parse("interval:0,1"));
  F->split(0, Cut::at(0.5));
  auto one = conditional_expectation(F, Function::constant(1.0), 1);
  CHECK(one(0.1) == Approx(1.0));
  CHECK(one(0.9) == Approx(1.0));
  auto ex = conditional_expectation(F, Function::identity(), 1);
  CHECK(ex(0.2) == Approx(0.25).epsilon(1e-14));
  CHECK(ex(0.7) == Approx(0.75).epsilon(1e-14));

  auto two = std::make_shared<BinaryFiltration>(ProbabilitySpace::parse("points:0@1,1@1"));
  auto e0 = conditional_expectation(two, Function::polynomial({2.0, 2.0}), 0);
  CHECK(e0(0.0) == Approx(3.0));
}

TEST_CASE("tower property on random filtrations", "[expectation][property]") {
  oracle::Gen g(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto F = g.interval_filtration(g.integer(1, 10));
    auto f = Function::polynomial({g.normal(), g.normal(), g.normal(), g.normal()});
    int n = g.integer(0, F->depth());
    int m = g.integer(0, n);
    auto En = conditional_expectation(F, f, n);
    Function En_f{[En](double x) { return En(x); }, 0, {}};
    for (auto id : F->atoms_at(n)) {
      auto [lo, hi] = F->space().hull(F->atom(id).support);
      En_f.breakpoints.push_back(lo);
      En_f.breakpoints.push_back(hi);
    }
    auto lhs = conditional_expectation(F, En_f, m);
    auto rhs = conditional_expectation(F, f, m);
    for (auto id : F->atoms_at(m)) CHECK(std::abs(lhs.by_atom[id] - rhs.by_atom[id]) < 1e-10);
  }
}

TEST_CASE("Doob maximal function", "[expectation]") {
  auto F = std::make_shared<BinaryFiltration>(gen::dyadic(ProbabilitySpace::parse("interval:0,1"), 3));
  auto one = doob_maximal(F, Function::constant(1.0), F->depth());
  for (auto id : F->leaves()) CHECK(one.by_atom[id] == Approx(1.0));

  // f = 1_A on a leaf: the chain of means is |A|/|ancestor|, largest (1) at the leaf itself
  AtomId leaf = F->leaves().front();
  auto ind = Function::indicator(F->space(), F->atom(leaf).support);
  auto M = doob_maximal(F, ind, F->depth());
  CHECK(M.by_atom[leaf] == Approx(1.0));
  for (auto id : F->leaves()) {
    if (id == leaf) continue;
    double best = 0.0;
    for (int n = 0; n <= F->depth(); ++n) {
      auto a = F->ancestor_at(id, n);
      if (F->is_ancestor_or_self(a, leaf)) best = std::max(best, F->atom(leaf).measure / F->atom(a).measure);
    }
    CHECK(M.by_atom[id] == Approx(best));
  }

  auto x = Function::polynomial({-0.3, 1.0});
  auto Mx = doob_maximal(F, x, F->depth());
  auto E0 = 0.0;
  for (int k = 0; k < 1000; ++k) E0 += std::abs((k + 0.5) / 1000 - 0.3) / 1000;
  for (auto id : F->leaves()) CHECK(Mx.by_atom[id] >= E0 - 1e-6);
}
