#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace locos;
using Catch::Approx;

namespace {

OrthoSystem eight_points(const char* local = "indicator", std::uint64_t seed = 1) {
  auto sp = ProbabilitySpace::parse("points:0@1,1@2,2@1,3@3,4@1,5@2,6@1,7@4");
  oracle::Gen g(seed);
  auto F = g.point_filtration(sp, 7);
  return OrthoSystem::build(F, LocalSpace::parse(local));
}

// walk down the tree; each atom stops with probability 0.3 at its own level
StoppingTime random_stopping_time(const OrthoSystem& sys, oracle::Gen& g) {
  const auto& lay = sys.layout();
  const auto& F = sys.filtration();
  StoppingTime T = StoppingTime::constant(lay, kNever);
  if (g.uniform() < 0.1) return StoppingTime::constant(lay, -1);
  for (int n = 0; n <= F.depth(); ++n)
    for (auto id : F.atoms_at(n)) {
      if (g.uniform() >= 0.3) continue;
      auto [b, e] = lay.leaves_of(id);
      for (auto l = b; l < e; ++l) T.by_leaf[l] = std::min(T.by_leaf[l], n);
    }
  return T;
}

}  // namespace

TEST_CASE("stopped process at constant times", "[gundy]") {
  oracle::Gen g(31);
  auto sys = eight_points("polynomial:1");
  const auto& lay = sys.layout();
  Eigen::VectorXd f = g.vector(sys.dim());
  CHECK((stopped_process(sys, f, StoppingTime::constant(lay, kNever)) - f).norm() == 0.0);
  CHECK((stopped_process(sys, f, StoppingTime::constant(lay, sys.depth())) - f).norm() < 1e-12);
  CHECK(stopped_process(sys, f, StoppingTime::constant(lay, -1)).norm() == 0.0);
  auto P2 = stopped_process(sys, f, StoppingTime::constant(lay, 2));
  CHECK((P2 - sys.level_projection(f, 2)).norm() < 1e-12);
}

TEST_CASE("stopped Haar process equals the mean on the stopping atom", "[gundy]") {
  auto F = std::make_shared<BinaryFiltration>(gen::dyadic(ProbabilitySpace::parse("interval:0,1"), 3));
  auto sys = OrthoSystem::build(F, LocalSpace::indicator());
  const auto& lay = sys.layout();
  StoppingTime T{std::vector<int>(lay.num_leaves())};
  for (std::size_t l = 0; l < lay.num_leaves(); ++l) {
    auto leaf = lay.leaf(l).atom;
    int n = 0;
    while (F->atom(F->ancestor_at(leaf, n)).measure > 0.25 + 1e-15) ++n;
    T.by_leaf[l] = n;
  }
  REQUIRE(is_stopping_time(lay, T));
  auto x = sys.to_coords(Function::identity());
  auto gT = stopped_process(sys, x, T);
  for (int i = 0; i < 64; ++i) {
    double p = (i + 0.5) / 64;
    // the quarter of [0,1] containing p
    double q = std::floor(p * 4) / 4;
    CHECK(lay.value(gT, p) == Approx(q + 0.125).epsilon(1e-13));
  }
}

TEST_CASE("adaptedness of stopping times", "[gundy]") {
  auto sys = eight_points();
  const auto& lay = sys.layout();
  CHECK(is_stopping_time(lay, StoppingTime::constant(lay, 3)));
  // stopping at level 0 on a single leaf is not decided by level-0 information
  auto T = StoppingTime::constant(lay, kNever);
  T.by_leaf[0] = 0;
  CHECK_FALSE(is_stopping_time(lay, T));
  oracle::Gen g(32);
  for (int t = 0; t < 50; ++t) CHECK(is_stopping_time(lay, random_stopping_time(sys, g)));
}

TEST_CASE("projections do not see past the stopping time", "[gundy][oracle]") {
  oracle::Gen g(33);
  for (const char* S : {"indicator", "polynomial:1"}) {
    auto sys = eight_points(S, 7);
    for (int t = 0; t < 20; ++t) {
      auto T = random_stopping_time(sys, g);
      Eigen::VectorXd f = g.vector(sys.dim());
      for (int n = 0; n <= sys.depth(); ++n)
        for (int j = 0; j <= sys.ell(n); ++j) CHECK(stopping_identity_check(sys, f, T, n, j) < 1e-10);
    }
    auto f = g.vector(sys.dim());
    CHECK(stopping_identity_check(sys, f, StoppingTime::constant(sys.layout(), kNever), 2, 0) == 0.0);
  }
}

TEST_CASE("decomposition without stopping", "[gundy]") {
  oracle::Gen g(34);
  auto sys = eight_points();
  Eigen::VectorXd f = g.vector(sys.dim());
  f /= sys.layout().lp_norm(f, 1.0);
  auto P = decompose(sys, f, 1e9, 1.0);
  for (int x : P.T.by_leaf) CHECK(x == kNever);
  CHECK(P.a.norm() == 0.0);
  CHECK(P.b.norm() < 1e-14);
  CHECK((P.c - f).cwiseAbs().maxCoeff() < 1e-12);
  auto rep = verify_parts(sys, P);
  CHECK(rep.norm_a == 0.0);
  CHECK(rep.norm_db_sum < 1e-14);
}

TEST_CASE("decomposition at tiny heights stops immediately", "[gundy]") {
  oracle::Gen g(35);
  auto sys = eight_points("polynomial:1");
  Eigen::VectorXd f = g.vector(sys.dim());
  f /= sys.layout().lp_norm(f, 1.0);
  auto P = decompose(sys, f, 1e-9, 1.0);
  Eigen::VectorXd P0 = sys.level_projection(f, 0);
  for (std::size_t l = 0; l < sys.layout().num_leaves(); ++l) {
    REQUIRE(P.T.by_leaf[l] <= 0);
    Eigen::VectorXd want = P.T.by_leaf[l] == 0 ? Eigen::VectorXd(f - P0) : f;
    auto L = sys.layout().leaf(l);
    auto d = (P.a - want).segment(static_cast<Eigen::Index>(L.offset), L.dim);
    CHECK(d.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("decomposition on the eight-point space", "[gundy][property]") {
  oracle::Gen g(36);
  for (const char* S : {"indicator", "polynomial:1"}) {
    auto sys = eight_points(S, 3);
    auto c3 = std::max(1.0, measure_c3(sys, 100, 5).max_ratio);
    for (int t = 0; t < 20; ++t) {
      Eigen::VectorXd f = g.vector(sys.dim());
      f /= sys.layout().lp_norm(f, 1.0);
      for (double lambda : {0.5, 1.0, 2.0, 4.0}) {
        auto P = decompose(sys, f, lambda, c3);
        CHECK(P.residual < 1e-10);
        CHECK(P.difference_defect < 1e-10);
        CHECK(P.r_outside_split == 0);
        CHECK(P.scale == Approx(1.0));
        CHECK(is_stopping_time(sys.layout(), P.T));
        // a vanishes where T never stops
        for (std::size_t l = 0; l < sys.layout().num_leaves(); ++l)
          if (P.T.by_leaf[l] == kNever) CHECK(sys.layout().leaf_sup(P.a, l) < 1e-12);
        auto rep = verify_parts(sys, P);
        for (double v : {rep.norm_a, rep.prob_da, rep.norm_db_sum, rep.norm_c_1, rep.norm_c_inf_over_lambda}) {
          CHECK(std::isfinite(v));
          CHECK(v >= 0.0);
        }
      }
    }
  }
}

TEST_CASE("decomposition of zero", "[gundy]") {
  auto sys = eight_points();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.dim()));
  auto P = decompose(sys, f, 1.0, 1.0);
  auto rep = verify_parts(sys, P);
  CHECK(rep.norm_a == 0.0);
  CHECK(rep.prob_da == 0.0);
  CHECK(rep.norm_db_sum == 0.0);
  CHECK(rep.norm_c_1 == 0.0);
  CHECK(rep.norm_c_inf_over_lambda == 0.0);
  CHECK_THROWS_AS(decompose(sys, f, 0.0, 1.0), Error);
}
