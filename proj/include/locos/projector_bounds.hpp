#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "locos/error.hpp"
#include "locos/function.hpp"
#include "locos/orthosystem.hpp"
#include "locos/quadrature.hpp"
#include "locos/random.hpp"

namespace locos {

struct PsiBound {
  std::size_t m = 0;
  int n = 0;
  int j = 0;
  double small_ratio = 0.0;  // ||psi||_{A'} |A'|^{1/2}
  double large_ratio = 0.0;  // ||psi||_{A''} |A_n| / |A'|^{1/2}
  double outside = 0.0;      // sup |psi| off A_n
};

inline std::vector<PsiBound> psi_bounds_report(const OrthoSystem& sys) {
  std::vector<PsiBound> out;
  const auto& lay = sys.layout();
  const auto& F = sys.filtration();
  for (std::size_t m = 0; m < sys.size(); ++m) {
    const auto& p = sys.psi(m);
    if (p.level == 0) continue;
    const auto& rec = F.split_record(p.level);
    auto v = sys.full(m);
    double ms = F.atom(rec.small).measure, ma = F.atom(rec.atom).measure;
    PsiBound b;
    b.m = m;
    b.n = p.level;
    b.j = p.j;
    b.small_ratio = lay.lp_norm_on(v, INFINITY, rec.small) * std::sqrt(ms);
    b.large_ratio = lay.lp_norm_on(v, INFINITY, rec.large) * ma / std::sqrt(ms);
    auto [lb, le] = lay.leaves_of(rec.atom);
    for (std::size_t l = 0; l < lay.num_leaves(); ++l)
      if (l < lb || l >= le) b.outside = std::max(b.outside, lay.leaf_sup(v, l));
    out.push_back(b);
  }
  return out;
}

struct RatioReport {
  double max_ratio = 0.0;
  int n = 0;
  int j = 0;
  std::size_t leaf = 0;
  int unguarded = 0;  // places where the denominator vanished but the numerator did not
};

// max over leaves and (n, j) of sup|P_{n,j} g| / (E_{n-1}|g| + E_n|g|), with E_{-1} = E_0
inline RatioReport projector_pointwise_ratio(const OrthoSystem& sys, const Eigen::VectorXd& g) {
  const auto& lay = sys.layout();
  const auto& F = sys.filtration();
  std::size_t nl = lay.num_leaves();
  RatioReport rep;
  double gsup = 0.0;
  for (std::size_t l = 0; l < nl; ++l) gsup = std::max(gsup, lay.leaf_sup(g, l));
  // rounding residue of an exact zero
  double floor = 1e-12 * gsup + 1e-300;
  auto consider = [&](double num, double den, int n, int j, std::size_t l) {
    double r;
    if (den < 1e-300) {
      if (num < floor) return;
      ++rep.unguarded;
      r = std::numeric_limits<double>::infinity();
    } else {
      r = num / den;
    }
    if (r > rep.max_ratio) rep = {r, n, j, l, rep.unguarded};
  };

  auto absint = lay.leaf_abs_integrals(g);
  std::vector<double> E(nl);
  {
    double tot = 0.0;
    for (double v : absint) tot += v;
    for (auto& e : E) e = tot;
  }
  Eigen::VectorXd P = sys.level_projection(g, 0);
  std::vector<double> sup(nl);
  for (std::size_t l = 0; l < nl; ++l) {
    sup[l] = lay.leaf_sup(P, l);
    consider(sup[l], 2.0 * E[l], 0, sys.ell(0), l);
  }
  for (int n = 1; n <= F.depth(); ++n) {
    const auto& rec = F.split_record(n);
    auto [ab, ae] = lay.leaves_of(rec.atom);
    std::vector<double> Eprev(E.begin() + static_cast<std::ptrdiff_t>(ab), E.begin() + static_cast<std::ptrdiff_t>(ae));
    for (AtomId child : {rec.small, rec.large}) {
      auto [b, e] = lay.leaves_of(child);
      double s = 0.0;
      for (auto l = b; l < e; ++l) s += absint[l];
      s /= F.atom(child).measure;
      for (auto l = b; l < e; ++l) E[l] = s;
    }
    // off A_n the projector is P_{n-1} for every j and E_n = E_{n-1}
    for (std::size_t l = 0; l < nl; ++l)
      if (l < ab || l >= ae) consider(sup[l], 2.0 * E[l], n, 0, l);
    auto [b, e] = sys.level_range(n);
    for (int j = 0; j <= static_cast<int>(e - b); ++j) {
      if (j > 0) sys.add(P, b + static_cast<std::size_t>(j) - 1, sys.dot(b + static_cast<std::size_t>(j) - 1, g));
      for (auto l = ab; l < ae; ++l) {
        sup[l] = lay.leaf_sup(P, l);
        consider(sup[l], Eprev[l - ab] + E[l], n, j, l);
      }
    }
  }
  return rep;
}

// test functions in S_N for the pointwise bound: gaussian, spiky, single-leaf, single psi
inline Eigen::VectorXd random_test_function(const OrthoSystem& sys, Rng& rng, int kind) {
  const auto& lay = sys.layout();
  auto d = static_cast<Eigen::Index>(sys.dim());
  Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
  switch (kind % 4) {
    case 0:
      for (Eigen::Index i = 0; i < d; ++i) c(i) = rng.normal();
      break;
    case 1:
      for (std::size_t l = 0; l < lay.num_leaves(); ++l) {
        double s = std::exp(rng.uniform(-6.0, 6.0));
        const auto& L = lay.leaf(l);
        for (int i = 0; i < L.dim; ++i) c(static_cast<Eigen::Index>(L.offset) + i) = s * rng.normal();
      }
      break;
    case 2: {
      const auto& L = lay.leaf(rng.index(lay.num_leaves()));
      for (int i = 0; i < L.dim; ++i) c(static_cast<Eigen::Index>(L.offset) + i) = rng.normal();
      if (c.norm() == 0.0) c(0) = 1.0;
      break;
    }
    default: c = sys.full(rng.index(sys.size())); break;
  }
  return c;
}

// max ratio over `trials` test functions; stored on the system as its empirical c3
inline RatioReport measure_c3(OrthoSystem& sys, int trials, std::uint64_t seed) {
  RatioReport best;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    auto g = random_test_function(sys, rng, t);
    auto r = projector_pointwise_ratio(sys, g);
    if (r.max_ratio > best.max_ratio) best = r;
  }
  sys.set_measured_c3(best.max_ratio);
  return best;
}

// sup |P_n(1_B f) - 1_B P_n f| with B the union of the given level-n atoms
inline double commutation_check(const OrthoSystem& sys, const Eigen::VectorXd& f, const std::vector<AtomId>& B,
                                int n) {
  const auto& lay = sys.layout();
  const auto& F = sys.filtration();
  auto level = F.atoms_at(n);
  std::vector<char> mask(lay.num_leaves(), 0);
  for (auto id : B) {
    require(std::find(level.begin(), level.end(), id) != level.end(),
            "atom " + std::to_string(id) + " is not an atom of level " + std::to_string(n));
    auto [b, e] = lay.leaves_of(id);
    for (auto l = b; l < e; ++l) mask[l] = 1;
  }
  Eigen::VectorXd lhs = sys.level_projection(lay.masked(f, mask), n);
  Eigen::VectorXd rhs = lay.masked(sys.level_projection(f, n), mask);
  Eigen::VectorXd diff = lhs - rhs;
  double worst = 0.0;
  for (std::size_t l = 0; l < lay.num_leaves(); ++l) worst = std::max(worst, lay.leaf_sup(diff, l));
  return worst;
}

// ||R_m f - R_{M-1} f||_p for m = 0..M-1
inline std::vector<double> convergence_diagnostic(const OrthoSystem& sys, const Eigen::VectorXd& f, double p) {
  require(p >= 1.0 && std::isfinite(p), "p must lie in [1, inf)");
  auto a = sys.coefficients(f);
  Eigen::VectorXd tail = sys.synthesize(a);
  std::vector<double> out;
  for (std::size_t m = 0; m < sys.size(); ++m) {
    sys.add(tail, m, -a(static_cast<Eigen::Index>(m)));
    out.push_back(sys.layout().lp_norm(tail, p));
  }
  return out;
}

struct ThreeSetExample {
  double eps = 0.0;
  double alpha1 = 0.0, alpha2 = 0.0, alpha3 = 0.0;
  double constant = 0.0;
};

// Three-set split of [0,1]: C1 = [0,w), C2 = [w,2w), C3 = [2w,1] with w = (1-eps)/2. The mean-zero,
// unit-norm step function h = a1 1_C1 - a2 1_C2 + a3 1_C3 uses a3 = (2 eps)^{-1/2}; g = sign(h) on
// C1 u C2 and 0 on C3. Returns sup over C3 of |<g,h> h| / (E_{n-1}|g| + E_n|g|).
inline ThreeSetExample counterexample_three(double eps) {
  require(eps > 0.0 && eps < 0.5, "eps must lie in (0, 1/2)");
  ThreeSetExample ex;
  ex.eps = eps;
  double w = 0.5 * (1.0 - eps);
  ex.alpha3 = 1.0 / std::sqrt(2.0 * eps);
  double D = ex.alpha3 * eps / w;
  ex.alpha1 = 0.5 * (-D + std::sqrt(1.0 / w - D * D));
  ex.alpha2 = ex.alpha1 + D;
  auto space = ProbabilitySpace::parse("interval:0,1");
  double e1 = w, e2 = 2.0 * w;
  auto h = Function::steps({0.0, e1, e2, 1.0}, {ex.alpha1, -ex.alpha2, ex.alpha3});
  auto sg = [](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); };
  auto g = Function::steps({0.0, e1, e2, 1.0}, {sg(ex.alpha1), sg(-ex.alpha2), 0.0});
  Support c3 = Support::intervals({{e2, 1.0}});
  double gh = inner(space, g, h, space.omega());
  double mean_g = lp_norm(space, g, 1.0, space.omega());
  double mean_g_c3 = lp_norm(space, g, 1.0, c3) / space.measure(c3);
  ex.constant = std::abs(gh) * sup_norm(space, h, c3) / (mean_g + mean_g_c3);
  return ex;
}

// The same quantity for a binary split of [0,1] into [1-eps,1] and its complement, with h the
// orthonormal difference of the split: stays bounded.
inline double counterexample_binary(double eps) {
  require(eps > 0.0 && eps < 0.5, "eps must lie in (0, 1/2)");
  auto F = std::make_shared<BinaryFiltration>(ProbabilitySpace::parse("interval:0,1"));
  F->split(0, Cut::at(1.0 - eps));
  auto sys = OrthoSystem::build(F, LocalSpace::indicator());
  const auto& lay = sys.layout();
  auto h = sys.full(1);
  auto small = F->split_record(1).small;
  auto large = F->split_record(1).large;
  // g = sign(h) on A'', 0 on A'
  Eigen::VectorXd g = Eigen::VectorXd::Zero(h.size());
  auto [b, e] = lay.coords_of(large);
  for (auto i = b; i < e; ++i) g(static_cast<Eigen::Index>(i)) = h(static_cast<Eigen::Index>(i)) > 0 ? 1.0 : -1.0;
  double gh = g.dot(h);
  double mean0 = lay.lp_norm(g, 1.0);
  double mean1 = lay.lp_norm_on(g, 1.0, small) / F->atom(small).measure;
  return std::abs(gh) * lay.lp_norm_on(h, INFINITY, small) / (mean0 + mean1);
}

}  // namespace locos
