#pragma once

// Reference computations for the test suites. Nothing here goes through the ψ construction of the
// library: discrete spaces are handled as weighted vectors over points, intervals by closed-form
// monomial integrals.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "locos/locos.hpp"

namespace oracle {

// ---- discrete spaces: functions are value vectors over the points ----

struct PointSpace {
  std::vector<double> x;     // coordinates
  std::vector<double> mass;  // sums to one
  std::size_t size() const { return x.size(); }
};

inline PointSpace points_of(const locos::ProbabilitySpace& sp) { return {sp.coords(), sp.masses()}; }

inline double inner(const PointSpace& P, const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) s += P.mass[i] * f(static_cast<Eigen::Index>(i)) * g(static_cast<Eigen::Index>(i));
  return s;
}

// weighted least squares: orthogonal projection of f onto the column span of B in L^2(mass)
inline Eigen::VectorXd dense_projection(const PointSpace& P, const Eigen::MatrixXd& B, const Eigen::VectorXd& f) {
  auto n = static_cast<Eigen::Index>(P.size());
  if (B.cols() == 0) return Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = std::sqrt(P.mass[static_cast<std::size_t>(i)]);
  Eigen::MatrixXd A = w.asDiagonal() * B;
  Eigen::VectorXd y = w.asDiagonal() * f;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  cod.setThreshold(1e-11);
  Eigen::VectorXd coef = cod.solve(y);
  return B * coef;
}

// indicator of an atom as a point vector
inline Eigen::VectorXd indicator(const PointSpace& P, const locos::Support& s) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(P.size()));
  for (auto i : s.point_indices()) v(static_cast<Eigen::Index>(i)) = 1.0;
  return v;
}

// spanning columns of S_n: every raw generator times the indicator of every level-n atom
inline Eigen::MatrixXd level_span(const PointSpace& P, const locos::BinaryFiltration& F, int n,
                                  const std::vector<std::function<double(double)>>& gens) {
  auto atoms = F.atoms_at(n);
  Eigen::MatrixXd B(static_cast<Eigen::Index>(P.size()), static_cast<Eigen::Index>(atoms.size() * gens.size()));
  Eigen::Index col = 0;
  for (auto id : atoms) {
    auto ind = indicator(P, F.atom(id).support);
    for (const auto& g : gens) {
      for (std::size_t i = 0; i < P.size(); ++i)
        B(static_cast<Eigen::Index>(i), col) = ind(static_cast<Eigen::Index>(i)) * g(P.x[i]);
      ++col;
    }
  }
  return B;
}

// classical Gram-Schmidt, repeated twice, in L^2(mass); dependent inputs are dropped
inline std::vector<Eigen::VectorXd> gram_schmidt(const PointSpace& P, const std::vector<Eigen::VectorXd>& in,
                                                 double drop = 1e-9) {
  std::vector<Eigen::VectorXd> q;
  for (const auto& v0 : in) {
    Eigen::VectorXd v = v0;
    double ref = std::sqrt(inner(P, v, v));
    if (ref == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      Eigen::VectorXd corr = Eigen::VectorXd::Zero(v.size());
      for (const auto& e : q) corr += inner(P, e, v) * e;
      v -= corr;
    }
    double nv = std::sqrt(inner(P, v, v));
    if (nv <= drop * ref) continue;
    q.push_back(v / nv);
  }
  return q;
}

// values of a coefficient vector of the system at every point
inline Eigen::VectorXd values(const locos::Layout& lay, const PointSpace& P, const Eigen::VectorXd& c) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(P.size()));
  for (std::size_t i = 0; i < P.size(); ++i) v(static_cast<Eigen::Index>(i)) = lay.value(c, P.x[i]);
  return v;
}

// a point vector as a Function, for Layout::project
inline locos::Function as_function(const PointSpace& P, const Eigen::VectorXd& f) {
  return {[P, f](double x) {
            for (std::size_t i = 0; i < P.size(); ++i)
              if (P.x[i] == x) return f(static_cast<Eigen::Index>(i));
            return 0.0;
          },
          -1,
          {}};
}

// ---- intervals: piecewise polynomials in closed form ----

// integral of x^k over [a, b]
inline double monomial_integral(int k, double a, double b) {
  return (std::pow(b, k + 1) - std::pow(a, k + 1)) / (k + 1);
}

// function given by polynomial pieces: poly[i] on [edges[i], edges[i+1])
struct PiecewisePoly {
  std::vector<double> edges;
  std::vector<std::vector<double>> poly;  // coefficients of x^k

  double operator()(double x) const {
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
      if (x >= edges[i] && (x < edges[i + 1] || i + 2 == edges.size())) {
        double s = 0.0;
        for (std::size_t k = poly[i].size(); k-- > 0;) s = s * x + poly[i][k];
        return s;
      }
    return 0.0;
  }
};

// <f, g> in L^2 of the normalized Lebesgue measure on [edges.front(), edges.back()]; same edges
inline double inner(const PiecewisePoly& f, const PiecewisePoly& g) {
  double total = f.edges.back() - f.edges.front(), s = 0.0;
  for (std::size_t i = 0; i + 1 < f.edges.size(); ++i)
    for (std::size_t a = 0; a < f.poly[i].size(); ++a)
      for (std::size_t b = 0; b < g.poly[i].size(); ++b)
        s += f.poly[i][a] * g.poly[i][b] * monomial_integral(static_cast<int>(a + b), f.edges[i], f.edges[i + 1]);
  return s / total;
}

inline PiecewisePoly axpy(double s, const PiecewisePoly& x, const PiecewisePoly& y) {
  PiecewisePoly r = y;
  for (std::size_t i = 0; i < r.poly.size(); ++i) {
    r.poly[i].resize(std::max(r.poly[i].size(), x.poly[i].size()), 0.0);
    for (std::size_t k = 0; k < x.poly[i].size(); ++k) r.poly[i][k] += s * x.poly[i][k];
  }
  return r;
}

inline std::vector<PiecewisePoly> gram_schmidt(const std::vector<PiecewisePoly>& in) {
  std::vector<PiecewisePoly> q;
  for (auto v : in) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& e : q) v = axpy(-inner(e, v), e, v);
    double nv = std::sqrt(inner(v, v));
    if (nv < 1e-9) continue;
    for (auto& p : v.poly)
      for (auto& c : p) c /= nv;
    q.push_back(v);
  }
  return q;
}

// Haar function of a constant-space split of an atom of measure |A| into |A'| (value > 0) and |A''|
struct HaarValues {
  double on_small;
  double on_large;
};
inline HaarValues haar(double small, double large) {
  double A = small + large;
  return {std::sqrt(large / (small * A)), -std::sqrt(small / (large * A))};
}

// ---- hand-rolled generators ----

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}
  double uniform(double a = 0.0, double b = 1.0) { return std::uniform_real_distribution<double>(a, b)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
  std::uint64_t bits() { return eng_(); }

  Eigen::VectorXd vector(std::size_t n) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (auto& x : v) x = normal();
    return v;
  }

  std::vector<int> signs(std::size_t n) {
    std::vector<int> s(n);
    for (auto& e : s) e = (eng_() & 1) ? 1 : -1;
    return s;
  }

  // discrete space of n points with masses in [0.2, 5] and spread-out integer coordinates
  locos::ProbabilitySpace point_space(std::size_t n) {
    std::vector<double> m(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = uniform(0.2, 5.0);
      x[i] = static_cast<double>(i);
    }
    return locos::ProbabilitySpace::from_points(m, x);
  }

  // random leaf, random interior cut; leaves thinner than `min_len` are left alone
  std::shared_ptr<locos::BinaryFiltration> interval_filtration(int depth, double min_len = 1e-3) {
    auto F = std::make_shared<locos::BinaryFiltration>(locos::ProbabilitySpace::parse("interval:0,1"));
    for (int n = 0; n < depth; ++n) {
      auto leaves = F->leaves();
      for (int attempt = 0; attempt < 64; ++attempt) {
        auto id = leaves[static_cast<std::size_t>(integer(0, static_cast<int>(leaves.size()) - 1))];
        auto [lo, hi] = F->space().hull(F->atom(id).support);
        if (hi - lo < 2 * min_len) continue;
        F->split(id, locos::Cut::at(uniform(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo))));
        break;
      }
    }
    return F;
  }

  // random binary splits of a discrete space into nonempty point subsets
  std::shared_ptr<locos::BinaryFiltration> point_filtration(const locos::ProbabilitySpace& sp, int depth) {
    auto F = std::make_shared<locos::BinaryFiltration>(sp);
    for (int n = 0; n < depth; ++n) {
      std::vector<locos::AtomId> big;
      for (auto id : F->leaves())
        if (F->atom(id).support.point_indices().size() >= 2) big.push_back(id);
      if (big.empty()) break;
      auto id = big[static_cast<std::size_t>(integer(0, static_cast<int>(big.size()) - 1))];
      auto pts = F->atom(id).support.point_indices();
      std::shuffle(pts.begin(), pts.end(), eng_);
      auto k = static_cast<std::size_t>(integer(1, static_cast<int>(pts.size()) - 1));
      std::vector<std::size_t> part(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(k));
      std::sort(part.begin(), part.end());
      F->split(id, locos::Cut::subset(locos::Support::points(part)));
    }
    return F;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace oracle
