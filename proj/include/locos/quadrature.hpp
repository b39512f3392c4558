#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "locos/error.hpp"
#include "locos/function.hpp"
#include "locos/numerics.hpp"
#include "locos/support.hpp"

namespace locos {

struct QuadOptions {
  double tol = 1e-12;
  int max_depth = 40;
  int sup_grid = 1024;       // uniform grid for non-polynomial sup norms
  int level_grid = 4096;     // counting grid for non-polynomial level sets
};

// Nodes and probability weights over a support.
struct NodeSet {
  std::vector<double> x;
  std::vector<double> w;
  double total() const {
    double s = 0.0;
    for (double v : w) s += v;
    return s;
  }
};

namespace detail {

// segment pieces of a continuous support, split at interior breakpoints
inline std::vector<Interval> pieces(const Support& s, const std::vector<double>& br) {
  std::vector<Interval> out;
  std::vector<double> cuts = br;
  std::sort(cuts.begin(), cuts.end());
  for (const auto& iv : s.segments()) {
    double lo = iv.lo;
    for (double c : cuts)
      if (c > lo && c < iv.hi) {
        out.push_back({lo, c});
        lo = c;
      }
    out.push_back({lo, iv.hi});
  }
  return out;
}

}  // namespace detail

// Gauss-Legendre nodes exact for polynomials of `degree` (composite 8x16 panels when degree < 0)
inline NodeSet make_nodes(const ProbabilitySpace& space, const Support& s, int degree,
                          const std::vector<double>& breaks = {}) {
  NodeSet ns;
  if (space.is_discrete()) {
    for (auto i : s.point_indices()) {
      ns.x.push_back(space.coord(i));
      ns.w.push_back(space.mass(i));
    }
    return ns;
  }
  double dens = space.density();
  for (const auto& iv : detail::pieces(s, breaks)) {
    int panels = degree >= 0 ? 1 : 8;
    int npts = degree >= 0 ? gauss_points_for_degree(degree) : 16;
    const auto& r = gauss_legendre(npts);
    double pw = iv.length() / panels;
    for (int k = 0; k < panels; ++k) {
      double c = iv.lo + (k + 0.5) * pw, h = 0.5 * pw;
      for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        ns.x.push_back(c + h * r.nodes[i]);
        ns.w.push_back(r.weights[i] * h * dens);
      }
    }
  }
  return ns;
}

// integral over s of f with respect to the probability measure
template <class F>
double integrate(const ProbabilitySpace& space, const Support& s, F&& f, int degree,
                 const std::vector<double>& breaks = {}, const QuadOptions& opt = {}) {
  double total = 0.0;
  if (space.is_discrete()) {
    for (auto i : s.point_indices()) total += space.mass(i) * f(space.coord(i));
    if (!std::isfinite(total)) throw Error("non-finite integrand value");
    return total;
  }
  double dens = space.density();
  for (const auto& iv : detail::pieces(s, breaks)) {
    if (degree >= 0) {
      total += gauss_integrate(f, iv.lo, iv.hi, gauss_points_for_degree(degree)) * dens;
    } else {
      double scale = std::max(1.0, std::abs(gauss_integrate(f, iv.lo, iv.hi, 16)));
      auto r = adaptive_simpson(f, iv.lo, iv.hi, opt.tol * scale, opt.max_depth);
      if (!r.converged)
        throw Error("adaptive quadrature did not converge on [" + format_double(iv.lo) + "," +
                    format_double(iv.hi) + "], achieved ~" + format_double(r.error_estimate));
      total += r.value * dens;
    }
  }
  if (!std::isfinite(total)) throw Error("non-finite integrand value");
  return total;
}

inline double integrate(const ProbabilitySpace& space, const Support& s, const Function& f,
                        const QuadOptions& opt = {}) {
  return integrate(space, s, f.eval, f.degree, f.breakpoints, opt);
}

inline double inner(const ProbabilitySpace& space, const Function& f, const Function& g, const Support& s,
                    const QuadOptions& opt = {}) {
  return integrate(space, s, f * g, opt);
}

// sup of |f| over s; polynomial pieces use a Chebyshev grid of 8(degree+1) >= 32 points, then polish
template <class F>
double sup_abs(const ProbabilitySpace& space, const Support& s, F&& f, int degree,
               const std::vector<double>& breaks = {}, const QuadOptions& opt = {}) {
  double best = 0.0;
  if (space.is_discrete()) {
    for (auto i : s.point_indices()) {
      double v = std::abs(f(space.coord(i)));
      if (!std::isfinite(v)) throw Error("non-finite function value");
      best = std::max(best, v);
    }
    return best;
  }
  auto af = [&](double x) { return std::abs(f(x)); };
  for (const auto& iv : detail::pieces(s, breaks)) {
    // half-open pieces: sample just inside the right end
    double hi = std::nextafter(iv.hi, iv.lo);
    if (degree == 0) {
      best = std::max(best, af(0.5 * (iv.lo + iv.hi)));
      continue;
    }
    auto grid = degree > 0 ? chebyshev_grid(iv.lo, hi, std::max(8 * (degree + 1), 32))
                           : uniform_grid(iv.lo, hi, opt.sup_grid);
    best = std::max(best, maximize_on(af, iv.lo, hi, grid));
  }
  return best;
}

inline double sup_norm(const ProbabilitySpace& space, const Function& f, const Support& s,
                       const QuadOptions& opt = {}) {
  return sup_abs(space, s, f.eval, f.degree, f.breakpoints, opt);
}

// integral over s of |f|^p; sign changes of polynomial pieces are located and split off
template <class F>
double abs_power_integral(const ProbabilitySpace& space, const Support& s, F&& f, double p, int degree,
                          const std::vector<double>& breaks = {}, const QuadOptions& opt = {}) {
  auto g = [&](double x) { return std::pow(std::abs(f(x)), p); };
  if (space.is_discrete()) return integrate(space, s, g, 0);
  bool even = p == std::floor(p) && static_cast<long>(p) % 2 == 0;
  double dens = space.density(), total = 0.0;
  for (const auto& iv : detail::pieces(s, breaks)) {
    if (degree >= 0 && even) {
      total += gauss_integrate(g, iv.lo, iv.hi, gauss_points_for_degree(static_cast<int>(p) * degree)) * dens;
      continue;
    }
    if (degree == 0) {
      total += g(0.5 * (iv.lo + iv.hi)) * iv.length() * dens;
      continue;
    }
    if (degree > 0) {
      auto roots = crossings(f, 0.0, iv.lo, iv.hi, std::max(8 * (degree + 1), 16));
      double lo = iv.lo;
      bool lo_root = false;
      for (std::size_t k = 0; k <= roots.size(); ++k) {
        double r = k < roots.size() ? roots[k] : iv.hi;
        bool r_root = k < roots.size();
        if (r > lo) total += graded_gauss(g, lo, r, lo_root, r_root) * dens;
        lo = r;
        lo_root = r_root;
      }
      continue;
    }
    double scale = std::max(1e-300, std::abs(composite_gauss(g, iv.lo, iv.hi, 8, 16)));
    auto r = adaptive_simpson(g, iv.lo, iv.hi, opt.tol * std::max(1.0, scale), opt.max_depth);
    if (!r.converged)
      throw Error("adaptive quadrature did not converge, achieved ~" + format_double(r.error_estimate));
    total += r.value * dens;
  }
  if (!std::isfinite(total)) throw Error("non-finite integrand value");
  return total;
}

inline double lp_norm(const ProbabilitySpace& space, const Function& f, double p, const Support& s,
                      const QuadOptions& opt = {}) {
  require(p >= 1.0, "p must lie in [1, inf]");
  if (std::isinf(p)) return sup_norm(space, f, s, opt);
  return std::pow(abs_power_integral(space, s, f.eval, p, f.degree, f.breakpoints, opt), 1.0 / p);
}

// probability of {x in s : |f(x)| >= t} (or > t when strict), with relative slack 1e-12 on t
template <class F>
double superlevel_measure(const ProbabilitySpace& space, const Support& s, F&& f, double t, int degree,
                          const std::vector<double>& breaks = {}, const QuadOptions& opt = {},
                          bool strict = false) {
  double thr = t * (strict ? 1.0 + 1e-12 : 1.0 - 1e-12);
  auto in = [&](double x) { return std::abs(f(x)) >= thr; };
  if (space.is_discrete()) {
    double m = 0.0;
    for (auto i : s.point_indices())
      if (in(space.coord(i))) m += space.mass(i);
    return m;
  }
  double dens = space.density(), total = 0.0;
  for (const auto& iv : detail::pieces(s, breaks)) {
    if (degree == 0) {
      if (in(0.5 * (iv.lo + iv.hi))) total += iv.length() * dens;
      continue;
    }
    if (degree > 0) {
      // crossings of f = thr and f = -thr
      int grid = std::max(16 * (degree + 1), 64);
      auto pts = crossings(f, thr, iv.lo, iv.hi, grid);
      auto neg = crossings(f, -thr, iv.lo, iv.hi, grid);
      pts.insert(pts.end(), neg.begin(), neg.end());
      std::sort(pts.begin(), pts.end());
      pts.insert(pts.begin(), iv.lo);
      pts.push_back(iv.hi);
      for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        if (in(0.5 * (pts[i] + pts[i + 1]))) total += (pts[i + 1] - pts[i]) * dens;
      continue;
    }
    int n = opt.level_grid;
    double h = iv.length() / n;
    int cnt = 0;
    for (int i = 0; i < n; ++i)
      if (in(iv.lo + (i + 0.5) * h)) ++cnt;
    total += cnt * h * dens;
  }
  return total;
}

}  // namespace locos
