#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "locos/error.hpp"

namespace locos {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;  // sum to 2
};

namespace detail {

inline GaussRule make_gauss_legendre(int n) {
  GaussRule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(n - 1 - i);
    r.nodes[a] = -x;
    r.nodes[b] = x;
    r.weights[a] = w;
    r.weights[b] = w;
  }
  if (n % 2 == 1) r.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return r;
}

}  // namespace detail

// cached n-point Gauss-Legendre rule on [-1,1], exact for degree 2n-1
inline const GaussRule& gauss_legendre(int n) {
  require(n >= 1 && n <= 512, "Gauss-Legendre order out of range");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussRule>(detail::make_gauss_legendre(n));
  return *slot;
}

// smallest rule integrating polynomials of this degree exactly
inline int gauss_points_for_degree(int degree) { return std::max(1, (degree + 2) / 2); }

template <class F>
double gauss_integrate(F&& f, double a, double b, int npts) {
  const auto& r = gauss_legendre(npts);
  double c = 0.5 * (a + b), h = 0.5 * (b - a), s = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(c + h * r.nodes[i]);
  return s * h;
}

// composite rule: `panels` equal panels, `npts` nodes each
template <class F>
double composite_gauss(F&& f, double a, double b, int panels, int npts) {
  double s = 0.0, w = (b - a) / panels;
  for (int k = 0; k < panels; ++k) s += gauss_integrate(f, a + k * w, a + (k + 1) * w, npts);
  return s;
}

// integrand with an algebraic kink at a or b (|f|^p next to a root of f): panels shrink
// geometrically toward each marked end
template <class F>
double graded_gauss(F&& f, double a, double b, bool at_a, bool at_b, int npts = 12, int levels = 10,
                    double q = 0.15) {
  if (at_a && at_b) {
    double m = 0.5 * (a + b);
    return graded_gauss(f, a, m, true, false, npts, levels, q) + graded_gauss(f, m, b, false, true, npts, levels, q);
  }
  if (!at_a && !at_b) return gauss_integrate(f, a, b, 20);
  double s = 0.0, len = b - a;
  // cut points measured from the singular end
  double prev = len;
  for (int k = 1; k <= levels; ++k) {
    double d = len * std::pow(q, k);
    s += at_a ? gauss_integrate(f, a + d, a + prev, npts) : gauss_integrate(f, b - prev, b - d, npts);
    prev = d;
  }
  s += at_a ? gauss_integrate(f, a, a + prev, npts) : gauss_integrate(f, b - prev, b, npts);
  return s;
}

struct AdaptiveResult {
  double value = 0.0;
  double error_estimate = 0.0;
  bool converged = true;
};

namespace detail {

template <class F>
double simpson_step(F& f, double a, double fa, double b, double fb, double m, double fm, double whole, double tol,
                    int depth, AdaptiveResult& res) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (!std::isfinite(delta)) throw Error("non-finite integrand value");
  if (std::abs(delta) <= 15.0 * tol) {
    res.error_estimate += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  if (depth <= 0) {
    res.converged = false;
    res.error_estimate += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1, res) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1, res);
}

}  // namespace detail

template <class F>
AdaptiveResult adaptive_simpson(F&& f, double a, double b, double tol = 1e-12, int max_depth = 40) {
  AdaptiveResult res;
  if (!(b > a)) return res;
  double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
  if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm)) throw Error("non-finite integrand value");
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  res.value = detail::simpson_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth, res);
  return res;
}

// root of f in [a,b] given a sign change, Illinois variant of regula falsi
template <class F>
double bracketed_root(F&& f, double a, double b, double fa, double fb, double tol = 1e-15) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  int side = 0;
  double c = a;
  double scale = std::max(1.0, std::max(std::abs(a), std::abs(b)));
  for (int it = 0; it < 200; ++it) {
    c = (a * fb - b * fa) / (fb - fa);
    if (!(c > a && c < b)) c = 0.5 * (a + b);
    double fc = f(c);
    if (fc == 0.0 || (b - a) < tol * scale) return c;
    if ((fc > 0) == (fb > 0)) {
      b = c;
      fb = fc;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      a = c;
      fa = fc;
      if (side == 1) fb *= 0.5;
      side = 1;
    }
    if (b - a < tol * scale) break;
  }
  return 0.5 * (a + b);
}

// points where f - t changes sign on a grid over [a,b], refined
template <class F>
std::vector<double> crossings(F&& f, double t, double a, double b, int grid) {
  std::vector<double> out;
  double prev_x = a, prev = f(a) - t;
  for (int i = 1; i <= grid; ++i) {
    double x = (i == grid) ? b : a + (b - a) * i / grid;
    double v = f(x) - t;
    if ((prev < 0 && v > 0) || (prev > 0 && v < 0)) {
      auto g = [&](double y) { return f(y) - t; };
      out.push_back(bracketed_root(g, prev_x, x, prev, v));
    }
    prev_x = x;
    prev = v;
  }
  return out;
}

// max of f on [a,b]: sample grid then golden-section polish around the best samples
template <class F>
double maximize_on(F&& f, double a, double b, const std::vector<double>& grid_pts) {
  double best = -INFINITY;
  std::size_t bi = 0;
  std::vector<double> vals(grid_pts.size());
  for (std::size_t i = 0; i < grid_pts.size(); ++i) {
    vals[i] = f(grid_pts[i]);
    if (!std::isfinite(vals[i])) throw Error("non-finite function value at " + std::to_string(grid_pts[i]));
    if (vals[i] > best) {
      best = vals[i];
      bi = i;
    }
  }
  // polish every interior local maximum of the samples
  for (std::size_t i = 0; i < grid_pts.size(); ++i) {
    bool lm = (i == 0 || vals[i] >= vals[i - 1]) && (i + 1 == grid_pts.size() || vals[i] >= vals[i + 1]);
    if (!lm) continue;
    double lo = i > 0 ? grid_pts[i - 1] : a, hi = i + 1 < grid_pts.size() ? grid_pts[i + 1] : b;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 80 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = f(x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = f(x1);
      }
    }
    best = std::max({best, f1, f2});
  }
  (void)bi;
  return best;
}

// Chebyshev extreme points mapped to [a,b], endpoints included
inline std::vector<double> chebyshev_grid(double a, double b, int n) {
  std::vector<double> g(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) g[static_cast<std::size_t>(i)] = 0.5 * (a + b) - 0.5 * (b - a) * std::cos(M_PI * i / n);
  g.front() = a;
  g.back() = b;
  return g;
}

inline std::vector<double> uniform_grid(double a, double b, int n) {
  std::vector<double> g(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) g[static_cast<std::size_t>(i)] = a + (b - a) * i / n;
  g.back() = b;
  return g;
}

// Legendre values P_0..P_{k-1} at t
inline void legendre_values(double t, int k, double* out) {
  if (k <= 0) return;
  out[0] = 1.0;
  if (k == 1) return;
  out[1] = t;
  for (int n = 1; n + 1 < k; ++n) out[n + 1] = ((2.0 * n + 1.0) * t * out[n] - n * out[n - 1]) / (n + 1.0);
}

inline double chebyshev_t(int n, double t) {
  if (std::abs(t) <= 1.0) return std::cos(n * std::acos(t));
  double s = t > 0 ? 1.0 : ((n % 2) ? -1.0 : 1.0);
  return s * std::cosh(n * std::acosh(std::abs(t)));
}

// least-squares slope of y against x
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "slope fit needs two or more points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace locos
