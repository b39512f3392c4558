#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "locos/support.hpp"

namespace locos {

// A real function of one coordinate with optional structure hints for quadrature.
struct Function {
  std::function<double(double)> eval;
  int degree = -1;                  // polynomial degree between breakpoints, -1 if not polynomial
  std::vector<double> breakpoints;  // where the function may jump or kink

  double operator()(double x) const { return eval(x); }

  static Function constant(double c) {
    return {[c](double) { return c; }, 0, {}};
  }

  static Function identity() {
    return {[](double x) { return x; }, 1, {}};
  }

  // sum_i coeffs[i] x^i
  static Function polynomial(std::vector<double> coeffs) {
    int deg = static_cast<int>(coeffs.size()) - 1;
    return {[c = std::move(coeffs)](double x) {
              double s = 0.0;
              for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * x + *it;
              return s;
            },
            std::max(deg, 0),
            {}};
  }

  static Function indicator(const ProbabilitySpace& space, const Support& s) {
    std::vector<double> br;
    if (!s.is_discrete())
      for (const auto& iv : s.segments()) {
        br.push_back(iv.lo);
        br.push_back(iv.hi);
      }
    return {[space, s](double x) { return space.contains_point(s, x) ? 1.0 : 0.0; }, 0, std::move(br)};
  }

  // piecewise constant: values[i] on [edges[i], edges[i+1])
  static Function steps(std::vector<double> edges, std::vector<double> values) {
    std::vector<double> br(edges.begin(), edges.end());
    return {[e = std::move(edges), v = std::move(values)](double x) {
              for (std::size_t i = 0; i + 1 < e.size(); ++i)
                if (x < e[i + 1] || i + 2 == e.size()) return x >= e[i] ? v[i] : 0.0;
              return 0.0;
            },
            0,
            std::move(br)};
  }
};

inline Function operator*(const Function& f, const Function& g) {
  auto br = f.breakpoints;
  br.insert(br.end(), g.breakpoints.begin(), g.breakpoints.end());
  int deg = (f.degree < 0 || g.degree < 0) ? -1 : f.degree + g.degree;
  return {[a = f.eval, b = g.eval](double x) { return a(x) * b(x); }, deg, std::move(br)};
}

inline Function operator-(const Function& f, const Function& g) {
  auto br = f.breakpoints;
  br.insert(br.end(), g.breakpoints.begin(), g.breakpoints.end());
  int deg = (f.degree < 0 || g.degree < 0) ? -1 : std::max(f.degree, g.degree);
  return {[a = f.eval, b = g.eval](double x) { return a(x) - b(x); }, deg, std::move(br)};
}

}  // namespace locos
