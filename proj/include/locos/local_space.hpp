#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "locos/error.hpp"
#include "locos/numerics.hpp"
#include "locos/quadrature.hpp"
#include "locos/random.hpp"
#include "locos/support.hpp"

namespace locos {

enum class Family { polynomial, exponential, trigonometric, indicator, custom, tensor };

// affine chart of an atom: t = (x - center) / half
struct Frame {
  double center = 0.0;
  double half = 1.0;
};

// term of a custom space, evaluated in absolute coordinates
struct Term {
  enum class Kind { power, exp, cos, sin };
  Kind kind = Kind::power;
  double a = 0.0;

  double operator()(double x) const {
    switch (kind) {
      case Kind::power: return std::pow(x, a);
      case Kind::exp: return std::exp(a * x);
      case Kind::cos: return std::cos(a * x);
      case Kind::sin: return std::sin(a * x);
    }
    return 0.0;
  }
};

struct RemezCertificate {
  double c1 = 1.0;
  double c2 = 0.5;
};

// (2C)^{-n} and 1/2
inline RemezCertificate remez_constants_from_growth(double C, int n) {
  require(C > 0.0 && n >= 0, "growth constant must be positive and exponent non-negative");
  return {std::pow(2.0 * C, -n), 0.5};
}

// Finite-dimensional space S of functions on the line, evaluated atom by atom.
class LocalSpace {
 public:
  LocalSpace() = default;

  static LocalSpace polynomial(int n) {
    require(n >= 0, "polynomial degree must be non-negative");
    LocalSpace s;
    s.family_ = Family::polynomial;
    s.degree_ = n;
    s.cert_ = remez_constants_from_growth(4.0, n);
    s.desc_ = "polynomial:" + std::to_string(n);
    return s;
  }

  static LocalSpace indicator() {
    LocalSpace s;
    s.family_ = Family::indicator;
    s.degree_ = 0;
    s.cert_ = RemezCertificate{1.0, 0.5};
    s.desc_ = "indicator";
    return s;
  }

  static LocalSpace exponential(std::vector<double> rates) {
    require(!rates.empty(), "exponential space needs at least one rate");
    LocalSpace s;
    s.family_ = Family::exponential;
    s.desc_ = "exponential:";
    for (std::size_t i = 0; i < rates.size(); ++i) s.desc_ += (i ? "," : "") + format_double(rates[i]);
    s.rates_ = std::move(rates);
    return s;
  }

  static LocalSpace trigonometric(int n) {
    require(n >= 0, "trigonometric order must be non-negative");
    LocalSpace s;
    s.family_ = Family::trigonometric;
    s.degree_ = n;
    s.desc_ = "trigonometric:" + std::to_string(n);
    return s;
  }

  static LocalSpace custom(std::vector<Term> terms, std::string desc) {
    require(!terms.empty(), "custom space needs at least one term");
    LocalSpace s;
    s.family_ = Family::custom;
    s.terms_ = std::move(terms);
    s.desc_ = std::move(desc);
    return s;
  }

  static LocalSpace tensor(std::vector<LocalSpace> factors) {
    require(factors.size() >= 2, "tensor space needs two or more factors");
    LocalSpace s;
    s.family_ = Family::tensor;
    s.desc_ = "tensor:";
    for (std::size_t i = 0; i < factors.size(); ++i) s.desc_ += (i ? "," : "") + factors[i].descriptor();
    s.factors_ = std::move(factors);
    return s;
  }

  // polynomial:n | indicator | exponential:a,b | trigonometric:n | custom:x^k,exp(a),cos(a),sin(a) |
  // tensor:<space>,<space>
  static LocalSpace parse(std::string_view desc) {
    desc = text::trim(desc);
    require(!desc.empty(), "empty local space descriptor");
    auto colon = desc.find(':');
    auto kind = text::trim(desc.substr(0, colon));
    auto body = colon == std::string_view::npos ? std::string_view{} : text::trim(desc.substr(colon + 1));
    if (kind == "indicator" || kind == "constant") return indicator();
    if (kind == "polynomial") return polynomial(static_cast<int>(text::to_int(body)));
    if (kind == "trigonometric") return trigonometric(static_cast<int>(text::to_int(body)));
    if (kind == "exponential") {
      std::vector<double> r;
      for (auto f : text::split(body, ',')) r.push_back(text::to_double(f));
      return exponential(std::move(r));
    }
    if (kind == "custom") {
      std::vector<Term> terms;
      for (auto f : text::split(body, ',')) terms.push_back(parse_term(f));
      return custom(std::move(terms), std::string(desc));
    }
    if (kind == "tensor") {
      std::vector<std::string> parts;
      for (auto f : text::split(body, ',')) {
        bool starts = false;
        for (auto k : {"polynomial", "indicator", "constant", "exponential", "trigonometric", "custom"})
          if (f.substr(0, std::string_view(k).size()) == k) starts = true;
        if (starts || parts.empty()) parts.emplace_back(f);
        else parts.back() += "," + std::string(f);
      }
      std::vector<LocalSpace> fs;
      for (const auto& p : parts) fs.push_back(parse(p));
      return tensor(std::move(fs));
    }
    throw Error("unknown local space family '" + std::string(kind) + "'");
  }

  Family family() const { return family_; }
  const std::string& descriptor() const { return desc_; }
  const std::vector<LocalSpace>& factors() const { return factors_; }

  int dim() const {
    switch (family_) {
      case Family::polynomial: return degree_ + 1;
      case Family::indicator: return 1;
      case Family::exponential: return static_cast<int>(rates_.size());
      case Family::trigonometric: return 2 * degree_ + 1;
      case Family::custom: return static_cast<int>(terms_.size());
      case Family::tensor: {
        int k = 1;
        for (const auto& f : factors_) k *= f.dim();
        return k;
      }
    }
    return 0;
  }

  // polynomial degree of every element, or -1 when the family is not polynomial
  int poly_degree() const {
    if (family_ == Family::polynomial || family_ == Family::indicator) return degree_;
    if (family_ == Family::custom) {
      int d = 0;
      for (const auto& t : terms_) {
        if (t.kind != Term::Kind::power || t.a < 0 || t.a != std::floor(t.a)) return -1;
        d = std::max(d, static_cast<int>(t.a));
      }
      return d;
    }
    return -1;
  }

  const std::optional<RemezCertificate>& certificate() const { return cert_; }
  LocalSpace with_certificate(RemezCertificate c) const {
    require(c.c1 > 0 && c.c1 <= 1 && c.c2 > 0 && c.c2 <= 1, "Remez certificate must lie in (0,1]^2");
    auto s = *this;
    s.cert_ = c;
    return s;
  }

  Frame frame_for(const ProbabilitySpace& space, const Support& s) const {
    auto [lo, hi] = space.hull(s);
    Frame f;
    f.center = 0.5 * (lo + hi);
    f.half = hi > lo ? 0.5 * (hi - lo) : 1.0;
    return f;
  }

  void raw_values(double x, const Frame& fr, double* out) const {
    switch (family_) {
      case Family::polynomial: legendre_values((x - fr.center) / fr.half, degree_ + 1, out); return;
      case Family::indicator: out[0] = 1.0; return;
      case Family::exponential:
        for (std::size_t i = 0; i < rates_.size(); ++i) out[i] = std::exp(rates_[i] * (x - fr.center));
        return;
      case Family::trigonometric: {
        out[0] = 1.0;
        for (int j = 1; j <= degree_; ++j) {
          double a = 2.0 * M_PI * j * (x - fr.center);
          out[2 * j - 1] = std::cos(a);
          out[2 * j] = std::sin(a);
        }
        return;
      }
      case Family::custom:
        for (std::size_t i = 0; i < terms_.size(); ++i) out[i] = terms_[i](x);
        return;
      case Family::tensor: throw Error("tensor spaces are evaluated through the 2-D system");
    }
  }

  // sum_i raw[i] * b_i(x)
  double eval(const double* raw, double x, const Frame& fr) const {
    double v[64];
    int k = dim();
    require(k <= 64, "local space dimension above 64");
    raw_values(x, fr, v);
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += raw[i] * v[i];
    return s;
  }

  // exactness degree needed for products of two elements (-1: use composite rules)
  int product_degree() const {
    int d = poly_degree();
    return d < 0 ? -1 : 2 * d;
  }

 private:
  static Term parse_term(std::string_view t) {
    t = text::trim(t);
    if (t == "1") return {Term::Kind::power, 0.0};
    if (t == "x") return {Term::Kind::power, 1.0};
    if (t.substr(0, 2) == "x^") return {Term::Kind::power, text::to_double(t.substr(2))};
    for (auto [name, kind] : {std::pair{"exp", Term::Kind::exp}, std::pair{"cos", Term::Kind::cos},
                              std::pair{"sin", Term::Kind::sin}}) {
      std::string_view n(name);
      if (t.substr(0, n.size() + 1) == std::string(n) + "(" && t.back() == ')')
        return {kind, text::to_double(t.substr(n.size() + 1, t.size() - n.size() - 2))};
    }
    throw Error("unknown custom term '" + std::string(t) + "'");
  }

  Family family_ = Family::indicator;
  int degree_ = 0;
  std::vector<double> rates_;
  std::vector<Term> terms_;
  std::vector<LocalSpace> factors_;
  std::optional<RemezCertificate> cert_;
  std::string desc_ = "indicator";
};

// Orthonormal basis of S restricted to an atom: e_i = sum_j Q(j,i) b_j in the atom's frame.
struct AtomBasis {
  Frame frame;
  Eigen::MatrixXd Q;
  int dim() const { return static_cast<int>(Q.cols()); }
};

// rank is detected: singular values below 1e-10 of the largest count as dependent
inline AtomBasis atom_basis(const LocalSpace& S, const ProbabilitySpace& space, const Support& s) {
  AtomBasis ab;
  ab.frame = S.frame_for(space, s);
  auto nodes = make_nodes(space, s, S.product_degree());
  int k = S.dim();
  Eigen::MatrixXd M(static_cast<Eigen::Index>(nodes.x.size()), k);
  std::vector<double> v(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < nodes.x.size(); ++i) {
    S.raw_values(nodes.x[i], ab.frame, v.data());
    double sw = std::sqrt(nodes.w[i]);
    for (int j = 0; j < k; ++j) M(static_cast<Eigen::Index>(i), j) = sw * v[static_cast<std::size_t>(j)];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  int r = 0;
  if (sv.size() > 0 && sv(0) > 0.0)
    while (r < sv.size() && sv(r) > 1e-10 * sv(0)) ++r;
  ab.Q = svd.matrixV().leftCols(r) * sv.head(r).cwiseInverse().asDiagonal();
  return ab;
}

// An element of S on one atom, held by raw coefficients in the atom's frame.
struct LocalFunction {
  const LocalSpace* space = nullptr;
  Frame frame;
  std::vector<double> raw;
  double operator()(double x) const { return space->eval(raw.data(), x, frame); }
};

inline LocalFunction from_orthonormal(const LocalSpace& S, const AtomBasis& ab, const Eigen::VectorXd& c) {
  Eigen::VectorXd raw = ab.Q * c;
  return {&S, ab.frame, std::vector<double>(raw.data(), raw.data() + raw.size())};
}

inline double sup_norm(const ProbabilitySpace& space, const LocalFunction& f, const Support& s,
                       const QuadOptions& opt = {}) {
  return sup_abs(space, s, f, f.space->poly_degree(), {}, opt);
}

// condition number of the Gram matrix of the raw basis over Omega
inline double gram_condition(const LocalSpace& S, const ProbabilitySpace& space) {
  Frame fr = S.frame_for(space, space.omega());
  auto nodes = make_nodes(space, space.omega(), S.product_degree());
  int k = S.dim();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(k, k);
  std::vector<double> v(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < nodes.x.size(); ++i) {
    S.raw_values(nodes.x[i], fr, v.data());
    Eigen::Map<Eigen::VectorXd> e(v.data(), k);
    G += nodes.w[i] * e * e.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  return lo > 0 ? hi / lo : INFINITY;
}

struct RemezResult {
  double worst_fraction = 1.0;
  int candidates = 0;
  std::string witness;  // which candidate attained the minimum
};

// fraction of s on which |f| >= c1 * sup_s |f|
template <class F>
double remez_fraction(const ProbabilitySpace& space, const Support& s, F&& f, int degree, double c1,
                      const QuadOptions& opt = {}) {
  double sup = sup_abs(space, s, f, degree, {}, opt);
  if (sup == 0.0) return 1.0;
  return superlevel_measure(space, s, f, c1 * sup, degree, {}, opt) / space.measure(s);
}

// random unit vectors in the orthonormal coordinates of S(A), plus Chebyshev polynomials on the hull
// of A for polynomial families (the basis functions themselves otherwise)
inline RemezResult remez_empirical(const LocalSpace& S, const ProbabilitySpace& space, const Support& A, double c1,
                                   int trials, std::uint64_t seed, const QuadOptions& opt = {}) {
  require(trials >= 1, "remez_empirical needs at least one trial");
  auto ab = atom_basis(S, space, A);
  int d = ab.dim();
  int deg = S.poly_degree();
  RemezResult res;
  auto consider = [&](double frac, const std::string& who) {
    ++res.candidates;
    if (frac < res.worst_fraction) {
      res.worst_fraction = frac;
      res.witness = who;
    }
  };
  if (d == 0) return res;
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd c(d);
    for (int i = 0; i < d; ++i) c(i) = rng.normal();
    c.normalize();
    auto f = from_orthonormal(S, ab, c);
    consider(remez_fraction(space, A, f, deg, c1, opt), "random#" + std::to_string(t));
  }
  if (deg >= 0 && S.family() != Family::custom) {
    auto [lo, hi] = space.hull(A);
    double c = 0.5 * (lo + hi), h = hi > lo ? 0.5 * (hi - lo) : 1.0;
    for (int j = 0; j <= deg; ++j) {
      auto T = [=](double x) { return chebyshev_t(j, (x - c) / h); };
      consider(remez_fraction(space, A, T, deg, c1, opt), "chebyshev_T" + std::to_string(j));
    }
  } else {
    for (int i = 0; i < d; ++i) {
      auto f = from_orthonormal(S, ab, Eigen::VectorXd::Unit(d, i));
      consider(remez_fraction(space, A, f, deg, c1, opt), "basis#" + std::to_string(i));
    }
  }
  return res;
}

// largest c with |{|T_n| >= c ||T_n||}| >= |A|/2 on the hull of A: the growth actually attained by T_n
inline double chebyshev_attained_constant(const ProbabilitySpace& space, const Support& A, int n) {
  auto [lo, hi] = space.hull(A);
  double c = 0.5 * (lo + hi), h = hi > lo ? 0.5 * (hi - lo) : 1.0;
  auto T = [=](double x) { return chebyshev_t(n, (x - c) / h); };
  double sup = sup_abs(space, A, T, n);
  double a = 0.0, b = 1.0;
  for (int it = 0; it < 60; ++it) {
    double m = 0.5 * (a + b);
    if (superlevel_measure(space, A, T, m * sup, n) >= 0.5 * space.measure(A)) a = m;
    else b = m;
  }
  return a;
}

}  // namespace locos
