#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "locos/error.hpp"
#include "locos/filtration.hpp"
#include "locos/local_space.hpp"
#include "locos/numerics.hpp"
#include "locos/orthosystem.hpp"
#include "locos/random.hpp"

namespace locos {

struct Rect {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool contains(double x, double y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
};

struct Split2D {
  int n = 0;
  std::size_t atom = 0;
  double cx = 0.5, cy = 0.5;
  std::array<std::size_t, 4> children{};  // (x-part, y-part) as (lo,lo), (hi,lo), (lo,hi), (hi,hi)
};

// Rectangles of the unit square with Lebesgue measure; each step divides one rectangle into four
// at an interior point.
class Filtration2D {
 public:
  Filtration2D() { rects_.push_back(Rect{}); leaf_.push_back(true); }

  const std::vector<Rect>& atoms() const { return rects_; }
  const Rect& atom(std::size_t id) const { return rects_.at(id); }
  const std::vector<Split2D>& splits() const { return splits_; }
  int depth() const { return static_cast<int>(splits_.size()); }
  bool is_leaf(std::size_t id) const { return leaf_.at(id); }

  std::vector<std::size_t> leaves() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rects_.size(); ++i)
      if (leaf_[i]) out.push_back(i);
    return out;
  }

  const Split2D& split(std::size_t id, double cx, double cy) {
    require(id < rects_.size(), "no rectangle " + std::to_string(id));
    require(leaf_[id], "rectangle " + std::to_string(id) + " is not a leaf");
    const Rect R = rects_[id];
    require(cx > R.x0 && cx < R.x1 && cy > R.y0 && cy < R.y1, "split point must be interior");
    Split2D s;
    s.n = depth() + 1;
    s.atom = id;
    s.cx = cx;
    s.cy = cy;
    std::array<Rect, 4> kids = {Rect{R.x0, cx, R.y0, cy}, Rect{cx, R.x1, R.y0, cy}, Rect{R.x0, cx, cy, R.y1},
                                Rect{cx, R.x1, cy, R.y1}};
    for (int k = 0; k < 4; ++k) {
      s.children[static_cast<std::size_t>(k)] = rects_.size();
      rects_.push_back(kids[static_cast<std::size_t>(k)]);
      leaf_.push_back(true);
    }
    leaf_[id] = false;
    splits_.push_back(s);
    return splits_.back();
  }

  // all distinct rectangle edges in each direction
  std::pair<std::vector<double>, std::vector<double>> edges() const {
    std::vector<double> xs{0.0, 1.0}, ys{0.0, 1.0};
    for (const auto& s : splits_) {
      xs.push_back(s.cx);
      ys.push_back(s.cy);
    }
    for (auto* v : {&xs, &ys}) {
      std::sort(v->begin(), v->end());
      v->erase(std::unique(v->begin(), v->end()), v->end());
    }
    return {xs, ys};
  }

 private:
  std::vector<Rect> rects_;
  std::vector<bool> leaf_;
  std::vector<Split2D> splits_;
};

namespace gen {

inline Filtration2D random_2d(int depth, Rng& rng) {
  Filtration2D f;
  for (int n = 0; n < depth; ++n) {
    auto lv = f.leaves();
    auto id = lv[rng.index(lv.size())];
    const auto& R = f.atom(id);
    f.split(id, R.x0 + rng.uniform(0.1, 0.9) * R.width(), R.y0 + rng.uniform(0.1, 0.9) * R.height());
  }
  return f;
}

}  // namespace gen

// 1-D system on one side of a rectangle: level 0 is S(I), level 1 the split at c
struct Side {
  double lo = 0.0, hi = 1.0;
  std::shared_ptr<OrthoSystem> sys;
  std::shared_ptr<BinaryFiltration> F;

  // value of psi_m on the unit square's scale (L^2 of Lebesgue on I)
  double value(std::size_t m, double x) const {
    if (x < lo || x > hi) return 0.0;
    double xc = std::min(x, std::nextafter(hi, lo));
    return sys->layout().value(sys->full(m), xc) / std::sqrt(hi - lo);
  }
};

inline Side make_side(const LocalSpace& S, double lo, double hi, double cut, QuadOptions opt) {
  Side s;
  s.lo = lo;
  s.hi = hi;
  s.F = std::make_shared<BinaryFiltration>(
      ProbabilitySpace::parse("interval:" + format_double(lo) + "," + format_double(hi)));
  if (cut > lo && cut < hi) s.F->split(0, Cut::at(cut));
  s.sys = std::make_shared<OrthoSystem>(OrthoSystem::build(s.F, S, ChainPolicy::standard(), opt));
  return s;
}

struct TensorPsi {
  int n = 0;                // 0 for the basis of S1 x S2 on the square
  std::size_t atom = 0;
  int mu1 = 0, mu2 = 0;     // 0: level-0 factor, 1: split factor
  std::size_t m1 = 0, m2 = 0;
  std::size_t side = 0;     // index into the side table
};

// Tensor-product system on a rectangle filtration: per split, psi1 x psi2 with (mu1, mu2) != (0, 0)
class TensorSystem2D {
 public:
  TensorSystem2D(const Filtration2D& F, LocalSpace S1, LocalSpace S2, QuadOptions opt = {})
      : F_(F), S1_(std::move(S1)), S2_(std::move(S2)) {
    require(S1_.family() == Family::polynomial || S1_.family() == Family::indicator,
            "tensor factors must be polynomial or indicator spaces");
    require(S2_.family() == Family::polynomial || S2_.family() == Family::indicator,
            "tensor factors must be polynomial or indicator spaces");
    {
      SidePair sp{make_side(S1_, 0.0, 1.0, -1.0, opt), make_side(S2_, 0.0, 1.0, -1.0, opt)};
      sides_.push_back(sp);
      for (std::size_t a = 0; a < sp.x.sys->size(); ++a)
        for (std::size_t b = 0; b < sp.y.sys->size(); ++b) psi_.push_back({0, 0, 0, 0, a, b, 0});
    }
    for (const auto& s : F_.splits()) {
      const auto& R = F_.atom(s.atom);
      SidePair sp{make_side(S1_, R.x0, R.x1, s.cx, opt), make_side(S2_, R.y0, R.y1, s.cy, opt)};
      std::size_t si = sides_.size();
      sides_.push_back(sp);
      auto mu_of = [](const OrthoSystem& o, std::size_t m) { return o.psi(m).level; };
      for (std::size_t a = 0; a < sp.x.sys->size(); ++a)
        for (std::size_t b = 0; b < sp.y.sys->size(); ++b) {
          int m1 = mu_of(*sp.x.sys, a), m2 = mu_of(*sp.y.sys, b);
          if (m1 == 0 && m2 == 0) continue;
          psi_.push_back({s.n, s.atom, m1, m2, a, b, si});
        }
    }
  }

  std::size_t size() const { return psi_.size(); }
  const TensorPsi& psi(std::size_t k) const { return psi_.at(k); }
  const Filtration2D& filtration() const { return F_; }

  double value(std::size_t k, double x, double y) const {
    const auto& p = psi_[k];
    const auto& sp = sides_[p.side];
    return sp.x.value(p.m1, x) * sp.y.value(p.m2, y);
  }

  // tensor Gauss-Legendre nodes on the grid of all rectangle edges
  struct Nodes2D {
    std::vector<double> x, y, w;
  };
  Nodes2D nodes() const {
    auto [xs, ys] = F_.edges();
    int deg = 2 * std::max(std::max(S1_.poly_degree(), S2_.poly_degree()), 0);
    const auto& g = gauss_legendre(gauss_points_for_degree(deg));
    Nodes2D nd;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
      for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
        double cx = 0.5 * (xs[i] + xs[i + 1]), hx = 0.5 * (xs[i + 1] - xs[i]);
        double cy = 0.5 * (ys[j] + ys[j + 1]), hy = 0.5 * (ys[j + 1] - ys[j]);
        for (std::size_t a = 0; a < g.nodes.size(); ++a)
          for (std::size_t b = 0; b < g.nodes.size(); ++b) {
            nd.x.push_back(cx + hx * g.nodes[a]);
            nd.y.push_back(cy + hy * g.nodes[b]);
            nd.w.push_back(g.weights[a] * g.weights[b] * hx * hy);
          }
      }
    return nd;
  }

  Eigen::MatrixXd values_at(const Nodes2D& nd) const {
    Eigen::MatrixXd V(static_cast<Eigen::Index>(nd.x.size()), static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < nd.x.size(); ++i)
      for (std::size_t k = 0; k < size(); ++k)
        V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = value(k, nd.x[i], nd.y[i]);
    return V;
  }

  Eigen::MatrixXd gram() const {
    auto nd = nodes();
    Eigen::MatrixXd V = values_at(nd);
    Eigen::Map<const Eigen::VectorXd> w(nd.w.data(), static_cast<Eigen::Index>(nd.w.size()));
    return V.transpose() * w.asDiagonal() * V;
  }

  double gram_deviation() const {
    Eigen::MatrixXd G = gram();
    return (G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
  }

  // sup over splits of |<psi, u x v>| for u, v in the raw bases of S1, S2 on the split rectangle
  double parent_orthogonality() const {
    auto nd = nodes();
    double worst = 0.0;
    std::vector<double> r1(static_cast<std::size_t>(S1_.dim())), r2(static_cast<std::size_t>(S2_.dim()));
    for (std::size_t k = 0; k < size(); ++k) {
      const auto& p = psi_[k];
      if (p.n == 0) continue;
      const auto& R = F_.atom(p.atom);
      Frame f1{0.5 * (R.x0 + R.x1), 0.5 * R.width()}, f2{0.5 * (R.y0 + R.y1), 0.5 * R.height()};
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(S1_.dim(), S2_.dim());
      for (std::size_t i = 0; i < nd.x.size(); ++i) {
        if (!R.contains(nd.x[i], nd.y[i])) continue;
        double v = value(k, nd.x[i], nd.y[i]) * nd.w[i];
        if (v == 0.0) continue;
        S1_.raw_values(nd.x[i], f1, r1.data());
        S2_.raw_values(nd.y[i], f2, r2.data());
        for (int a = 0; a < S1_.dim(); ++a)
          for (int b = 0; b < S2_.dim(); ++b) acc(a, b) += v * r1[static_cast<std::size_t>(a)] * r2[static_cast<std::size_t>(b)];
      }
      worst = std::max(worst, acc.cwiseAbs().maxCoeff());
    }
    return worst;
  }

  // the largest |psi| on each of the four children of its split, divided by the product profile
  //   prod_d (mu_d = 0 ? |A^d|^{1/2} / |A^d| : |A'^d|^{1/2} / |A^d_{kappa_d}|)
  std::vector<double> profile_ratios(int grid = 32) const {
    std::vector<double> out;
    for (std::size_t k = 0; k < size(); ++k) {
      const auto& p = psi_[k];
      if (p.n == 0) continue;
      const auto& s = F_.splits().at(static_cast<std::size_t>(p.n - 1));
      const auto& R = F_.atom(s.atom);
      double xa = s.cx - R.x0, xb = R.x1 - s.cx, ya = s.cy - R.y0, yb = R.y1 - s.cy;
      double xs = std::min(xa, xb), ys = std::min(ya, yb);
      for (auto child : s.children) {
        const auto& C = F_.atom(child);
        double sup = 0.0;
        for (int i = 0; i < grid; ++i)
          for (int j = 0; j < grid; ++j) {
            double x = C.x0 + (i + 0.5) / grid * C.width(), y = C.y0 + (j + 0.5) / grid * C.height();
            sup = std::max(sup, std::abs(value(k, x, y)));
          }
        double bx = p.mu1 == 0 ? 1.0 / std::sqrt(R.width()) : std::sqrt(xs) / C.width();
        double by = p.mu2 == 0 ? 1.0 / std::sqrt(R.height()) : std::sqrt(ys) / C.height();
        out.push_back(sup / (bx * by));
      }
    }
    return out;
  }

 private:
  struct SidePair {
    Side x, y;
  };
  Filtration2D F_;
  LocalSpace S1_, S2_;
  std::vector<SidePair> sides_;
  std::vector<TensorPsi> psi_;
};

// worst fraction of a rectangle where |f| >= c1 sup|f| for random f in S1 x S2, sampled on a grid
inline double remez_rectangle(const LocalSpace& S1, const LocalSpace& S2, const Rect& R, double c1, int trials,
                              std::uint64_t seed, int grid = 128) {
  require(S1.family() != Family::tensor && S2.family() != Family::tensor, "factors must be one-dimensional");
  Frame f1{0.5 * (R.x0 + R.x1), 0.5 * R.width()}, f2{0.5 * (R.y0 + R.y1), 0.5 * R.height()};
  int d1 = S1.dim(), d2 = S2.dim();
  std::vector<std::vector<double>> v1(static_cast<std::size_t>(grid), std::vector<double>(static_cast<std::size_t>(d1)));
  std::vector<std::vector<double>> v2(static_cast<std::size_t>(grid), std::vector<double>(static_cast<std::size_t>(d2)));
  for (int i = 0; i < grid; ++i) {
    S1.raw_values(R.x0 + (i + 0.5) / grid * R.width(), f1, v1[static_cast<std::size_t>(i)].data());
    S2.raw_values(R.y0 + (i + 0.5) / grid * R.height(), f2, v2[static_cast<std::size_t>(i)].data());
  }
  Rng rng(seed);
  double worst = 1.0;
  std::vector<double> vals(static_cast<std::size_t>(grid * grid));
  for (int t = 0; t < trials; ++t) {
    Eigen::MatrixXd C(d1, d2);
    for (int a = 0; a < d1; ++a)
      for (int b = 0; b < d2; ++b) C(a, b) = rng.normal();
    double sup = 0.0;
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j) {
        double s = 0.0;
        for (int a = 0; a < d1; ++a)
          for (int b = 0; b < d2; ++b)
            s += C(a, b) * v1[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] *
                 v2[static_cast<std::size_t>(j)][static_cast<std::size_t>(b)];
        vals[static_cast<std::size_t>(i * grid + j)] = std::abs(s);
        sup = std::max(sup, std::abs(s));
      }
    if (sup == 0.0) continue;
    int cnt = 0;
    for (double v : vals)
      if (v >= c1 * sup) ++cnt;
    worst = std::min(worst, static_cast<double>(cnt) / (grid * grid));
  }
  return worst;
}

}  // namespace locos
