#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "locos/error.hpp"
#include "locos/filtration.hpp"
#include "locos/function.hpp"
#include "locos/local_space.hpp"
#include "locos/measure_space.hpp"
#include "locos/quadrature.hpp"

namespace locos {

struct Leaf {
  AtomId atom = 0;
  std::size_t offset = 0;  // first coordinate
  int dim = 0;
  NodeSet nodes;           // exact for products of two elements of S
  Eigen::MatrixXd values;  // orthonormal basis at the nodes, nodes x dim
};

// Coordinates for S_N: the leaves of the filtration in depth-first order, each carrying an
// orthonormal basis of S restricted to it. Every atom owns a contiguous run of leaves and coordinates.
class Layout {
 public:
  Layout(std::shared_ptr<const BinaryFiltration> F, LocalSpace S, QuadOptions opt = {})
      : F_(std::move(F)), S_(std::move(S)), opt_(opt) {
    require(S_.family() != Family::tensor, "tensor spaces need the 2-D system");
    const auto& atoms = F_->atoms();
    basis_.resize(atoms.size());
    for (const auto& a : atoms) basis_[a.id] = atom_basis(S_, space(), a.support);
    auto order = F_->leaves();
    leaf_of_atom_.assign(atoms.size(), kNoLeaf);
    std::size_t off = 0;
    for (auto id : order) {
      Leaf L;
      L.atom = id;
      L.offset = off;
      L.dim = basis_[id].dim();
      L.nodes = make_nodes(space(), atoms[id].support, S_.product_degree());
      L.values = values_at(basis_[id], L.nodes.x);
      off += static_cast<std::size_t>(L.dim);
      leaf_of_atom_[id] = leaves_.size();
      leaves_.push_back(std::move(L));
    }
    dim_ = off;
    leaf_range_.assign(atoms.size(), {0, 0});
    fill_ranges(0);
  }

  const BinaryFiltration& filtration() const { return *F_; }
  std::shared_ptr<const BinaryFiltration> filtration_ptr() const { return F_; }
  const ProbabilitySpace& space() const { return F_->space(); }
  const LocalSpace& local() const { return S_; }
  const QuadOptions& quad() const { return opt_; }
  std::size_t dim() const { return dim_; }
  std::size_t num_leaves() const { return leaves_.size(); }
  const Leaf& leaf(std::size_t i) const { return leaves_.at(i); }
  const AtomBasis& basis_of(AtomId id) const { return basis_.at(id); }
  std::size_t leaf_index(AtomId leaf_atom) const { return leaf_of_atom_.at(leaf_atom); }

  // leaves [first, last) contained in an atom
  std::pair<std::size_t, std::size_t> leaves_of(AtomId id) const { return leaf_range_.at(id); }

  std::pair<std::size_t, std::size_t> coords_of(AtomId id) const {
    auto [b, e] = leaf_range_.at(id);
    std::size_t cb = leaves_[b].offset;
    std::size_t ce = e < leaves_.size() ? leaves_[e].offset : dim_;
    return {cb, ce};
  }

  // orthonormal basis of S(A) written in the leaf coordinates of A: one column per basis function
  Eigen::MatrixXd embed(AtomId id) const {
    const auto& ab = basis_[id];
    auto [cb, ce] = coords_of(id);
    auto [lb, le] = leaves_of(id);
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ce - cb), ab.dim());
    for (std::size_t l = lb; l < le; ++l) {
      const auto& L = leaves_[l];
      if (L.dim == 0) continue;
      Eigen::MatrixXd VA = values_at(ab, L.nodes.x);
      Eigen::Map<const Eigen::VectorXd> w(L.nodes.w.data(), static_cast<Eigen::Index>(L.nodes.w.size()));
      E.block(static_cast<Eigen::Index>(L.offset - cb), 0, L.dim, ab.dim()) =
          L.values.transpose() * w.asDiagonal() * VA;
    }
    return E;
  }

  // leaf coordinates of the orthogonal projection of f onto S_N
  Eigen::VectorXd project(const Function& f) const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
    int sd = S_.poly_degree();
    int deg = (f.degree < 0 || sd < 0) ? -1 : f.degree + sd;
    for (const auto& L : leaves_) {
      const auto& ab = basis_[L.atom];
      const auto& sup = F_->atom(L.atom).support;
      for (int i = 0; i < L.dim; ++i) {
        Eigen::VectorXd unit = Eigen::VectorXd::Unit(L.dim, i);
        auto e = from_orthonormal(S_, ab, unit);
        auto prod = [&](double x) { return f(x) * e(x); };
        c(static_cast<Eigen::Index>(L.offset) + i) = integrate(space(), sup, prod, deg, f.breakpoints, opt_);
      }
    }
    return c;
  }

  LocalFunction on_leaf(const Eigen::VectorXd& c, std::size_t l) const {
    const auto& L = leaves_[l];
    Eigen::VectorXd cl = c.segment(static_cast<Eigen::Index>(L.offset), L.dim);
    return from_orthonormal(S_, basis_[L.atom], cl);
  }

  double value(const Eigen::VectorXd& c, double x) const {
    auto l = leaf_of_atom_[F_->locate(x)];
    if (leaves_[l].dim == 0) return 0.0;
    return on_leaf(c, l)(x);
  }

  Eigen::VectorXd leaf_coords(const Eigen::VectorXd& c, std::size_t l) const {
    const auto& L = leaves_[l];
    return c.segment(static_cast<Eigen::Index>(L.offset), L.dim);
  }

  LocalFunction local_function(const Eigen::VectorXd& cl, std::size_t l) const {
    return from_orthonormal(S_, basis_[leaves_[l].atom], cl);
  }

  bool leaf_is_zero(const Eigen::VectorXd& c, std::size_t l) const {
    const auto& L = leaves_[l];
    for (int i = 0; i < L.dim; ++i)
      if (c(static_cast<Eigen::Index>(L.offset) + i) != 0.0) return false;
    return true;
  }

  // the leaf-local variants take the coordinates of one leaf only
  double sup_local(const Eigen::VectorXd& cl, std::size_t l) const {
    if (cl.size() == 0 || cl.isZero(0.0)) return 0.0;
    return sup_abs(space(), F_->atom(leaves_[l].atom).support, local_function(cl, l), S_.poly_degree(), {}, opt_);
  }

  double power_local(const Eigen::VectorXd& cl, std::size_t l, double p) const {
    if (cl.size() == 0 || cl.isZero(0.0)) return 0.0;
    if (p == 2.0) return cl.squaredNorm();
    return abs_power_integral(space(), F_->atom(leaves_[l].atom).support, local_function(cl, l), p,
                              S_.poly_degree(), {}, opt_);
  }

  template <class G>
  double superlevel_local(G&& g, std::size_t l, double t, bool strict) const {
    return superlevel_measure(space(), F_->atom(leaves_[l].atom).support, g, t, S_.poly_degree(), {}, opt_, strict);
  }

  double leaf_sup(const Eigen::VectorXd& c, std::size_t l) const { return sup_local(leaf_coords(c, l), l); }

  // integral of |f|^p over one leaf
  double leaf_power(const Eigen::VectorXd& c, std::size_t l, double p) const {
    return power_local(leaf_coords(c, l), l, p);
  }

  double lp_norm(const Eigen::VectorXd& c, double p) const {
    require(p >= 1.0, "p must lie in [1, inf]");
    if (std::isinf(p)) {
      double s = 0.0;
      for (std::size_t l = 0; l < leaves_.size(); ++l) s = std::max(s, leaf_sup(c, l));
      return s;
    }
    if (p == 2.0) return c.norm();
    double s = 0.0;
    for (std::size_t l = 0; l < leaves_.size(); ++l) s += leaf_power(c, l, p);
    return std::pow(s, 1.0 / p);
  }

  // norm restricted to the leaves of one atom
  double lp_norm_on(const Eigen::VectorXd& c, double p, AtomId id) const {
    auto [b, e] = leaves_of(id);
    if (std::isinf(p)) {
      double s = 0.0;
      for (auto l = b; l < e; ++l) s = std::max(s, leaf_sup(c, l));
      return s;
    }
    double s = 0.0;
    for (auto l = b; l < e; ++l) s += leaf_power(c, l, p);
    return std::pow(s, 1.0 / p);
  }

  std::vector<double> leaf_abs_integrals(const Eigen::VectorXd& c) const {
    std::vector<double> out(leaves_.size());
    for (std::size_t l = 0; l < leaves_.size(); ++l) out[l] = leaf_power(c, l, 1.0);
    return out;
  }

  // keep only the coordinates of leaves with mask[l] true
  Eigen::VectorXd masked(const Eigen::VectorXd& c, const std::vector<char>& mask) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(c.size());
    for (std::size_t l = 0; l < leaves_.size(); ++l)
      if (mask[l]) {
        const auto& L = leaves_[l];
        out.segment(static_cast<Eigen::Index>(L.offset), L.dim) =
            c.segment(static_cast<Eigen::Index>(L.offset), L.dim);
      }
    return out;
  }

  // leaf mask of an atom
  std::vector<char> mask_of(AtomId id) const {
    std::vector<char> m(leaves_.size(), 0);
    auto [b, e] = leaves_of(id);
    for (auto l = b; l < e; ++l) m[l] = 1;
    return m;
  }

  // per-leaf values of E_n applied to a per-leaf integral table
  std::vector<double> level_means(const std::vector<double>& leaf_integrals, int n) const {
    std::vector<double> out(leaves_.size());
    for (auto id : F_->atoms_at(n)) {
      auto [b, e] = leaves_of(id);
      double s = 0.0;
      for (auto l = b; l < e; ++l) s += leaf_integrals[l];
      s /= F_->atom(id).measure;
      for (auto l = b; l < e; ++l) out[l] = s;
    }
    return out;
  }

  // sample points inside a leaf: its quadrature nodes and (just inside) its segment ends
  std::vector<double> sample_points(std::size_t l) const {
    const auto& L = leaves_[l];
    std::vector<double> pts = L.nodes.x;
    if (!space().is_discrete())
      for (const auto& iv : F_->atom(L.atom).support.segments()) {
        pts.push_back(iv.lo);
        pts.push_back(std::nextafter(iv.hi, iv.lo));
      }
    return pts;
  }

 private:
  static constexpr std::size_t kNoLeaf = static_cast<std::size_t>(-1);

  Eigen::MatrixXd values_at(const AtomBasis& ab, const std::vector<double>& xs) const {
    int k = S_.dim();
    Eigen::MatrixXd raw(static_cast<Eigen::Index>(xs.size()), k);
    std::vector<double> v(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < xs.size(); ++i) {
      S_.raw_values(xs[i], ab.frame, v.data());
      for (int j = 0; j < k; ++j) raw(static_cast<Eigen::Index>(i), j) = v[static_cast<std::size_t>(j)];
    }
    return raw * ab.Q;
  }

  void fill_ranges(AtomId id) {
    const auto& a = F_->atom(id);
    if (a.split_at < 0) {
      auto l = leaf_of_atom_[id];
      leaf_range_[id] = {l, l + 1};
      return;
    }
    fill_ranges(a.small_child);
    fill_ranges(a.large_child);
    leaf_range_[id] = {leaf_range_[a.small_child].first, leaf_range_[a.large_child].second};
    ensure(leaf_range_[a.small_child].second == leaf_range_[a.large_child].first, "leaf order is not depth-first");
  }

  std::shared_ptr<const BinaryFiltration> F_;
  LocalSpace S_;
  QuadOptions opt_;
  std::vector<AtomBasis> basis_;
  std::vector<Leaf> leaves_;
  std::vector<std::size_t> leaf_of_atom_;
  std::vector<std::pair<std::size_t, std::size_t>> leaf_range_;
  std::size_t dim_ = 0;
};

// An element of S_N held in leaf coordinates.
struct PiecewiseFunction {
  std::shared_ptr<const Layout> layout;
  Eigen::VectorXd coeffs;

  double operator()(double x) const { return layout->value(coeffs, x); }
  double lp_norm(double p) const { return layout->lp_norm(coeffs, p); }

  friend PiecewiseFunction operator+(const PiecewiseFunction& a, const PiecewiseFunction& b) {
    return {a.layout, a.coeffs + b.coeffs};
  }
  friend PiecewiseFunction operator-(const PiecewiseFunction& a, const PiecewiseFunction& b) {
    return {a.layout, a.coeffs - b.coeffs};
  }
  friend PiecewiseFunction operator*(double s, const PiecewiseFunction& a) { return {a.layout, s * a.coeffs}; }
};

// E_n of a piecewise function, as per-atom means
inline LevelFunction conditional_expectation(const PiecewiseFunction& f, int n) {
  const auto& lay = *f.layout;
  const auto& F = lay.filtration();
  std::vector<double> leaf_int(lay.num_leaves(), 0.0);
  for (std::size_t l = 0; l < lay.num_leaves(); ++l) {
    const auto& L = lay.leaf(l);
    if (L.dim == 0) continue;
    Eigen::VectorXd vals = L.values * f.coeffs.segment(static_cast<Eigen::Index>(L.offset), L.dim);
    double s = 0.0;
    for (std::size_t i = 0; i < L.nodes.w.size(); ++i) s += L.nodes.w[i] * vals(static_cast<Eigen::Index>(i));
    leaf_int[l] = s;
  }
  LevelFunction out;
  out.filtration = lay.filtration_ptr();
  out.level = n;
  out.by_atom.assign(F.atoms().size(), std::numeric_limits<double>::quiet_NaN());
  for (auto id : F.atoms_at(n)) {
    auto [b, e] = lay.leaves_of(id);
    double s = 0.0;
    for (auto l = b; l < e; ++l) s += leaf_int[l];
    out.by_atom[id] = s / F.atom(id).measure;
  }
  return out;
}

}  // namespace locos
