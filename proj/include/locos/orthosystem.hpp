#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "locos/error.hpp"
#include "locos/filtration.hpp"
#include "locos/local_space.hpp"
#include "locos/piecewise.hpp"
#include "locos/random.hpp"

namespace locos {

// Order in which the new local basis functions of a split enter the flag between S_{n-1} and S_n.
struct ChainPolicy {
  enum class Kind { standard, reverse, random };
  Kind kind = Kind::standard;
  std::uint64_t seed = 0;

  static ChainPolicy standard() { return {}; }
  static ChainPolicy reversed() { return {Kind::reverse, 0}; }
  static ChainPolicy random(std::uint64_t seed) { return {Kind::random, seed}; }

  // default | reverse | random(<seed>)
  static ChainPolicy parse(std::string_view s) {
    s = text::trim(s);
    if (s == "default" || s == "standard") return standard();
    if (s == "reverse") return reversed();
    if (s.substr(0, 7) == "random(" && s.back() == ')') {
      auto v = text::to_int(s.substr(7, s.size() - 8));
      require(v >= 0, "random chain seed must be non-negative");
      return random(static_cast<std::uint64_t>(v));
    }
    if (s == "random") return random(0);
    throw Error("unknown chain policy '" + std::string(s) + "'");
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::standard: return "default";
      case Kind::reverse: return "reverse";
      case Kind::random: return "random(" + std::to_string(seed) + ")";
    }
    return "";
  }
};

// One orthonormal difference: level n, position j in the level (1-based), split atom, and its
// coordinates on the contiguous coordinate range of that atom.
struct Psi {
  int level = 0;
  int j = 1;
  AtomId atom = 0;
  std::size_t begin = 0;
  Eigen::VectorXd v;
};

class OrthoSystem {
 public:
  static OrthoSystem build(std::shared_ptr<const BinaryFiltration> F, const LocalSpace& S,
                           ChainPolicy policy = {}, QuadOptions opt = {}) {
    OrthoSystem sys;
    sys.layout_ = std::make_shared<Layout>(std::move(F), S, opt);
    sys.policy_ = policy;
    const auto& lay = *sys.layout_;
    const auto& Fl = lay.filtration();
    int N = Fl.depth();
    sys.level_begin_.assign(static_cast<std::size_t>(N) + 2, 0);

    // level 0: an orthonormal basis of S(Omega)
    {
      Eigen::MatrixXd E0 = lay.embed(0);
      std::vector<Eigen::VectorXd> cands;
      for (Eigen::Index i = 0; i < E0.cols(); ++i) cands.push_back(E0.col(i));
      auto got = sys.orthogonalize(cands, Eigen::MatrixXd(E0.rows(), 0), 0);
      ensure(static_cast<Eigen::Index>(got.size()) == E0.cols(), "S(Omega) basis lost rank");
      sys.append_level(0, 0, 0, got, 0);
    }
    for (int n = 1; n <= N; ++n) {
      const auto& rec = Fl.split_record(n);
      auto [cb, ce] = lay.coords_of(rec.atom);
      Eigen::MatrixXd EA = lay.embed(rec.atom);
      Eigen::MatrixXd Es = lay.embed(rec.small);
      Eigen::MatrixXd El = lay.embed(rec.large);
      auto sb = lay.coords_of(rec.small).first - cb;
      auto lb = lay.coords_of(rec.large).first - cb;
      auto rows = static_cast<Eigen::Index>(ce - cb);
      auto lift = [&](const Eigen::MatrixXd& E, std::size_t at, Eigen::Index col) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(rows);
        v.segment(static_cast<Eigen::Index>(at), E.rows()) = E.col(col);
        return v;
      };
      std::vector<Eigen::VectorXd> cands;
      for (Eigen::Index i = 0; i < Es.cols(); ++i) cands.push_back(lift(Es, sb, i));
      for (Eigen::Index i = 0; i < El.cols(); ++i) cands.push_back(lift(El, lb, i));
      if (policy.kind == ChainPolicy::Kind::reverse) {
        std::vector<Eigen::VectorXd> r;
        for (Eigen::Index i = El.cols() - 1; i >= 0; --i) r.push_back(lift(El, lb, i));
        for (Eigen::Index i = Es.cols() - 1; i >= 0; --i) r.push_back(lift(Es, sb, i));
        cands = std::move(r);
      } else if (policy.kind == ChainPolicy::Kind::random) {
        Rng rng(derive_seed(policy.seed, static_cast<std::uint64_t>(n)));
        std::size_t c = cands.size();
        std::vector<Eigen::VectorXd> r;
        for (std::size_t a = 0; a < c; ++a) {
          Eigen::VectorXd v = Eigen::VectorXd::Zero(rows);
          for (std::size_t b = 0; b < c; ++b) v += rng.normal() * cands[b];
          r.push_back(v);
        }
        cands = std::move(r);
      }
      auto expect = Es.cols() + El.cols() - EA.cols();
      // drop threshold rises by decades while more directions than the rank are found
      auto got = sys.orthogonalize(cands, EA, n);
      for (double drop = 1e-9; static_cast<Eigen::Index>(got.size()) > expect && drop <= 1e-6; drop *= 10)
        got = sys.orthogonalize(cands, EA, n, drop);
      if (static_cast<Eigen::Index>(got.size()) != expect)
        throw InvariantViolation("rank deficiency at split " + std::to_string(n) + " of atom " +
                                 std::to_string(rec.atom) + ": found " + std::to_string(got.size()) +
                                 " new directions, expected " + std::to_string(expect));
      sys.append_level(n, rec.atom, cb, got, rec.small);
    }
    sys.level_begin_[static_cast<std::size_t>(N) + 1] = sys.psi_.size();
    ensure(sys.psi_.size() == lay.dim(), "system size differs from dim S_N");
    return sys;
  }

  const Layout& layout() const { return *layout_; }
  std::shared_ptr<const Layout> layout_ptr() const { return layout_; }
  const BinaryFiltration& filtration() const { return layout_->filtration(); }
  const ChainPolicy& policy() const { return policy_; }
  int depth() const { return filtration().depth(); }
  std::size_t size() const { return psi_.size(); }
  std::size_t dim() const { return layout_->dim(); }
  const Psi& psi(std::size_t m) const { return psi_.at(m); }

  // indices of level n: [first, last)
  std::pair<std::size_t, std::size_t> level_range(int n) const {
    return {level_begin_.at(static_cast<std::size_t>(n)), level_begin_.at(static_cast<std::size_t>(n) + 1)};
  }
  int ell(int n) const {
    auto [b, e] = level_range(n);
    return static_cast<int>(e - b);
  }

  Eigen::VectorXd full(std::size_t m) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim()));
    const auto& p = psi_[m];
    v.segment(static_cast<Eigen::Index>(p.begin), p.v.size()) = p.v;
    return v;
  }
  PiecewiseFunction function(std::size_t m) const { return {layout_, full(m)}; }
  PiecewiseFunction wrap(Eigen::VectorXd c) const { return {layout_, std::move(c)}; }

  double dot(std::size_t m, const Eigen::VectorXd& c) const {
    const auto& p = psi_[m];
    return p.v.dot(c.segment(static_cast<Eigen::Index>(p.begin), p.v.size()));
  }

  // <f, psi_m> for every m
  Eigen::VectorXd coefficients(const Eigen::VectorXd& c) const {
    Eigen::VectorXd a(static_cast<Eigen::Index>(size()));
    for (std::size_t m = 0; m < size(); ++m) a(static_cast<Eigen::Index>(m)) = dot(m, c);
    return a;
  }

  // sum_m a_m psi_m
  Eigen::VectorXd synthesize(const Eigen::VectorXd& a) const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim()));
    for (std::size_t m = 0; m < size(); ++m) add(c, m, a(static_cast<Eigen::Index>(m)));
    return c;
  }

  void add(Eigen::VectorXd& c, std::size_t m, double s) const {
    if (s == 0.0) return;
    const auto& p = psi_[m];
    c.segment(static_cast<Eigen::Index>(p.begin), p.v.size()) += s * p.v;
  }

  // R_m: projection onto span{psi_0..psi_m}; m = -1 gives 0
  Eigen::VectorXd project(const Eigen::VectorXd& c, std::ptrdiff_t m) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim()));
    for (std::ptrdiff_t k = 0; k <= m; ++k) add(out, static_cast<std::size_t>(k), dot(static_cast<std::size_t>(k), c));
    return out;
  }
  PiecewiseFunction project(const PiecewiseFunction& f, std::ptrdiff_t m) const {
    return {layout_, project(f.coeffs, m)};
  }
  PiecewiseFunction project(const Function& f, std::ptrdiff_t m) const {
    return {layout_, project(layout_->project(f), m)};
  }

  // P_n = projection onto S_n; n = -1 gives 0
  Eigen::VectorXd level_projection(const Eigen::VectorXd& c, int n) const {
    if (n < 0) return Eigen::VectorXd::Zero(c.size());
    return project(c, static_cast<std::ptrdiff_t>(level_range(n).second) - 1);
  }

  // P_{n,j} = projection onto V_{n,j}, 0 <= j <= ell_n
  Eigen::VectorXd chain_projection(const Eigen::VectorXd& c, int n, int j) const {
    return project(c, static_cast<std::ptrdiff_t>(level_range(n).first) + j - 1);
  }

  Eigen::VectorXd to_coords(const Function& f) const { return layout_->project(f); }

  // The martingale steps: step 0 is V_0 = S_0 as a whole, then one step per psi of level >= 1.
  // Step k projects onto span{psi_0..psi_last}.
  struct Step {
    int level = 0;
    std::size_t first = 0;
    std::size_t last = 0;
  };
  std::vector<Step> steps() const {
    std::vector<Step> out;
    auto [b0, e0] = level_range(0);
    out.push_back({0, b0, e0 - 1});
    for (std::size_t m = e0; m < size(); ++m) out.push_back({psi_[m].level, m, m});
    return out;
  }

  // df for every step
  std::vector<Eigen::VectorXd> differences(const Eigen::VectorXd& c) const {
    std::vector<Eigen::VectorXd> out;
    for (const auto& s : steps()) {
      Eigen::VectorXd d = Eigen::VectorXd::Zero(c.size());
      for (auto m = s.first; m <= s.last; ++m) add(d, m, dot(m, c));
      out.push_back(std::move(d));
    }
    return out;
  }

  double gram_deviation() const {
    double worst = 0.0;
    for (std::size_t a = 0; a < size(); ++a)
      for (std::size_t b = a; b < size(); ++b) {
        const auto& p = psi_[a];
        const auto& q = psi_[b];
        std::size_t lo = std::max(p.begin, q.begin);
        std::size_t hi = std::min(p.begin + static_cast<std::size_t>(p.v.size()),
                                  q.begin + static_cast<std::size_t>(q.v.size()));
        double g = 0.0;
        if (hi > lo)
          g = p.v.segment(static_cast<Eigen::Index>(lo - p.begin), static_cast<Eigen::Index>(hi - lo))
                  .dot(q.v.segment(static_cast<Eigen::Index>(lo - q.begin), static_cast<Eigen::Index>(hi - lo)));
        worst = std::max(worst, std::abs(g - (a == b ? 1.0 : 0.0)));
      }
    return worst;
  }

  // largest |psi_m| found on leaves outside its split atom
  double support_deviation() const {
    double worst = 0.0;
    const auto& lay = *layout_;
    for (std::size_t m = 0; m < size(); ++m) {
      const auto& p = psi_[m];
      if (p.level == 0) continue;
      auto v = full(m);
      auto [b, e] = lay.leaves_of(p.atom);
      for (std::size_t l = 0; l < lay.num_leaves(); ++l) {
        if (l >= b && l < e) continue;
        worst = std::max(worst, lay.leaf_sup(v, l));
      }
    }
    return worst;
  }

  // empirical constant of the pointwise projector bound, stored by the caller once measured
  std::optional<double> measured_c3() const { return c3_; }
  void set_measured_c3(double c) { c3_ = c; }

  // m, n, j, atom_id, basis_index, coeff (17 significant digits); basis_index runs over the
  // leaf-orthonormal coordinates of the split atom
  std::string psi_csv() const {
    std::ostringstream os;
    os << "m,n,j,atom_id,basis_index,coeff\n";
    for (std::size_t m = 0; m < size(); ++m) {
      const auto& p = psi_[m];
      for (Eigen::Index i = 0; i < p.v.size(); ++i)
        os << m << "," << p.level << "," << p.j << "," << p.atom << "," << (p.begin + static_cast<std::size_t>(i))
           << "," << format_double(p.v(i)) << "\n";
    }
    return os.str();
  }

 private:
  // modified Gram-Schmidt with one reorthogonalization pass; dependent candidates are dropped
  std::vector<Eigen::VectorXd> orthogonalize(const std::vector<Eigen::VectorXd>& cands, const Eigen::MatrixXd& base,
                                             int n, double drop = 1e-10) const {
    std::vector<Eigen::VectorXd> got;
    for (const auto& c0 : cands) {
      double ref = c0.norm();
      if (ref == 0.0) continue;
      Eigen::VectorXd v = c0 / ref;
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index i = 0; i < base.cols(); ++i) v -= base.col(i).dot(v) * base.col(i);
        for (const auto& q : got) v -= q.dot(v) * q;
      }
      double nv = v.norm();
      if (nv < drop) continue;
      got.push_back(v / nv);
    }
    double loss = 0.0;
    for (std::size_t a = 0; a < got.size(); ++a) {
      for (Eigen::Index i = 0; i < base.cols(); ++i) loss = std::max(loss, std::abs(base.col(i).dot(got[a])));
      for (std::size_t b = 0; b < got.size(); ++b)
        loss = std::max(loss, std::abs(got[a].dot(got[b]) - (a == b ? 1.0 : 0.0)));
    }
    if (loss > 1e-8)
      throw InvariantViolation("loss of orthogonality " + format_double(loss) + " at level " + std::to_string(n));
    return got;
  }

  // sign rule: the value of largest magnitude on A' (on Omega at level 0) is positive
  void append_level(int n, AtomId atom, std::size_t begin, std::vector<Eigen::VectorXd>& got, AtomId small) {
    const auto& lay = *layout_;
    level_begin_[static_cast<std::size_t>(n)] = psi_.size();
    AtomId probe = n == 0 ? 0 : small;
    auto [lb, le] = lay.leaves_of(probe);
    int j = 1;
    for (auto& v : got) {
      Eigen::VectorXd fullv = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lay.dim()));
      fullv.segment(static_cast<Eigen::Index>(begin), v.size()) = v;
      double best = 0.0;
      for (auto l = lb; l < le; ++l) {
        if (lay.leaf(l).dim == 0) continue;
        auto f = lay.on_leaf(fullv, l);
        for (double x : lay.sample_points(l)) {
          double y = f(x);
          if (std::abs(y) > std::abs(best) * (1.0 + 1e-12)) best = y;
        }
      }
      if (best < 0.0) v = -v;
      psi_.push_back({n, j++, atom, begin, v});
    }
  }

  std::shared_ptr<Layout> layout_;
  ChainPolicy policy_;
  std::vector<Psi> psi_;
  std::vector<std::size_t> level_begin_;
  std::optional<double> c3_;
};

}  // namespace locos
