#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "locos/analysis.hpp"
#include "locos/error.hpp"
#include "locos/filtration.hpp"
#include "locos/local_space.hpp"
#include "locos/orthosystem.hpp"
#include "locos/random.hpp"

namespace locos {

struct RAtom {
  AtomId id = 0;
  Support support;
  double measure = 1.0;
  AtomId parent = kNoAtom;
  int split_at = -1;
  std::vector<AtomId> children;  // ascending measure
};

struct RWaySplit {
  int n = 0;
  AtomId atom = 0;
  std::vector<AtomId> children;  // ascending measure
  std::vector<Cut> cuts;         // as given, r - 1 of them
};

// Filtration whose steps divide one atom into r >= 2 parts. Cuts are either r-1 increasing
// coordinates, or r-1 disjoint parts with the remainder as the last part.
class RWayFiltration {
 public:
  RWayFiltration() = default;
  explicit RWayFiltration(ProbabilitySpace space, int r_max = 8) : space_(std::move(space)), r_max_(r_max) {
    require(r_max >= 2, "r_max must be at least 2");
    RAtom root;
    root.support = space_.omega();
    root.measure = space_.measure(root.support);
    atoms_.push_back(std::move(root));
  }

  const ProbabilitySpace& space() const { return space_; }
  int r_max() const { return r_max_; }
  int depth() const { return static_cast<int>(splits_.size()); }
  const RAtom& atom(AtomId id) const { return atoms_.at(id); }
  const std::vector<RAtom>& atoms() const { return atoms_; }
  const RWaySplit& split_record(int n) const { return splits_.at(static_cast<std::size_t>(n - 1)); }
  const std::vector<RWaySplit>& splits() const { return splits_; }

  std::vector<AtomId> leaves() const {
    std::vector<AtomId> out;
    for (const auto& a : atoms_)
      if (a.split_at < 0) out.push_back(a.id);
    return out;
  }

  const std::vector<AtomId>& split(AtomId id, const std::vector<Cut>& cuts) {
    require(id < atoms_.size(), "no atom with id " + std::to_string(id));
    require(atoms_[id].split_at < 0, "atom " + std::to_string(id) + " is not a leaf");
    int r = static_cast<int>(cuts.size()) + 1;
    require(r >= 2, "an r-way split needs at least one cut");
    require(r <= r_max_, "split into " + std::to_string(r) + " parts exceeds r_max = " + std::to_string(r_max_));
    std::vector<Support> parts;
    Support rest = atoms_[id].support;
    bool by_coord = cuts.front().kind == Cut::Kind::at;
    double prev = -INFINITY;
    for (const auto& c : cuts) {
      require((c.kind == Cut::Kind::at) == by_coord, "cuts of one split must all be coordinates or all be parts");
      Support piece;
      if (by_coord) {
        require(c.x > prev, "coordinate cuts must increase");
        prev = c.x;
        auto [lo, hi] = space_.cut_at(rest, c.x);
        piece = lo;
        rest = hi;
      } else {
        require(c.part.is_discrete() == space_.is_discrete(), "cut kind does not match the space backing");
        piece = rest.intersect(c.part);
        rest = rest.minus(c.part);
      }
      require(!piece.empty(), "cut " + c.to_string() + " yields an empty part");
      parts.push_back(piece);
    }
    require(!rest.empty(), "cuts leave no remainder");
    parts.push_back(rest);
    std::vector<std::size_t> order(parts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> mass;
    for (const auto& p : parts) mass.push_back(space_.measure(p));
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mass[a] < mass[b]; });
    RWaySplit rec;
    rec.n = depth() + 1;
    rec.atom = id;
    rec.cuts = cuts;
    for (auto k : order) {
      RAtom a;
      a.id = atoms_.size();
      a.support = parts[k];
      a.measure = mass[k];
      a.parent = id;
      rec.children.push_back(a.id);
      atoms_.push_back(std::move(a));
    }
    atoms_[id].split_at = rec.n;
    atoms_[id].children = rec.children;
    double total = 0.0;
    for (auto c : rec.children) total += atoms_[c].measure;
    ensure(std::abs(total - atoms_[id].measure) <= 1e-12, "r-way split does not conserve measure");
    splits_.push_back(std::move(rec));
    return splits_.back().children;
  }

  // "space <descriptor>", then "n atom_id r cut_1 ... cut_{r-1}" per split
  std::string to_text() const {
    std::ostringstream os;
    os << "# r-way filtration\n";
    os << "space " << space_.descriptor() << "\n";
    for (const auto& s : splits_) {
      os << s.n << " " << s.atom << " " << s.cuts.size() + 1;
      for (const auto& c : s.cuts) os << " " << c.to_string();
      os << "\n";
    }
    return os.str();
  }

  static RWayFiltration from_text(const std::string& txt, int r_max = 8) {
    std::istringstream is(txt);
    std::string line;
    int lineno = 0;
    RWayFiltration f;
    bool have_space = false;
    while (std::getline(is, line)) {
      ++lineno;
      auto t = text::trim(line);
      if (t.empty() || t.front() == '#') continue;
      auto where = " (line " + std::to_string(lineno) + ")";
      try {
        if (!have_space) {
          require(t.substr(0, 6) == "space ", "expected 'space <descriptor>'");
          f = RWayFiltration(ProbabilitySpace::parse(t.substr(6)), r_max);
          have_space = true;
          continue;
        }
        std::istringstream ls{std::string(t)};
        std::vector<std::string> fields;
        for (std::string w; ls >> w;) fields.push_back(w);
        require(fields.size() >= 4, "expected 'n atom_id r cut_1 ... cut_{r-1}'");
        auto n = text::to_int(fields[0]);
        require(n == f.depth() + 1, "split index " + std::to_string(n) + " out of sequence");
        auto id = text::to_int(fields[1]);
        require(id >= 0, "negative atom id");
        auto r = text::to_int(fields[2]);
        require(r >= 2 && static_cast<std::size_t>(r) + 2 == fields.size(),
                "r = " + fields[2] + " does not match the number of cuts");
        std::vector<Cut> cuts;
        for (std::size_t i = 3; i < fields.size(); ++i) cuts.push_back(Cut::parse(fields[i]));
        f.split(static_cast<AtomId>(id), cuts);
      } catch (const Error& e) {
        throw Error(std::string(e.what()) + where);
      }
    }
    require(have_space, "filtration text has no space header");
    return f;
  }

 private:
  ProbabilitySpace space_;
  int r_max_ = 8;
  std::vector<RAtom> atoms_;
  std::vector<RWaySplit> splits_;
};

namespace gen {

// `depth` r-way splits of random leaves into random quantile pieces, r uniform in [2, r_hi]
inline RWayFiltration random_rway(const ProbabilitySpace& space, int depth, int r_hi, Rng& rng) {
  require(!space.is_discrete(), "random r-way filtrations are generated on continuous spaces");
  RWayFiltration f(space, std::max(8, r_hi));
  for (int n = 0; n < depth; ++n) {
    auto lv = f.leaves();
    AtomId id = lv[rng.index(lv.size())];
    int r = 2 + static_cast<int>(rng.index(static_cast<std::size_t>(r_hi - 1)));
    std::vector<double> u;
    for (int k = 0; k < r - 1; ++k) u.push_back(rng.uniform(0.02, 0.98));
    std::sort(u.begin(), u.end());
    std::vector<Cut> cuts;
    double last = -1.0;
    for (double v : u) {
      double x = space.quantile(f.atom(id).support, v);
      if (x <= last) continue;
      cuts.push_back(Cut::at(x));
      last = x;
    }
    if (cuts.empty()) cuts.push_back(Cut::at(space.quantile(f.atom(id).support, 0.5)));
    f.split(id, cuts);
  }
  return f;
}

// splits the largest leaf (leftmost on ties) `depth` times into pieces with the given fractions
inline RWayFiltration proportional_rway(const ProbabilitySpace& space, int depth, const std::vector<double>& fractions) {
  require(fractions.size() >= 2, "need at least two fractions");
  double tot = 0.0;
  for (double v : fractions) {
    require(v > 0.0, "fractions must be positive");
    tot += v;
  }
  RWayFiltration f(space, std::max<int>(8, static_cast<int>(fractions.size())));
  for (int n = 0; n < depth; ++n) {
    AtomId pick = 0;
    double big = -1.0;
    for (auto id : f.leaves())
      if (f.atom(id).measure > big * (1.0 + 1e-12)) {
        big = f.atom(id).measure;
        pick = id;
      }
    std::vector<Cut> cuts;
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < fractions.size(); ++k) {
      acc += fractions[k] / tot;
      cuts.push_back(Cut::at(space.quantile(f.atom(pick).support, acc)));
    }
    f.split(pick, cuts);
  }
  return f;
}

}  // namespace gen

// d_1 = c2, d_{j+1} = d_j^2 / (1 + d_j); the peeled atoms keep c1 and use c2' = d_{r-1}
inline double binarized_c2(double c2, int r) {
  require(r >= 2, "r must be at least 2");
  double d = c2;
  for (int j = 1; j < r - 1; ++j) d = d * d / (1.0 + d);
  return d;
}

struct Binarized {
  std::shared_ptr<BinaryFiltration> F;
  // binary step of (n, mu): peel[n-1][mu-1], mu = 1..r-1
  std::vector<std::vector<int>> peel;
  // binary atom for each r-way atom
  std::vector<AtomId> atom_map;
  // intermediate unions A_{n,mu} u ... u A_{n,r}, mu >= 2, with the r of their split
  std::vector<std::pair<AtomId, int>> intermediates;
};

// each r-way split becomes r-1 binary splits, taking away the smallest remaining child each time
inline Binarized binarize(const RWayFiltration& R) {
  Binarized out;
  out.F = std::make_shared<BinaryFiltration>(R.space());
  auto& F = *out.F;
  out.atom_map.assign(R.atoms().size(), kNoAtom);
  out.atom_map[0] = 0;
  for (const auto& s : R.splits()) {
    AtomId cur = out.atom_map[s.atom];
    ensure(cur != kNoAtom, "r-way atom without a binary image");
    int r = static_cast<int>(s.children.size());
    std::vector<int> steps;
    for (int mu = 1; mu < r; ++mu) {
      const auto& child = R.atom(s.children[static_cast<std::size_t>(mu - 1)]);
      auto [a, b] = F.split(cur, Cut::subset(child.support));
      steps.push_back(F.depth());
      AtomId peeled = F.atom(a).support == child.support ? a : b;
      AtomId rest = peeled == a ? b : a;
      ensure(F.atom(peeled).support == child.support, "peeled atom differs from the r-way child");
      out.atom_map[child.id] = peeled;
      if (mu == r - 1) {
        out.atom_map[s.children.back()] = rest;
        ensure(F.atom(rest).support == R.atom(s.children.back()).support, "remainder differs from the last child");
      } else {
        out.intermediates.push_back({rest, r});
      }
      cur = rest;
    }
    out.peel.push_back(std::move(steps));
  }
  return out;
}

// psi_{A_n} = sum_{mu, l} a_{mu,l} psi_{n,mu,l} over the binary steps of one r-way split
struct PsiAn {
  int n = 0;
  std::vector<std::vector<double>> a;  // a[mu-1][l]
  Eigen::VectorXd coords;              // composed function in leaf coordinates
};

// the binarized system together with its r-way origin
class NonBinarySystem {
 public:
  NonBinarySystem(const RWayFiltration& R, const LocalSpace& S, QuadOptions opt = {})
      : R_(R), bin_(binarize(R)), sys_(OrthoSystem::build(bin_.F, S, ChainPolicy::standard(), opt)) {}

  const RWayFiltration& rway() const { return R_; }
  const Binarized& binarized() const { return bin_; }
  const OrthoSystem& system() const { return sys_; }

  int r(int n) const { return static_cast<int>(R_.split_record(n).children.size()); }

  // psi indices of step (n, mu)
  std::pair<std::size_t, std::size_t> range(int n, int mu) const {
    return sys_.level_range(bin_.peel.at(static_cast<std::size_t>(n - 1)).at(static_cast<std::size_t>(mu - 1)));
  }

  double child_measure(int n, int mu) const {
    return R_.atom(R_.split_record(n).children.at(static_cast<std::size_t>(mu - 1))).measure;
  }

  PsiAn compose(int n, std::vector<std::vector<double>> a) const {
    require(n >= 1 && n <= R_.depth(), "no r-way split " + std::to_string(n));
    int rr = r(n);
    require(static_cast<int>(a.size()) == rr - 1, "need coefficients for mu = 1..r-1");
    PsiAn out;
    out.n = n;
    out.coords = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys_.dim()));
    double ss = 0.0;
    for (int mu = 1; mu < rr; ++mu) {
      auto [b, e] = range(n, mu);
      auto& am = a[static_cast<std::size_t>(mu - 1)];
      require(am.size() <= e - b, "too many coefficients at mu = " + std::to_string(mu));
      am.resize(e - b, 0.0);
      for (std::size_t l = 0; l < am.size(); ++l) {
        sys_.add(out.coords, b + l, am[l]);
        ss += am[l] * am[l];
      }
    }
    require(ss > 0.0, "psi_{A_n} coefficients vanish");
    double s = 1.0 / std::sqrt(ss);
    for (auto& am : a)
      for (auto& v : am) v *= s;
    out.coords *= s;
    out.a = std::move(a);
    return out;
  }

  // presets: uniform | two_scale | single(mu)
  PsiAn preset(int n, std::string_view name) const {
    int rr = r(n);
    std::vector<std::vector<double>> a(static_cast<std::size_t>(rr - 1));
    auto first_only = [&](int mu) {
      auto [b, e] = range(n, mu);
      require(e > b, "step mu = " + std::to_string(mu) + " added no functions");
      a[static_cast<std::size_t>(mu - 1)] = {1.0};
    };
    if (name == "uniform") {
      for (int mu = 1; mu < rr; ++mu) {
        auto [b, e] = range(n, mu);
        a[static_cast<std::size_t>(mu - 1)].assign(e - b, 1.0);
      }
    } else if (name == "two_scale") {
      require(rr >= 3, "two_scale needs r >= 3");
      first_only(1);
      first_only(2);
    } else if (name.substr(0, 7) == "single(" && name.back() == ')') {
      auto mu = text::to_int(name.substr(7, name.size() - 8));
      require(mu >= 1 && mu < rr, "single(mu) needs 1 <= mu <= r-1");
      first_only(static_cast<int>(mu));
    } else {
      throw Error("unknown psi_{A_n} preset '" + std::string(name) + "'");
    }
    return compose(n, std::move(a));
  }

  // coefficients from projecting h onto the functions of split n
  PsiAn projection(int n, const Eigen::VectorXd& h) const {
    int rr = r(n);
    std::vector<std::vector<double>> a(static_cast<std::size_t>(rr - 1));
    for (int mu = 1; mu < rr; ++mu) {
      auto [b, e] = range(n, mu);
      for (auto m = b; m < e; ++m) a[static_cast<std::size_t>(mu - 1)].push_back(sys_.dot(m, h));
    }
    return compose(n, std::move(a));
  }

  // sup |<psi, P_{n-1}-level functions>| and |sum a^2 - 1|
  double orthogonality_defect(const PsiAn& psi) const {
    auto [b, e] = range(psi.n, 1);
    double worst = 0.0;
    for (std::size_t m = 0; m < b; ++m) worst = std::max(worst, std::abs(sys_.dot(m, psi.coords)));
    (void)e;
    return worst;
  }

 private:
  RWayFiltration R_;
  Binarized bin_;
  OrthoSystem sys_;
};

inline double coefficient_norm_defect(const PsiAn& psi) {
  double ss = 0.0;
  for (const auto& am : psi.a)
    for (double v : am) ss += v * v;
  return std::abs(ss - 1.0);
}

// max over n, mu, nu of S_mu S_nu |A_{n,mu}|^{1/p-1/2} |A_{n,nu}|^{1/2-1/p}, S_mu = sum_l |a_{n,mu,l}|
inline double op_condition(const NonBinarySystem& nb, const std::vector<PsiAn>& psis, double p) {
  require(p >= 1.0, "p must lie in [1, inf]");
  double e = (std::isinf(p) ? 0.0 : 1.0 / p) - 0.5;
  double worst = 0.0;
  for (const auto& psi : psis) {
    std::size_t r1 = psi.a.size();
    std::vector<double> S(r1), m(r1);
    for (std::size_t mu = 0; mu < r1; ++mu) {
      for (double v : psi.a[mu]) S[mu] += std::abs(v);
      m[mu] = nb.child_measure(psi.n, static_cast<int>(mu) + 1);
    }
    for (std::size_t mu = 0; mu < r1; ++mu)
      for (std::size_t nu = 0; nu < r1; ++nu)
        worst = std::max(worst, S[mu] * S[nu] * std::pow(m[mu], e) * std::pow(m[nu], -e));
  }
  return worst;
}

inline double conjugate_exponent(double p) {
  require(p >= 1.0, "p must lie in [1, inf]");
  if (p == 1.0) return INFINITY;
  if (std::isinf(p)) return 1.0;
  return p / (p - 1.0);
}

// ||psi||_p ||psi||_{p'}
inline double norm_product_check(const NonBinarySystem& nb, const PsiAn& psi, double p) {
  const auto& lay = nb.system().layout();
  return lay.lp_norm(psi.coords, p) * lay.lp_norm(psi.coords, conjugate_exponent(p));
}

// per child kappa: sup_{A_{n,kappa}} |psi| * |A_{n,kappa}| / |A_{n,1}|^{1/2}
inline std::vector<double> sufficient_pointwise_check(const NonBinarySystem& nb, const PsiAn& psi) {
  const auto& lay = nb.system().layout();
  const auto& rec = nb.rway().split_record(psi.n);
  double m1 = nb.child_measure(psi.n, 1);
  std::vector<double> out;
  for (auto c : rec.children) {
    AtomId b = nb.binarized().atom_map[c];
    out.push_back(lay.lp_norm_on(psi.coords, INFINITY, b) * nb.rway().atom(c).measure / std::sqrt(m1));
  }
  return out;
}

// the same profile ratio for a function given by its values on children of measures m (ascending)
inline std::vector<double> pointwise_profile(const std::vector<double>& sup_on_child, const std::vector<double>& m) {
  require(sup_on_child.size() == m.size() && !m.empty(), "one value per child");
  std::vector<double> out;
  for (std::size_t k = 0; k < m.size(); ++k) out.push_back(sup_on_child[k] * m[k] / std::sqrt(m.front()));
  return out;
}

// sign-maximized ||sum_k eps_k <f,phi_k> phi_k||_p / ||f||_p over the family {S_0 basis} u {psi_{A_n}};
// test functions are random, plus sign(psi)|psi|^{p'-1} for each psi_{A_n}
inline ConstantReport nonbinary_uncond_sweep(const NonBinarySystem& nb, const std::vector<PsiAn>& psis, double p,
                                             const UncondOptions& opt = {}) {
  require(p > 1.0 && std::isfinite(p), "p must lie in (1, inf)");
  const auto& sys = nb.system();
  const auto& lay = sys.layout();
  auto [b0, e0] = sys.level_range(0);
  double pp = conjugate_exponent(p);

  std::vector<Eigen::VectorXd> tests;
  for (int t = 0; t < opt.trials; ++t) {
    Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(t)));
    tests.push_back(random_unit_function(sys, p, rng));
  }
  for (const auto& psi : psis) {
    // dual witness, projected onto S_N (exact for piecewise constants)
    PiecewiseFunction ps{sys.layout_ptr(), psi.coords};
    Function w{[ps, pp](double x) {
                 double v = ps(x);
                 return (v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0)) * std::pow(std::abs(v), pp - 1.0);
               },
               lay.local().poly_degree() == 0 ? 0 : -1,
               {}};
    Eigen::VectorXd c = lay.project(w);
    tests.push_back(c / lay.lp_norm(c, p));
  }

  struct Trial {
    double value = 0.0;
    std::vector<signed char> signs;
  };
  auto results = parallel_map(tests.size(), opt.jobs, [&](std::size_t t) {
    const auto& f = tests[t];
    std::vector<Eigen::VectorXd> terms;
    Eigen::VectorXd t0 = Eigen::VectorXd::Zero(f.size());
    for (auto m = b0; m < e0; ++m) sys.add(t0, m, sys.dot(m, f));
    terms.push_back(t0);
    for (const auto& psi : psis) terms.push_back(psi.coords.dot(f) * psi.coords);
    TermSums ts(lay, terms);
    double fn = lay.lp_norm(f, p);
    Rng rng(derive_seed(opt.seed ^ 0x5bd1e995ULL, t));
    auto r = detail::search_signs(terms.size(), opt.mode, opt.exhaustive_limit, opt.random_patterns, rng,
                                  [&](const std::vector<signed char>& w) { return ts.norm(w, p) / fn; });
    return Trial{r.value, r.signs};
  });
  ConstantReport rep;
  rep.trials = static_cast<int>(tests.size());
  for (std::size_t t = 0; t < results.size(); ++t)
    if (t == 0 || results[t].value > rep.constant) {
      rep.constant = results[t].value;
      rep.trial = t;
      rep.witness_f.assign(tests[t].data(), tests[t].data() + tests[t].size());
      rep.witness_signs = detail::to_ints(results[t].signs);
    }
  rep.note = "trials beyond " + std::to_string(opt.trials) + " are dual witnesses of the psi_{A_n}";
  return rep;
}

// the democracy index mu_0 of psi_{A_n}: largest coefficient mass S_mu, smallest mu on ties
inline int dominant_index(const PsiAn& psi) {
  int best = 1;
  double bs = -1.0;
  for (std::size_t mu = 0; mu < psi.a.size(); ++mu) {
    double s = 0.0;
    for (double v : psi.a[mu]) s += std::abs(v);
    if (s > bs * (1.0 + 1e-12)) {
      bs = s;
      best = static_cast<int>(mu) + 1;
    }
  }
  return best;
}

// one split of [0,1] into (eps, sqrt(eps), rest) with half the weight on each of the two small parts
inline NonBinarySystem two_scale_system(double eps) {
  require(eps > 0.0 && eps + std::sqrt(eps) < 1.0, "eps out of range");
  auto sp = ProbabilitySpace::parse("interval:0,1");
  RWayFiltration R(sp);
  R.split(0, {Cut::at(eps), Cut::at(eps + std::sqrt(eps))});
  return NonBinarySystem(R, LocalSpace::indicator());
}

// one split of [0,1] into thirds perturbed by eps/3
inline NonBinarySystem comparable_system(double eps) {
  require(eps >= 0.0 && eps < 1.0, "eps out of range");
  auto sp = ProbabilitySpace::parse("interval:0,1");
  RWayFiltration R(sp);
  double a = 1.0 / 3.0 - eps / 3.0;
  R.split(0, {Cut::at(a), Cut::at(a + 1.0 / 3.0)});
  return NonBinarySystem(R, LocalSpace::indicator());
}

}  // namespace locos
