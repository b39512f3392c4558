#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "locos/error.hpp"
#include "locos/filtration.hpp"
#include "locos/orthosystem.hpp"
#include "locos/parallel.hpp"
#include "locos/random.hpp"

namespace locos {

enum class SignMode { automatic, exhaustive, random, adversarial };

inline SignMode parse_sign_mode(std::string_view s) {
  if (s == "auto" || s.empty()) return SignMode::automatic;
  if (s == "exhaustive") return SignMode::exhaustive;
  if (s == "random") return SignMode::random;
  if (s == "adversarial") return SignMode::adversarial;
  throw Error("unknown sign mode '" + std::string(s) + "'");
}

struct ConstantReport {
  double constant = 0.0;
  int trials = 0;
  std::size_t trial = 0;                 // index of the witness trial
  std::vector<double> witness_f;         // leaf coordinates
  std::vector<int> witness_signs;        // one per martingale step
  std::vector<std::size_t> witness_set;  // Lambda or chosen terms
  std::string note;
};

// Sums of fixed coordinate vectors with weights in {-1, 0, 1}. Each leaf only sees the terms that
// do not vanish on it, and its contribution is cached by their weights.
class TermSums {
 public:
  TermSums(const Layout& lay, const std::vector<Eigen::VectorXd>& terms) : lay_(&lay), n_(terms.size()) {
    leaves_.resize(lay.num_leaves());
    for (std::size_t l = 0; l < lay.num_leaves(); ++l) {
      const auto& L = lay.leaf(l);
      auto& d = leaves_[l];
      for (std::size_t k = 0; k < terms.size(); ++k) {
        Eigen::VectorXd seg = terms[k].segment(static_cast<Eigen::Index>(L.offset), L.dim);
        if (seg.size() == 0 || seg.isZero(0.0)) continue;
        d.idx.push_back(k);
        d.local.push_back(std::move(seg));
      }
    }
  }

  std::size_t size() const { return n_; }
  const std::vector<std::size_t>& terms_on(std::size_t l) const { return leaves_[l].idx; }

  Eigen::VectorXd local_sum(std::size_t l, const std::vector<signed char>& w) const {
    const auto& d = leaves_[l];
    Eigen::VectorXd s = Eigen::VectorXd::Zero(lay_->leaf(l).dim);
    for (std::size_t i = 0; i < d.idx.size(); ++i)
      if (w[d.idx[i]] != 0) s += static_cast<double>(w[d.idx[i]]) * d.local[i];
    return s;
  }

  // integral of |sum_k w_k t_k|^p
  double power_integral(const std::vector<signed char>& w, double p) {
    double total = 0.0;
    for (std::size_t l = 0; l < leaves_.size(); ++l) {
      auto& d = leaves_[l];
      if (d.idx.empty()) continue;
      auto k = key(l, w);
      auto& memo = d.memo[p];
      auto it = memo.find(k);
      if (it == memo.end()) it = memo.emplace(k, lay_->power_local(local_sum(l, w), l, p)).first;
      total += it->second;
    }
    return total;
  }

  double norm(const std::vector<signed char>& w, double p) {
    if (std::isinf(p)) {
      double s = 0.0;
      for (std::size_t l = 0; l < leaves_.size(); ++l)
        if (!leaves_[l].idx.empty()) s = std::max(s, lay_->sup_local(local_sum(l, w), l));
      return s;
    }
    return std::pow(power_integral(w, p), 1.0 / p);
  }

  std::string key(std::size_t l, const std::vector<signed char>& w) const {
    const auto& d = leaves_[l];
    std::string k(d.idx.size(), '0');
    for (std::size_t i = 0; i < d.idx.size(); ++i) k[i] = static_cast<char>('1' + w[d.idx[i]]);
    return k;
  }

 private:
  struct LeafTerms {
    std::vector<std::size_t> idx;
    std::vector<Eigen::VectorXd> local;
    std::unordered_map<double, std::unordered_map<std::string, double>> memo;
  };
  const Layout* lay_;
  std::size_t n_;
  std::vector<LeafTerms> leaves_;
};

// Gaussian leaf coordinates scaled to ||f||_p = 1
inline Eigen::VectorXd random_unit_function(const OrthoSystem& sys, double p, Rng& rng) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(sys.dim()));
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = rng.normal();
  double nrm = sys.layout().lp_norm(c, p);
  ensure(nrm > 0.0, "random test function vanished");
  return c / nrm;
}

namespace detail {

inline std::vector<signed char> pattern_from_mask(std::uint64_t mask, std::size_t K) {
  // step 0 keeps sign +; flipping every sign changes nothing
  std::vector<signed char> w(K, 1);
  for (std::size_t k = 1; k < K; ++k) w[k] = ((mask >> (k - 1)) & 1) ? -1 : 1;
  return w;
}

inline std::vector<int> to_ints(const std::vector<signed char>& w) { return {w.begin(), w.end()}; }

struct SearchResult {
  double value = 0.0;
  std::vector<signed char> signs;
};

// max over sign patterns of `score`; exhaustive for small K, else random draws then coordinate ascent
template <class Score>
SearchResult search_signs(std::size_t K, SignMode mode, std::size_t exhaustive_limit, int random_patterns,
                          Rng& rng, Score&& score) {
  SearchResult best;
  auto consider = [&](const std::vector<signed char>& w) {
    double v = score(w);
    if (v > best.value || best.signs.empty()) best = {v, w};
    return v;
  };
  bool exhaustive = mode == SignMode::exhaustive || (mode == SignMode::automatic && K <= exhaustive_limit);
  if (exhaustive) {
    require(K <= 24, "exhaustive sign search is limited to 24 steps");
    std::uint64_t count = K == 0 ? 1 : (std::uint64_t{1} << (K - 1));
    for (std::uint64_t mask = 0; mask < count; ++mask) consider(pattern_from_mask(mask, K));
    return best;
  }
  consider(std::vector<signed char>(K, 1));
  if (mode != SignMode::adversarial)
    for (int t = 0; t < random_patterns; ++t) {
      std::vector<signed char> w(K, 1);
      for (std::size_t k = 1; k < K; ++k) w[k] = static_cast<signed char>(rng.sign());
      consider(w);
    }
  if (mode == SignMode::random) return best;
  // coordinate ascent from the best pattern so far
  auto w = best.signs;
  double cur = best.value;
  for (int pass = 0; pass < 32; ++pass) {
    bool moved = false;
    for (std::size_t k = 1; k < K; ++k) {
      w[k] = static_cast<signed char>(-w[k]);
      double v = consider(w);
      if (v > cur * (1.0 + 1e-14)) {
        cur = v;
        moved = true;
      } else {
        w[k] = static_cast<signed char>(-w[k]);
      }
    }
    if (!moved) break;
  }
  return best;
}

}  // namespace detail

struct UncondOptions {
  int trials = 20;
  std::uint64_t seed = 0;
  SignMode mode = SignMode::automatic;
  std::size_t exhaustive_limit = 12;
  int random_patterns = 1000;
  int jobs = 1;
};

// max over trials and sign patterns of ||sum_k eps_k df_k||_p / ||f||_p over the martingale steps
inline ConstantReport unconditionality_constant(const OrthoSystem& sys, double p, const UncondOptions& opt = {}) {
  require(p > 1.0 && std::isfinite(p), "p must lie in (1, inf)");
  require(opt.trials >= 1, "trials must be positive");
  struct Trial {
    double value = 0.0;
    Eigen::VectorXd f;
    std::vector<signed char> signs;
  };
  auto results = parallel_map(static_cast<std::size_t>(opt.trials), opt.jobs, [&](std::size_t t) {
    Rng rng(derive_seed(opt.seed, t));
    Trial tr;
    tr.f = random_unit_function(sys, p, rng);
    TermSums ts(sys.layout(), sys.differences(tr.f));
    std::vector<signed char> ones(ts.size(), 1);
    double base = ts.norm(ones, p);
    auto r = detail::search_signs(ts.size(), opt.mode, opt.exhaustive_limit, opt.random_patterns, rng,
                                  [&](const std::vector<signed char>& w) { return ts.norm(w, p) / base; });
    tr.value = r.value;
    tr.signs = r.signs;
    return tr;
  });
  ConstantReport rep;
  rep.trials = opt.trials;
  for (std::size_t t = 0; t < results.size(); ++t)
    if (t == 0 || results[t].value > rep.constant) {
      rep.constant = results[t].value;
      rep.trial = t;
      rep.witness_f.assign(results[t].f.data(), results[t].f.data() + results[t].f.size());
      rep.witness_signs = detail::to_ints(results[t].signs);
    }
  return rep;
}

// ||sum_k eps_k df_k||_p / ||f||_p for one f and one sign pattern over the steps
inline double signed_sum_ratio(const OrthoSystem& sys, const Eigen::VectorXd& f, const std::vector<int>& signs,
                               double p) {
  auto d = sys.differences(f);
  require(signs.size() == d.size(), "sign pattern length differs from the number of steps");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(f.size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    require(signs[k] == 1 || signs[k] == -1, "signs must be +1 or -1");
    g += signs[k] * d[k];
  }
  return sys.layout().lp_norm(g, p) / sys.layout().lp_norm(f, p);
}

// geometric grid of `n` points over [lo, hi]
inline std::vector<double> geometric_grid(double lo, double hi, int n) {
  require(lo > 0.0 && hi >= lo && n >= 1, "bad geometric grid");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = n == 1 ? lo : lo * std::pow(hi / lo, double(i) / (n - 1));
  return g;
}

inline std::vector<double> default_lambda_grid(double l1norm) { return geometric_grid(1e-3 * l1norm, 1e3 * l1norm, 64); }

// lambda P(sup_k |f~_k| > lambda) / ||f||_1, maximized over a fixed lambda grid, for one f and many sign
// patterns; the running sums f~_k are resolved leaf by leaf
class WeakType {
 public:
  WeakType(const OrthoSystem& sys, const Eigen::VectorXd& f, std::vector<double> grid = {})
      : lay_(&sys.layout()), sums_(sys.layout(), sys.differences(f)) {
    l1_ = lay_->lp_norm(f, 1.0);
    grid_ = grid.empty() ? (l1_ > 0 ? default_lambda_grid(l1_) : std::vector<double>{1.0}) : std::move(grid);
    for (double g : grid_) require(g > 0.0, "lambda grid must be positive");
    memo_.resize(lay_->num_leaves());
  }

  const std::vector<double>& grid() const { return grid_; }
  double l1() const { return l1_; }

  // distribution of sup_k |f~_k| on the grid
  std::vector<double> tail(const std::vector<signed char>& w) {
    std::vector<double> P(grid_.size(), 0.0);
    for (std::size_t l = 0; l < lay_->num_leaves(); ++l) {
      if (sums_.terms_on(l).empty()) continue;
      auto k = sums_.key(l, w);
      auto it = memo_[l].find(k);
      if (it == memo_[l].end()) it = memo_[l].emplace(k, leaf_tail(l, w)).first;
      for (std::size_t i = 0; i < grid_.size(); ++i) P[i] += it->second[i];
    }
    return P;
  }

  double ratio(const std::vector<signed char>& w) {
    if (l1_ == 0.0) return 0.0;
    auto P = tail(w);
    double best = 0.0;
    for (std::size_t i = 0; i < grid_.size(); ++i) best = std::max(best, grid_[i] * P[i]);
    return best / l1_;
  }

 private:
  std::vector<double> leaf_tail(std::size_t l, const std::vector<signed char>& w) const {
    const auto& idx = sums_.terms_on(l);
    std::vector<LocalFunction> partial;
    std::vector<signed char> run(w.size(), 0);
    for (auto k : idx) {
      run[k] = w[k];
      partial.push_back(lay_->local_function(sums_.local_sum(l, run), l));
    }
    auto h = [&](double x) {
      double m = 0.0;
      for (const auto& q : partial) m = std::max(m, std::abs(q(x)));
      return m;
    };
    std::vector<double> out(grid_.size(), 0.0);
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      out[i] = lay_->superlevel_local(h, l, grid_[i], true);
      if (out[i] == 0.0) break;  // the tail only shrinks along the grid
    }
    return out;
  }

  const Layout* lay_;
  TermSums sums_;
  double l1_ = 0.0;
  std::vector<double> grid_;
  std::vector<std::unordered_map<std::string, std::vector<double>>> memo_;
};

inline double weak_type_ratio(const OrthoSystem& sys, const Eigen::VectorXd& f, const std::vector<int>& signs,
                              const std::vector<double>& grid = {}) {
  WeakType wt(sys, f, grid);
  require(signs.size() == sys.steps().size(), "sign pattern length differs from the number of steps");
  std::vector<signed char> w(signs.begin(), signs.end());
  return wt.ratio(w);
}

struct WeakOptions {
  int trials = 20;
  std::uint64_t seed = 0;
  std::size_t exhaustive_limit = 10;
  int random_patterns = 256;
  int jobs = 1;
};

inline ConstantReport weak_type_sweep(const OrthoSystem& sys, const WeakOptions& opt = {}) {
  require(opt.trials >= 1, "trials must be positive");
  struct Trial {
    double value = 0.0;
    Eigen::VectorXd f;
    std::vector<signed char> signs;
  };
  auto results = parallel_map(static_cast<std::size_t>(opt.trials), opt.jobs, [&](std::size_t t) {
    Rng rng(derive_seed(opt.seed, t));
    Trial tr;
    tr.f = random_unit_function(sys, 1.0, rng);
    WeakType wt(sys, tr.f);
    auto r = detail::search_signs(sys.steps().size(), SignMode::automatic, opt.exhaustive_limit,
                                  opt.random_patterns, rng, [&](const std::vector<signed char>& w) { return wt.ratio(w); });
    tr.value = r.value;
    tr.signs = r.signs;
    return tr;
  });
  ConstantReport rep;
  rep.trials = opt.trials;
  for (std::size_t t = 0; t < results.size(); ++t)
    if (t == 0 || results[t].value > rep.constant) {
      rep.constant = results[t].value;
      rep.trial = t;
      rep.witness_f.assign(results[t].f.data(), results[t].f.data() + results[t].f.size());
      rep.witness_signs = detail::to_ints(results[t].signs);
    }
  return rep;
}

struct SquareSides {
  double lhs = 0.0;  // ||(sum |a_m psi_m|^2)^{1/2}||_p
  double rhs = 0.0;  // ||(sum |a_m|^2 1_{A'_m}/|A'_m|)^{1/2}||_p, with A'_m = Omega on level 0
};

inline AtomId small_atom_of(const OrthoSystem& sys, std::size_t m) {
  const auto& ps = sys.psi(m);
  return ps.level == 0 ? AtomId{0} : sys.filtration().split_record(ps.level).small;
}

inline SquareSides square_function_sides(const OrthoSystem& sys, const Eigen::VectorXd& a, double p) {
  require(p > 1.0 && std::isfinite(p), "p must lie in (1, inf)");
  require(static_cast<std::size_t>(a.size()) == sys.size(), "coefficient count differs from the system size");
  const auto& lay = sys.layout();
  const auto& F = sys.filtration();
  const auto& sp = lay.space();
  SquareSides out;
  for (std::size_t l = 0; l < lay.num_leaves(); ++l) {
    const auto& L = lay.leaf(l);
    const auto& sup = F.atom(L.atom).support;
    std::vector<LocalFunction> parts;
    std::vector<double> weights;
    double rhs2 = 0.0;
    for (std::size_t m = 0; m < sys.size(); ++m) {
      double am = a(static_cast<Eigen::Index>(m));
      if (am == 0.0) continue;
      const auto& ps = sys.psi(m);
      if (!F.is_ancestor_or_self(ps.atom, L.atom)) continue;
      Eigen::VectorXd cl = lay.leaf_coords(sys.full(m), l);
      if (!cl.isZero(0.0)) parts.push_back(lay.local_function(am * cl, l));
      AtomId s = small_atom_of(sys, m);
      if (F.is_ancestor_or_self(s, L.atom)) rhs2 += am * am / F.atom(s).measure;
    }
    out.rhs += std::pow(rhs2, p / 2.0) * F.atom(L.atom).measure;
    if (parts.empty()) continue;
    auto sq = [&](double x) {
      double s = 0.0;
      for (const auto& q : parts) {
        double v = q(x);
        s += v * v;
      }
      return std::pow(s, p / 2.0);
    };
    int deg = lay.local().poly_degree();
    if (deg == 0) {
      out.lhs += integrate(sp, sup, sq, 0);
    } else {
      auto nodes = make_nodes(sp, sup, -1);
      for (std::size_t i = 0; i < nodes.x.size(); ++i) out.lhs += nodes.w[i] * sq(nodes.x[i]);
    }
  }
  out.lhs = std::pow(out.lhs, 1.0 / p);
  out.rhs = std::pow(out.rhs, 1.0 / p);
  return out;
}

struct RatioRange {
  double low = std::numeric_limits<double>::infinity();
  double high = 0.0;
  int trials = 0;
};

// min and max of lhs/rhs over Gaussian coefficient vectors
inline RatioRange square_function_equivalence(const OrthoSystem& sys, double p, int trials, std::uint64_t seed,
                                              int jobs = 1) {
  auto ratios = parallel_map(static_cast<std::size_t>(trials), jobs, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    Eigen::VectorXd a(static_cast<Eigen::Index>(sys.size()));
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.normal();
    auto s = square_function_sides(sys, a, p);
    return s.lhs / s.rhs;
  });
  RatioRange r;
  r.trials = trials;
  for (double v : ratios) {
    r.low = std::min(r.low, v);
    r.high = std::max(r.high, v);
  }
  return r;
}

// ||sum_{m in Lambda} psi_m / ||psi_m||_p||_p / (#Lambda)^{1/p}
inline double democracy_ratio(const OrthoSystem& sys, double p, const std::vector<std::size_t>& Lambda) {
  require(!Lambda.empty(), "Lambda must be nonempty");
  require(p >= 1.0, "p must lie in [1, inf]");
  const auto& lay = sys.layout();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.dim()));
  std::vector<std::size_t> seen = Lambda;
  std::sort(seen.begin(), seen.end());
  require(std::adjacent_find(seen.begin(), seen.end()) == seen.end(), "Lambda has repeated indices");
  for (auto m : seen) {
    require(m < sys.size(), "index " + std::to_string(m) + " outside the system");
    Eigen::VectorXd v = sys.full(m);
    s += v / lay.lp_norm(v, p);
  }
  double denom = std::isinf(p) ? 1.0 : std::pow(static_cast<double>(Lambda.size()), 1.0 / p);
  return lay.lp_norm(s, p) / denom;
}

struct PsiNorm {
  double measured = 0.0;
  double predicted = 0.0;  // |A'_n|^{1/p - 1/2}; 1 on level 0
  double ratio = 0.0;
};

inline PsiNorm p_norm_of_psi(const OrthoSystem& sys, std::size_t m, double p) {
  require(m < sys.size(), "index outside the system");
  require(p >= 1.0, "p must lie in [1, inf]");
  PsiNorm r;
  r.measured = sys.layout().lp_norm(sys.full(m), p);
  double e = (std::isinf(p) ? 0.0 : 1.0 / p) - 0.5;
  r.predicted = sys.psi(m).level == 0 ? 1.0 : std::pow(sys.filtration().atom(small_atom_of(sys, m)).measure, e);
  r.ratio = r.measured / r.predicted;
  return r;
}

struct GreedyResult {
  double greedy_error = 0.0;
  double best_error = 0.0;
  double ratio = 0.0;
  bool exhaustive = true;
  std::string best_kind = "exact";  // exact | lower_bound | upper_bound
  std::vector<std::size_t> greedy_set;
  std::vector<std::size_t> best_set;
};

// greedy m-term approximation (largest ||<f,psi>psi||_p first) against the best m-term error
inline GreedyResult greedy_vs_best(const OrthoSystem& sys, const Eigen::VectorXd& f, std::size_t m, double p,
                                   std::size_t exhaustive_limit = 16) {
  std::size_t M = sys.size();
  require(m <= M, "m exceeds the system size");
  require(p >= 1.0 && std::isfinite(p), "p must lie in [1, inf)");
  const auto& lay = sys.layout();
  Eigen::VectorXd a = sys.coefficients(f);
  std::vector<Eigen::VectorXd> terms;
  std::vector<double> size(M);
  for (std::size_t k = 0; k < M; ++k) {
    terms.push_back(a(static_cast<Eigen::Index>(k)) * sys.full(k));
    size[k] = lay.lp_norm(terms.back(), p);
  }
  Eigen::VectorXd rest = f - sys.synthesize(a);  // zero for f in S_N
  bool has_rest = !rest.isZero(0.0);
  if (has_rest) terms.push_back(rest);
  TermSums ts(lay, terms);
  auto residual = [&](const std::vector<std::size_t>& chosen) {
    std::vector<signed char> w(terms.size(), 1);
    for (auto k : chosen) w[k] = 0;
    return ts.norm(w, p);
  };
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return size[x] > size[y]; });
  GreedyResult r;
  r.greedy_set.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(r.greedy_set.begin(), r.greedy_set.end());
  r.greedy_error = residual(r.greedy_set);

  if (M <= exhaustive_limit) {
    r.best_error = std::numeric_limits<double>::infinity();
    std::vector<char> sel(M, 0);
    std::fill(sel.begin(), sel.begin() + static_cast<std::ptrdiff_t>(m), 1);
    // lexicographic walk over all m-subsets
    do {
      std::vector<std::size_t> chosen;
      for (std::size_t k = 0; k < M; ++k)
        if (sel[k]) chosen.push_back(k);
      double e = residual(chosen);
      if (e < r.best_error) {
        r.best_error = e;
        r.best_set = chosen;
      }
    } while (std::prev_permutation(sel.begin(), sel.end()));
  } else {
    // largest |a_k| first is optimal at p = 2
    std::vector<std::size_t> o2(M);
    std::iota(o2.begin(), o2.end(), std::size_t{0});
    std::stable_sort(o2.begin(), o2.end(), [&](std::size_t x, std::size_t y) {
      return std::abs(a(static_cast<Eigen::Index>(x))) > std::abs(a(static_cast<Eigen::Index>(y)));
    });
    r.best_set.assign(o2.begin(), o2.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(r.best_set.begin(), r.best_set.end());
    r.exhaustive = false;
    if (p >= 2.0) {
      // ||g||_p >= ||g||_2 on a probability space, and the p = 2 error is minimal over subsets
      r.best_error = std::pow(ts.power_integral(
                                  [&] {
                                    std::vector<signed char> w(terms.size(), 1);
                                    for (auto k : r.best_set) w[k] = 0;
                                    return w;
                                  }(),
                                  2.0),
                              0.5);
      r.best_kind = "lower_bound";
    } else {
      r.best_error = residual(r.best_set);
      r.best_kind = "upper_bound";
    }
  }
  r.ratio = r.best_error > 0.0 ? r.greedy_error / r.best_error : (r.greedy_error > 0.0 ? INFINITY : 1.0);
  return r;
}

enum class Refinement { dyadic, adaptive };

inline Refinement parse_refinement(std::string_view s) {
  if (s == "dyadic") return Refinement::dyadic;
  if (s == "adaptive") return Refinement::adaptive;
  throw Error("unknown refinement policy '" + std::string(s) + "'");
}

struct DensityPoint {
  int level = 0;     // refinement round
  int splits = 0;    // atoms split so far
  double error = 0.0;
};

// per-leaf L^p error of the local projection of 1_A onto S
inline double indicator_leaf_error_power(const LocalSpace& S, const ProbabilitySpace& space, const Support& leaf,
                                         const Support& A, double p, const QuadOptions& opt) {
  Support inA = leaf.intersect(A);
  double mA = space.measure(inA);
  auto ab = atom_basis(S, space, leaf);
  int deg = S.poly_degree();
  std::vector<double> br;
  if (!space.is_discrete())
    for (const auto& iv : A.segments()) {
      br.push_back(iv.lo);
      br.push_back(iv.hi);
    }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(ab.dim());
  for (int i = 0; i < ab.dim(); ++i) {
    auto e = from_orthonormal(S, ab, Eigen::VectorXd::Unit(ab.dim(), i));
    if (mA > 0.0) c(i) = integrate(space, inA, e, deg, {}, opt);
  }
  if (p == 2.0) return std::max(0.0, mA - c.squaredNorm());
  auto P = from_orthonormal(S, ab, c);
  auto r = [&](double x) {
    double ind = space.contains_point(A, x) ? 1.0 : 0.0;
    return ind - P(x);
  };
  return abs_power_integral(space, leaf, r, p, deg, br, opt);
}

// ||1_A - P_n 1_A||_p along a refinement of Omega; P_n acts atom by atom
inline std::vector<DensityPoint> density_experiment(const ProbabilitySpace& space, const LocalSpace& S,
                                                    const Support& A, Refinement policy, int levels, double p,
                                                    QuadOptions opt = {}) {
  require(p >= 1.0 && std::isfinite(p), "p must lie in [1, inf)");
  require(levels >= 0, "levels must be nonnegative");
  require(S.family() != Family::tensor, "tensor spaces need the 2-D system");
  require(A.is_discrete() == space.is_discrete(), "target set does not live in the space");
  BinaryFiltration F(space);
  std::unordered_map<AtomId, double> err;
  auto leaf_err = [&](AtomId id) {
    auto it = err.find(id);
    if (it == err.end()) it = err.emplace(id, indicator_leaf_error_power(S, space, F.atom(id).support, A, p, opt)).first;
    return it->second;
  };
  auto total = [&] {
    double s = 0.0;
    for (auto id : F.leaves()) s += leaf_err(id);
    return std::pow(s, 1.0 / p);
  };
  std::vector<DensityPoint> out;
  out.push_back({0, 0, total()});
  for (int L = 1; L <= levels; ++L) {
    if (policy == Refinement::dyadic) {
      auto gen = F.leaves();
      for (auto id : gen)
        if (gen::splittable(F, id)) F.split(id, gen::midpoint_cut(F, id));
    } else {
      AtomId pick = kNoAtom;
      double worst = 0.0;
      for (auto id : F.leaves())
        if (gen::splittable(F, id) && leaf_err(id) > worst) {
          worst = leaf_err(id);
          pick = id;
        }
      if (pick == kNoAtom) {
        if (out.back().error > 0.0) throw Error("degenerate refinement: no splittable atom carries error");
        break;
      }
      F.split(pick, gen::midpoint_cut(F, pick));
    }
    out.push_back({L, F.depth(), total()});
  }
  return out;
}

}  // namespace locos
