#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "locos/error.hpp"
#include "locos/orthosystem.hpp"

namespace locos {

inline constexpr int kNever = std::numeric_limits<int>::max();

// A stopping time resolved on leaves: values in {-1, 0, ..., N} or kNever.
struct StoppingTime {
  std::vector<int> by_leaf;

  static StoppingTime constant(const Layout& lay, int t) { return {std::vector<int>(lay.num_leaves(), t)}; }
};

// {T <= n} must be a union of atoms of level n for every n (level -1 counts as the trivial algebra)
inline bool is_stopping_time(const Layout& lay, const StoppingTime& T) {
  const auto& F = lay.filtration();
  auto uniform_on = [&](std::size_t b, std::size_t e, int n) {
    bool first = T.by_leaf[b] <= n;
    for (auto l = b; l < e; ++l)
      if ((T.by_leaf[l] <= n) != first) return false;
    return true;
  };
  if (!uniform_on(0, lay.num_leaves(), -1)) return false;
  for (int n = 0; n <= F.depth(); ++n)
    for (auto id : F.atoms_at(n)) {
      auto [b, e] = lay.leaves_of(id);
      if (!uniform_on(b, e, n)) return false;
    }
  return true;
}

// g_T: P_{T} f leafwise, 0 where T = -1, f where T never stops
inline Eigen::VectorXd stopped_process(const OrthoSystem& sys, const Eigen::VectorXd& f, const StoppingTime& T) {
  const auto& lay = sys.layout();
  int N = sys.depth();
  std::vector<Eigen::VectorXd> g;
  for (int n = 0; n <= N; ++n) g.push_back(sys.level_projection(f, n));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(f.size());
  for (std::size_t l = 0; l < lay.num_leaves(); ++l) {
    const auto& L = lay.leaf(l);
    int t = T.by_leaf[l];
    auto seg = [&](auto& v) { return v.segment(static_cast<Eigen::Index>(L.offset), L.dim); };
    if (t == kNever) seg(out) = f.segment(static_cast<Eigen::Index>(L.offset), L.dim);
    else if (t >= 0) seg(out) = seg(g[static_cast<std::size_t>(std::min(t, N))]);
  }
  return out;
}

// sup over {T >= n} of |P_{n,j} f - P_{n,j} g_T|
inline double stopping_identity_check(const OrthoSystem& sys, const Eigen::VectorXd& f, const StoppingTime& T,
                                      int n, int j) {
  const auto& lay = sys.layout();
  Eigen::VectorXd gT = stopped_process(sys, f, T);
  Eigen::VectorXd d = sys.chain_projection(f, n, j) - sys.chain_projection(gT, n, j);
  double worst = 0.0;
  for (std::size_t l = 0; l < lay.num_leaves(); ++l)
    if (T.by_leaf[l] >= n) worst = std::max(worst, lay.leaf_sup(d, l));
  return worst;
}

struct GundyParts {
  double lambda = 0.0;
  double c3 = 0.0;
  double scale = 1.0;  // f was multiplied by this to bring ||f||_1 to at most 1
  StoppingTime r, s, T;
  Eigen::VectorXd f, a, b, c, gT;
  std::vector<OrthoSystem::Step> steps;
  std::vector<Eigen::VectorXd> da, db, dc;
  std::vector<std::vector<double>> v;  // v_n per leaf, n = 0..N
  double residual = 0.0;               // max |a + b + c - f| over coordinates
  double difference_defect = 0.0;      // max |R_{m-1} db_m|, |R_{m-1} dc_m| over coordinates
  double sum_Ev = 0.0;                 // sum_n E v_n
  int r_outside_split = 0;             // levels n >= 1 where {r = n} is not inside A_n
};

// Stopping-time decomposition f = a + b + c for f in S_N at height lambda.
inline GundyParts decompose(const OrthoSystem& sys, const Eigen::VectorXd& f_in, double lambda, double c3) {
  require(lambda > 0.0, "lambda must be positive");
  require(c3 > 0.0, "c3 must be positive");
  require(f_in.size() == static_cast<Eigen::Index>(sys.dim()), "f is not an element of S_N");
  const auto& lay = sys.layout();
  const auto& F = sys.filtration();
  int N = sys.depth();
  std::size_t nl = lay.num_leaves();

  GundyParts P;
  P.lambda = lambda;
  P.c3 = c3;
  double n1 = lay.lp_norm(f_in, 1.0);
  P.scale = n1 > 1.0 ? 1.0 / n1 : 1.0;
  P.f = P.scale * f_in;
  P.steps = sys.steps();
  const auto& steps = P.steps;
  std::size_t K = steps.size();

  std::vector<Eigen::VectorXd> fk(K), dfk(K);
  {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(P.f.size());
    for (std::size_t k = 0; k < K; ++k) {
      Eigen::VectorXd d = Eigen::VectorXd::Zero(P.f.size());
      for (auto m = steps[k].first; m <= steps[k].last; ++m) sys.add(d, m, sys.dot(m, P.f));
      acc += d;
      fk[k] = acc;
      dfk[k] = std::move(d);
    }
  }
  // g_n = f at the last step of level n (or earlier if the level is empty)
  std::vector<Eigen::VectorXd> g(static_cast<std::size_t>(N) + 1);
  std::vector<std::vector<std::size_t>> I(static_cast<std::size_t>(N) + 1);
  for (std::size_t k = 0; k < K; ++k) I[static_cast<std::size_t>(steps[k].level)].push_back(k);
  {
    Eigen::VectorXd cur = Eigen::VectorXd::Zero(P.f.size());
    for (int n = 0; n <= N; ++n) {
      if (!I[static_cast<std::size_t>(n)].empty()) cur = fk[I[static_cast<std::size_t>(n)].back()];
      g[static_cast<std::size_t>(n)] = cur;
    }
  }

  // r: first n with E_n|g_n| > lambda/(4 c3) or max_{m in I_n} E_n|f_m| > lambda
  P.r = StoppingTime::constant(lay, kNever);
  P.v.assign(static_cast<std::size_t>(N) + 1, std::vector<double>(nl, 0.0));
  for (int n = 0; n <= N; ++n) {
    auto Eg = lay.level_means(lay.leaf_abs_integrals(g[static_cast<std::size_t>(n)]), n);
    std::vector<double> Ef(nl, -INFINITY), Edf(nl, 0.0);
    for (auto k : I[static_cast<std::size_t>(n)]) {
      auto e1 = lay.level_means(lay.leaf_abs_integrals(fk[k]), n);
      auto e2 = lay.level_means(lay.leaf_abs_integrals(dfk[k]), n);
      for (std::size_t l = 0; l < nl; ++l) {
        Ef[l] = std::max(Ef[l], e1[l]);
        Edf[l] += e2[l];
      }
    }
    for (std::size_t l = 0; l < nl; ++l) {
      if (P.r.by_leaf[l] != kNever) continue;
      if (Eg[l] > lambda / (4.0 * c3) || Ef[l] > lambda) {
        P.r.by_leaf[l] = n;
        P.v[static_cast<std::size_t>(n)][l] = Edf[l];
      }
    }
  }

  // s: first n >= -1 with sum_{l=-1}^{n} E_l v_{l+1} + sum_{l=0}^{n} v_l > lambda, where E_{-1} = E_0
  P.s = StoppingTime::constant(lay, kNever);
  {
    std::vector<double> acc(nl, 0.0);
    for (int n = -1; n <= N; ++n) {
      if (n + 1 <= N) {
        std::vector<double> vint(nl);
        for (std::size_t l = 0; l < nl; ++l)
          vint[l] = P.v[static_cast<std::size_t>(n + 1)][l] * F.atom(lay.leaf(l).atom).measure;
        auto Ev = lay.level_means(vint, std::max(n, 0));
        for (std::size_t l = 0; l < nl; ++l) acc[l] += Ev[l];
      }
      if (n >= 0)
        for (std::size_t l = 0; l < nl; ++l) acc[l] += P.v[static_cast<std::size_t>(n)][l];
      for (std::size_t l = 0; l < nl; ++l)
        if (P.s.by_leaf[l] == kNever && acc[l] > lambda) P.s.by_leaf[l] = n;
    }
  }
  P.T.by_leaf.resize(nl);
  for (std::size_t l = 0; l < nl; ++l) P.T.by_leaf[l] = std::min(P.r.by_leaf[l], P.s.by_leaf[l]);
  ensure(is_stopping_time(lay, P.r) && is_stopping_time(lay, P.s) && is_stopping_time(lay, P.T),
         "stopping times are not adapted to the filtration");

  for (int n = 1; n <= N; ++n) {
    auto [b, e] = lay.leaves_of(F.split_record(n).atom);
    for (std::size_t l = 0; l < nl; ++l)
      if (P.r.by_leaf[l] == n && (l < b || l >= e)) {
        ++P.r_outside_split;
        break;
      }
  }
  for (int n = 0; n <= N; ++n) {
    double s = 0.0;
    for (std::size_t l = 0; l < nl; ++l) s += P.v[static_cast<std::size_t>(n)][l] * F.atom(lay.leaf(l).atom).measure;
    P.sum_Ev += s;
  }

  P.gT = Eigen::VectorXd::Zero(P.f.size());
  for (std::size_t l = 0; l < nl; ++l) {
    const auto& L = lay.leaf(l);
    int t = P.T.by_leaf[l];
    auto seg = [&](auto& x) { return x.segment(static_cast<Eigen::Index>(L.offset), L.dim); };
    if (t == kNever) seg(P.gT) = seg(P.f);
    else if (t >= 0) seg(P.gT) = seg(g[static_cast<std::size_t>(t)]);
  }
  P.a = P.f - P.gT;

  P.b = Eigen::VectorXd::Zero(P.f.size());
  P.c = Eigen::VectorXd::Zero(P.f.size());
  Eigen::VectorXd Ra_prev = Eigen::VectorXd::Zero(P.f.size());
  for (std::size_t k = 0; k < K; ++k) {
    int n = steps[k].level;
    std::vector<char> gam(nl), del(nl);
    for (std::size_t l = 0; l < nl; ++l) {
      bool s_ok = P.s.by_leaf[l] >= n;
      gam[l] = P.r.by_leaf[l] > n && s_ok;
      del[l] = P.r.by_leaf[l] == n && s_ok;
    }
    Eigen::VectorXd gamma = lay.masked(dfk[k], gam);
    Eigen::VectorXd delta = lay.masked(dfk[k], del);
    std::ptrdiff_t prev = k == 0 ? -1 : static_cast<std::ptrdiff_t>(steps[k - 1].last);
    Eigen::VectorXd Rd = sys.project(delta, prev);
    Eigen::VectorXd dbk = delta - Rd;
    Eigen::VectorXd dck = gamma + Rd;
    P.difference_defect = std::max({P.difference_defect, sys.project(dbk, prev).cwiseAbs().maxCoeff(),
                                    sys.project(dck, prev).cwiseAbs().maxCoeff()});
    P.b += dbk;
    P.c += dck;
    P.db.push_back(std::move(dbk));
    P.dc.push_back(std::move(dck));
    Eigen::VectorXd Ra = sys.project(P.a, static_cast<std::ptrdiff_t>(steps[k].last));
    P.da.push_back(Ra - Ra_prev);
    Ra_prev = std::move(Ra);
  }
  P.residual = (P.a + P.b + P.c - P.f).cwiseAbs().maxCoeff();
  return P;
}

struct GundyReport {
  double norm_a = 0.0;
  double prob_da = 0.0;  // lambda * P(sup_m |da_m| != 0)
  double norm_db_sum = 0.0;
  double norm_c_1 = 0.0;
  double norm_c_inf_over_lambda = 0.0;
};

inline GundyReport verify_parts(const OrthoSystem& sys, const GundyParts& P) {
  const auto& lay = sys.layout();
  const auto& F = sys.filtration();
  GundyReport r;
  r.norm_a = lay.lp_norm(P.a, 1.0);
  double fsup = lay.lp_norm(P.f, INFINITY);
  double tol = 1e-9 * std::max(1.0, fsup);
  double mass = 0.0;
  for (std::size_t l = 0; l < lay.num_leaves(); ++l) {
    bool hit = false;
    for (const auto& d : P.da)
      if (lay.leaf_sup(d, l) > tol) {
        hit = true;
        break;
      }
    if (hit) mass += F.atom(lay.leaf(l).atom).measure;
  }
  r.prob_da = P.lambda * mass;
  for (const auto& d : P.db) r.norm_db_sum += lay.lp_norm(d, 1.0);
  r.norm_c_1 = lay.lp_norm(P.c, 1.0);
  r.norm_c_inf_over_lambda = lay.lp_norm(P.c, INFINITY) / P.lambda;
  return r;
}

}  // namespace locos
