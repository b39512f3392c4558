#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "locos/filtration.hpp"
#include "locos/function.hpp"
#include "locos/quadrature.hpp"
#include "locos/support.hpp"

namespace locos {

// A function constant on the atoms of one level.
struct LevelFunction {
  std::shared_ptr<const BinaryFiltration> filtration;
  int level = 0;
  std::vector<double> by_atom;  // indexed by atom id, NaN off the level

  double on_atom(AtomId id) const { return by_atom.at(filtration->ancestor_at(id, level)); }
  double operator()(double x) const { return on_atom(filtration->locate(x)); }
};

// E_n f: the mean of f over each atom of level n
inline LevelFunction conditional_expectation(std::shared_ptr<const BinaryFiltration> F, const Function& f, int n,
                                             const QuadOptions& opt = {}) {
  LevelFunction out;
  out.level = n;
  out.by_atom.assign(F->atoms().size(), std::numeric_limits<double>::quiet_NaN());
  for (auto id : F->atoms_at(n)) {
    const auto& a = F->atom(id);
    out.by_atom[id] = integrate(F->space(), a.support, f, opt) / a.measure;
  }
  out.filtration = std::move(F);
  return out;
}

// sup over 0 <= n <= N of E_n|f|, constant on the atoms of level N
inline LevelFunction doob_maximal(std::shared_ptr<const BinaryFiltration> F, const Function& f, int N,
                                  const QuadOptions& opt = {}) {
  require(N >= 0 && N <= F->depth(), "level out of range");
  std::vector<double> abs_int(F->atoms().size(), 0.0);
  // |f| integrated on the level-N atoms, then summed up the tree
  for (auto id : F->atoms_at(N))
    abs_int[id] = abs_power_integral(F->space(), F->atom(id).support, f.eval, 1.0, f.degree, f.breakpoints, opt);
  for (int n = N; n >= 1; --n) {
    const auto& r = F->split_record(n);
    abs_int[r.atom] = abs_int[r.small] + abs_int[r.large];
  }
  LevelFunction out;
  out.level = N;
  out.by_atom.assign(F->atoms().size(), std::numeric_limits<double>::quiet_NaN());
  for (auto id : F->atoms_at(N)) {
    double best = 0.0;
    for (int n = 0; n <= N; ++n) {
      AtomId a = F->ancestor_at(id, n);
      best = std::max(best, abs_int[a] / F->atom(a).measure);
    }
    out.by_atom[id] = best;
  }
  out.filtration = std::move(F);
  return out;
}

}  // namespace locos
