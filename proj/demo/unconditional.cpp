// Unconditionality constants of piecewise-constant and piecewise-linear systems
// on one random filtration of [0,1], for a few exponents.
#include <cstdio>

#include "locos/locos.hpp"

using namespace locos;

int main() {
  Rng rng(2024);
  auto F = std::make_shared<BinaryFiltration>(gen::random(ProbabilitySpace::parse("interval:0,1"), 6, rng));
  std::printf("%-14s %6s %10s\n", "local", "p", "constant");
  for (const char* S : {"indicator", "polynomial:1"}) {
    auto sys = OrthoSystem::build(F, LocalSpace::parse(S));
    for (double p : {1.5, 2.0, 3.0, 4.0}) {
      UncondOptions o;
      o.trials = 8;
      o.seed = 7;
      auto r = unconditionality_constant(sys, p, o);
      std::printf("%-14s %6.2f %10.5f\n", S, p, r.constant);
    }
  }
}
