// f = a + b + c on the eight-point space for a sweep of heights lambda
#include <cstdio>

#include "locos/locos.hpp"

using namespace locos;

int main() {
  auto pts = ProbabilitySpace::parse("points:0@1,1@2,2@1,3@3,4@1,5@2,6@1,7@4");
  auto F = std::make_shared<BinaryFiltration>(gen::dyadic(pts, 3));
  auto sys = OrthoSystem::build(F, LocalSpace::indicator());
  double c3 = std::max(1.0, 1.1 * measure_c3(sys, 100, 1).max_ratio);
  Rng rng(3);
  auto f = random_unit_function(sys, 1.0, rng);

  std::printf("c3 = %.4f\n", c3);
  std::printf("%7s %9s %9s %9s %9s %9s %9s\n", "lambda", "|a|_1", "l*P(da)", "sum|db|", "|c|_1", "|c|_inf/l", "resid");
  for (double lambda : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    auto P = decompose(sys, f, lambda, c3);
    auto r = verify_parts(sys, P);
    std::printf("%7.2f %9.4f %9.4f %9.4f %9.4f %9.4f %9.1e\n", lambda, r.norm_a, r.prob_da, r.norm_db_sum, r.norm_c_1,
                r.norm_c_inf_over_lambda, P.residual);
  }
}
