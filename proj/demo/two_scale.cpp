// Three-way splits: a child of measure eps next to one of measure sqrt(eps)
// against three children of comparable size.
#include <cstdio>

#include "locos/locos.hpp"

using namespace locos;

int main() {
  const double p = 4.0;
  std::printf("%8s %14s %14s %14s\n", "eps", "two_scale", "comparable", "op(p)=op(p')");
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
    auto ts = two_scale_system(eps);
    auto cm = comparable_system(eps);
    auto psi = ts.preset(1, "two_scale");
    double a = norm_product_check(ts, psi, p);
    double b = norm_product_check(cm, cm.preset(1, "uniform"), p);
    double gap = std::abs(op_condition(ts, {psi}, p) - op_condition(ts, {psi}, conjugate_exponent(p)));
    std::printf("%8.0e %14.6f %14.6f %14.1e\n", eps, a, b, gap);
  }
}
