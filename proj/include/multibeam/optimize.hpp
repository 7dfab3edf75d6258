#pragma once

#include <cmath>
#include <stdexcept>

namespace multibeam {

struct ScalarMaximum {
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
  // True when the maximizer sits within the tolerance of either end.
  bool at_boundary = false;
};

/// Golden-section search for the maximum of a unimodal f on [lo, hi],
/// stopping when the bracket is narrower than tol.
template <class F>
ScalarMaximum golden_section_maximize(F&& f, double lo, double hi, double tol) {
  if (!(hi > lo) || !(tol > 0.0)) {
    throw std::invalid_argument("golden_section_maximize: need lo < hi and tol > 0");
  }
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double lo0 = lo, hi0 = hi;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  int evaluations = 2;
  while (hi - lo > tol) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
    ++evaluations;
  }
  ScalarMaximum best;
  best.x = f1 >= f2 ? x1 : x2;
  best.value = f1 >= f2 ? f1 : f2;
  best.evaluations = evaluations;
  best.at_boundary = best.x - lo0 < tol || hi0 - best.x < tol;
  return best;
}

}  // namespace multibeam
