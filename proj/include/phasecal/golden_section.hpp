#pragma once

#include <cmath>
#include <utility>

namespace phasecal {

struct ScalarMinimum {
  double x;
  double value;
  int evaluations;
};

// Golden-section search for the minimum of a unimodal f on [lo, hi]. Stops
// once the bracket is narrower than `tolerance`, then returns the best of the
// final interior point and the two original end points, so a function that is
// monotone on the interval yields the end point exactly.
template <class F>
ScalarMinimum golden_section_minimize(F&& f, double lo, double hi, double tolerance,
                                      int max_iterations = 500) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double lo0 = lo;
  const double hi0 = hi;

  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  int evals = 2;

  for (int i = 0; i < max_iterations && (hi - lo) > tolerance; ++i) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
    ++evals;
  }

  ScalarMinimum best = fc <= fd ? ScalarMinimum{c, fc, 0} : ScalarMinimum{d, fd, 0};
  const double f_lo = f(lo0);
  const double f_hi = f(hi0);
  evals += 2;
  // Ties go to an end point the bracket has collapsed onto (flat, underflowed tails).
  if (f_lo < best.value || (lo == lo0 && f_lo <= best.value)) best = {lo0, f_lo, 0};
  if (f_hi < best.value || (hi == hi0 && f_hi <= best.value)) best = {hi0, f_hi, 0};
  best.evaluations = evals;
  return best;
}

}  // namespace phasecal
