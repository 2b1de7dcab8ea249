#pragma once

#include <cmath>
#include <utility>

namespace wchj {

struct SearchResult {
  double arg;
  double value;
};

/// Golden-section minimization of f on [a, b] with a fixed iteration count.
/// Returns the best point evaluated, so the result is never worse than the
/// first interior probe. Deterministic for a deterministic f.
template <class F>
SearchResult golden_min(F&& f, double a, double b, int iterations) {
  constexpr double kInvPhi = 0.61803398874989484820;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  SearchResult best = fc <= fd ? SearchResult{c, fc} : SearchResult{d, fd};
  for (int it = 0; it < iterations; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
      if (fc < best.value) best = {c, fc};
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
      if (fd < best.value) best = {d, fd};
    }
  }
  return best;
}

template <class F>
SearchResult golden_max(F&& f, double a, double b, int iterations) {
  SearchResult r = golden_min([&](double x) { return -f(x); }, a, b, iterations);
  return {r.arg, -r.value};
}

}  // namespace wchj
