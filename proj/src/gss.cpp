#include "lossscape/optim.hpp"

#include <cmath>
#include <limits>

namespace lossscape {

namespace {

const double kInvPhi = (std::sqrt(5.0) - 1.0) / 2.0;

// Non-finite values compare as +inf so overshooting probes read as increases.
double guarded(const std::function<double(double)>& f, double u) {
  const double v = f(u);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

void GssConfig::validate() const {
  if (!(initial_step > 0.0) || !(bracket_growth > 1.0) || max_bracket_steps <= 0 || !(tolerance > 0.0) ||
      max_iterations <= 0) {
    throw Error("invalid golden section search configuration");
  }
}

GssResult golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                                  const GssConfig& config) {
  config.validate();
  if (!(hi > lo)) throw Error("golden section bracket must have hi > lo");
  GssResult r;
  r.bracket_lo = lo;
  r.bracket_hi = hi;
  const double target = config.tolerance * (hi - lo);

  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = guarded(f, x1);
  double f2 = guarded(f, x2);
  r.evaluations += 2;

  for (int it = 0; it < config.max_iterations && (b - a) > target; ++it) {
    // Keep the sub-interval around the lower interior point; the other interior
    // point becomes one of the new interior points.
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = guarded(f, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = guarded(f, x2);
    }
    ++r.evaluations;
    r.widths.push_back(b - a);
  }
  r.step = 0.5 * (a + b);
  return r;
}

GssResult golden_section_search(const std::function<double(double)>& f, const GssConfig& config,
                                std::optional<double> f0) {
  config.validate();
  int evaluations = 0;
  const double f_zero = f0 ? *f0 : (++evaluations, guarded(f, 0.0));
  auto bracketed = [&](double lo, double hi) {
    GssResult r = golden_section_minimize(f, lo, hi, config);
    r.evaluations += evaluations;
    return r;
  };

  double u = config.initial_step;
  double fu = guarded(f, u);
  ++evaluations;

  if (!(fu < f_zero)) {
    // The first probe overshoots: shrink it until it improves on u = 0.
    for (int k = 0; k < config.max_bracket_steps; ++k) {
      const double hi = u;
      u /= config.bracket_growth;
      fu = guarded(f, u);
      ++evaluations;
      if (fu < f_zero) return bracketed(0.0, hi);
    }
    GssResult r;
    r.step = u;
    r.bracket_failed = true;
    r.evaluations = evaluations;
    r.bracket_lo = 0.0;
    r.bracket_hi = u;
    return r;
  }

  double prev = 0.0;  // point before `best`
  double best = u;
  double f_best = fu;
  for (int k = 0; k < config.max_bracket_steps; ++k) {
    u *= config.bracket_growth;
    fu = guarded(f, u);
    ++evaluations;
    if (fu > f_best) return bracketed(prev, u);
    prev = best;
    best = u;
    f_best = fu;
  }
  GssResult r;
  r.step = best;
  r.bracket_failed = true;
  r.evaluations = evaluations;
  r.bracket_lo = prev;
  r.bracket_hi = best;
  return r;
}

}  // namespace lossscape
