#pragma once

// Reference integrator: iterated-bisection trapezoid with Richardson
// extrapolation. Shares nothing with the Gauss-Kronrod pipeline; singular and
// infinite ranges are handled by algebraic maps that make the integrand
// smooth at the ends.

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include "toa/error.hpp"

namespace toa::oracle {

using Complex = std::complex<double>;

struct RombergResult {
  Complex value;
  double error = 0.0;
  bool converged = false;
  int levels = 0;
  long evaluations = 0;
};

/// Romberg on [a, b]. The integrand must be finite at both ends.
template <class F>
RombergResult romberg(const F& f, double a, double b, double rel_tol, double abs_tol = 0.0,
                      int max_levels = 22, int min_levels = 6) {
  RombergResult r;
  const double len = b - a;
  std::vector<Complex> prev, cur;
  Complex trap = 0.5 * len * (f(a) + f(b));
  r.evaluations = 2;
  prev.push_back(trap);
  for (int n = 1; n <= max_levels; ++n) {
    const long m = 1L << (n - 1);
    const double h = len / static_cast<double>(2 * m);
    Complex mid = 0.0;
    for (long i = 0; i < m; ++i) mid += f(a + h * static_cast<double>(2 * i + 1));
    r.evaluations += m;
    trap = 0.5 * trap + h * mid;
    cur.assign(1, trap);
    double pow4 = 1.0;
    for (int j = 1; j <= n; ++j) {
      pow4 *= 4.0;
      cur.push_back(cur[j - 1] + (cur[j - 1] - prev[j - 1]) / (pow4 - 1.0));
    }
    const double err = std::abs(cur[n] - prev[n - 1]);
    r.value = cur[n];
    r.error = err;
    r.levels = n;
    prev.swap(cur);
    if (n >= min_levels && err <= std::max(abs_tol, rel_tol * std::abs(r.value))) {
      r.converged = true;
      break;
    }
  }
  const double floor = 1e-16 * std::abs(r.value);
  if (r.error < floor) r.error = floor;
  if (r.error == 0.0) r.error = std::numeric_limits<double>::denorm_min();
  return r;
}

/// Oracle integral description. `singularity_exponent` alpha declares
/// (x - lower)^alpha behaviour; `scale` is the decay length of a tail.
struct OracleSpec {
  std::function<Complex(double)> integrand;
  double lower = 0.0;
  double upper = 1.0;
  double singularity_exponent = 0.0;
  double scale = 1.0;
  double center = 0.0;
  double rel_tol = 1e-12;
  double abs_tol = 0.0;
  int max_levels = 22;
};

/// Power q of the map r -> r^q that turns (x-a)^alpha into a smooth function
/// of r: the smallest q with q(1+alpha) an integer >= 2.
inline double singular_map_power(double alpha) {
  if (alpha == 0.0) return 1.0;
  for (int q = 2; q <= 12; ++q) {
    const double e = q * (1.0 + alpha);
    if (e >= 2.0 - 1e-12 && std::abs(e - std::round(e)) < 1e-12) return q;
  }
  return 2.0 / (1.0 + alpha);
}

inline RombergResult oracle_integrate(const OracleSpec& spec) {
  if (!(spec.lower <= spec.upper)) throw DomainError("oracle_integrate: endpoints must be ordered");
  if (!(spec.singularity_exponent > -1.0))
    throw DomainError("oracle_integrate: singularity exponent must exceed -1");
  const auto& f = spec.integrand;
  const bool lo_inf = std::isinf(spec.lower), hi_inf = std::isinf(spec.upper);
  if (lo_inf && hi_inf) {
    OracleSpec l = spec, r = spec;
    l.upper = r.lower = spec.center;
    l.singularity_exponent = r.singularity_exponent = 0.0;
    const auto a = oracle_integrate(l), b = oracle_integrate(r);
    return {a.value + b.value, a.error + b.error, a.converged && b.converged,
            std::max(a.levels, b.levels), a.evaluations + b.evaluations};
  }
  if (lo_inf) {
    OracleSpec g = spec;
    g.integrand = [f](double x) { return f(-x); };
    g.lower = -spec.upper;
    g.upper = std::numeric_limits<double>::infinity();
    g.singularity_exponent = 0.0;
    return oracle_integrate(g);
  }
  const double q = singular_map_power(spec.singularity_exponent);
  const double a = spec.lower;
  if (hi_inf) {
    const double L = spec.scale;
    auto g = [&](double r) -> Complex {
      if (r <= 0.0 && q > 1.0) return 0.0;
      const double t = std::pow(r, q);
      const double om = 1.0 - t;
      if (om <= 0.0) return 0.0;
      const Complex v = f(a + L * t / om);
      if (v == Complex{0.0, 0.0}) return v;
      return v * (L * q * std::pow(r, q - 1.0) / (om * om));
    };
    return romberg(g, 0.0, 1.0, spec.rel_tol, spec.abs_tol, spec.max_levels);
  }
  const double len = spec.upper - a;
  if (q == 1.0) return romberg(f, a, spec.upper, spec.rel_tol, spec.abs_tol, spec.max_levels);
  auto g = [&](double r) -> Complex {
    if (r <= 0.0) return 0.0;
    return f(a + len * std::pow(r, q)) * (len * q * std::pow(r, q - 1.0));
  };
  return romberg(g, 0.0, 1.0, spec.rel_tol, spec.abs_tol, spec.max_levels);
}

}  // namespace toa::oracle
