#pragma once

// Globally adaptive Gauss-Kronrod (G10/K21) integration of complex-valued
// integrands, with endpoint-singularity and infinite-range substitutions.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "toa/error.hpp"
#include "toa/numerics/summation.hpp"

namespace toa {

using Complex = std::complex<double>;

/// Description of a one-dimensional integral over [lower, upper].
///
/// Either endpoint may be infinite. `singularity_exponent` declares an
/// integrable power-law behaviour (x - lower)^alpha at the lower endpoint,
/// alpha > -1, which is removed by the substitution x = lower + L r^{1/(1+alpha)}.
/// `oscillation_rate` is the largest phase rate (radians per unit x) of the
/// integrand; the initial subdivision keeps each panel under half a period.
struct QuadratureSpec {
  std::function<Complex(double)> integrand;
  double lower = 0.0;
  double upper = 1.0;
  double rel_tol = 1e-8;
  double abs_tol = 0.0;
  double oscillation_rate = 0.0;
  double singularity_exponent = 0.0;
  /// Length scale for the map of infinite ranges onto finite ones.
  double scale = 1.0;
  /// Split point for doubly infinite ranges.
  double center = 0.0;
  int max_panels = 4000;
};

struct QuadratureResult {
  Complex value{0.0, 0.0};
  double error = 0.0;
  bool converged = true;
  long evaluations = 0;
  int panels = 0;
};

namespace detail {

// QUADPACK qk21 abscissae and weights; Gauss nodes are the odd entries.
inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Panel {
  double a;
  double b;
  Complex value;
  double error;
};

// QUADPACK error heuristic applied to one real component.
inline double qk_error(double resk, double resg, double resabs, double resasc,
                       double half) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr double uflow = std::numeric_limits<double>::min();
  double err = std::abs((resk - resg) * half);
  resabs *= std::abs(half);
  resasc *= std::abs(half);
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  if (resabs > uflow / (50.0 * eps)) err = std::max(eps * 50.0 * resabs, err);
  return err;
}

template <class F>
Panel gauss_kronrod21(const F& f, double a, double b, long& evals) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  std::array<Complex, 21> fv;
  fv[10] = f(center);
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kXgk[j];
    fv[j] = f(center - dx);
    fv[20 - j] = f(center + dx);
  }
  evals += 21;

  Complex resk = fv[10] * kWgk[10];
  Complex resg{0.0, 0.0};
  for (int j = 0; j < 10; ++j) {
    const Complex pair = fv[j] + fv[20 - j];
    resk += kWgk[j] * pair;
    if (j % 2 == 1) resg += kWg[j / 2] * pair;
  }
  const Complex mean = 0.5 * resk;
  double abs_re = kWgk[10] * std::abs(fv[10].real());
  double abs_im = kWgk[10] * std::abs(fv[10].imag());
  double asc_re = kWgk[10] * std::abs(fv[10].real() - mean.real());
  double asc_im = kWgk[10] * std::abs(fv[10].imag() - mean.imag());
  for (int j = 0; j < 10; ++j) {
    for (int side : {j, 20 - j}) {
      abs_re += kWgk[j] * std::abs(fv[side].real());
      abs_im += kWgk[j] * std::abs(fv[side].imag());
      asc_re += kWgk[j] * std::abs(fv[side].real() - mean.real());
      asc_im += kWgk[j] * std::abs(fv[side].imag() - mean.imag());
    }
  }
  const double err_re = qk_error(resk.real(), resg.real(), abs_re, asc_re, half);
  const double err_im = qk_error(resk.imag(), resg.imag(), abs_im, asc_im, half);
  return {a, b, resk * half, std::hypot(err_re, err_im)};
}

struct PanelOrder {
  bool operator()(const Panel& x, const Panel& y) const { return x.error < y.error; }
};

// Adaptive bisection on a finite interval of an already-regular integrand.
template <class F>
QuadratureResult integrate_finite(const F& f, double a, double b, int initial,
                                  double rel_tol, double abs_tol, int max_panels) {
  QuadratureResult out;
  std::priority_queue<Panel, std::vector<Panel>, PanelOrder> heap;
  initial = std::clamp(initial, 1, std::max(1, max_panels / 2));
  const double width = (b - a) / initial;
  for (int i = 0; i < initial; ++i) {
    const double lo = a + i * width;
    const double hi = (i + 1 == initial) ? b : a + (i + 1) * width;
    heap.push(gauss_kronrod21(f, lo, hi, out.evaluations));
  }

  auto totals = [&heap]() {
    // Deterministic order: sort copies by left endpoint.
    std::vector<Panel> all;
    auto copy = heap;
    while (!copy.empty()) {
      all.push_back(copy.top());
      copy.pop();
    }
    std::sort(all.begin(), all.end(),
              [](const Panel& x, const Panel& y) { return x.a < y.a; });
    ComplexCompensatedSum v;
    CompensatedSum e;
    for (const auto& p : all) {
      v += p.value;
      e += p.error;
    }
    return std::pair{v.value(), e.value()};
  };

  // Running totals; recomputed exactly at the end.
  Complex value{0.0, 0.0};
  double error = 0.0;
  {
    auto [v, e] = totals();
    value = v;
    error = e;
  }
  while (error > std::max(abs_tol, rel_tol * std::abs(value))) {
    if (static_cast<int>(heap.size()) >= max_panels) break;
    const Panel worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // interval exhausted
    heap.pop();
    const Panel left = gauss_kronrod21(f, worst.a, mid, out.evaluations);
    const Panel right = gauss_kronrod21(f, mid, worst.b, out.evaluations);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  auto [v, e] = totals();
  out.value = v;
  out.error = e;
  out.panels = static_cast<int>(heap.size());
  out.converged = e <= std::max(abs_tol, rel_tol * std::abs(v));
  return out;
}

}  // namespace detail

/// Integrate `spec` to the requested tolerance. Never throws on
/// non-convergence: the result carries the best estimate, the achieved error
/// and `converged == false`.
inline QuadratureResult adaptive_integrate(const QuadratureSpec& spec) {
  if (!(spec.rel_tol > 0.0)) throw DomainError("adaptive_integrate: rel_tol must be > 0");
  if (!(spec.lower <= spec.upper))
    throw DomainError("adaptive_integrate: endpoints must be ordered");
  const double alpha = spec.singularity_exponent;
  if (!(alpha > -1.0)) throw DomainError("adaptive_integrate: singularity exponent must exceed -1");
  if (spec.lower == spec.upper) return {};

  const auto& f = spec.integrand;
  const bool lo_inf = std::isinf(spec.lower);
  const bool hi_inf = std::isinf(spec.upper);

  if (lo_inf && hi_inf) {
    QuadratureSpec left = spec, right = spec;
    left.upper = spec.center;
    right.lower = spec.center;
    left.singularity_exponent = right.singularity_exponent = 0.0;
    auto l = adaptive_integrate(left);
    auto r = adaptive_integrate(right);
    return {l.value + r.value, l.error + r.error, l.converged && r.converged,
            l.evaluations + r.evaluations, l.panels + r.panels};
  }
  if (lo_inf) {
    // Reflect x -> -x so the infinite end is on the right.
    QuadratureSpec flipped = spec;
    flipped.integrand = [&f](double x) { return f(-x); };
    flipped.lower = -spec.upper;
    flipped.upper = std::numeric_limits<double>::infinity();
    flipped.singularity_exponent = 0.0;
    return adaptive_integrate(flipped);
  }

  const double q = 1.0 / (1.0 + alpha);
  const double a = spec.lower;
  int initial = 1;

  if (hi_inf) {
    // x = a + L t/(1-t), then t = r^q for the endpoint singularity.
    const double L = spec.scale;
    auto g = [&f, a, L, q, alpha](double r) -> Complex {
      const double t = (alpha == 0.0) ? r : std::pow(r, q);
      const double dt = (alpha == 0.0) ? 1.0 : q * std::pow(r, q - 1.0);
      const double om = 1.0 - t;
      if (om <= 0.0) return {0.0, 0.0};
      const double x = a + L * t / om;
      const Complex v = f(x);
      if (v == Complex{0.0, 0.0}) return v;
      return v * (L / (om * om) * dt);
    };
    if (spec.oscillation_rate > 0.0)
      initial = static_cast<int>(std::ceil(spec.oscillation_rate * 4.0 * L / M_PI));
    return detail::integrate_finite(g, 0.0, 1.0, initial, spec.rel_tol, spec.abs_tol,
                                    spec.max_panels);
  }

  const double len = spec.upper - a;
  if (spec.oscillation_rate > 0.0)
    initial = static_cast<int>(std::ceil(spec.oscillation_rate * len / M_PI));
  if (alpha == 0.0)
    return detail::integrate_finite(f, a, spec.upper, initial, spec.rel_tol, spec.abs_tol,
                                    spec.max_panels);
  auto g = [&f, a, len, q](double r) -> Complex {
    return f(a + len * std::pow(r, q)) * (len * q * std::pow(r, q - 1.0));
  };
  return detail::integrate_finite(g, 0.0, 1.0, initial, spec.rel_tol, spec.abs_tol,
                                  spec.max_panels);
}

}  // namespace toa
