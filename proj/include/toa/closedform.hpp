#pragma once

// Analytic position-space expressions for the coherent and eigen states,
// used to cross-check the quadrature pipeline.
//
// Conventions: every amplitude here is Int dk psi(k) e^{ikx} with the
// analytic normalization of states.hpp. For a coherent state this coincides
// with to_position() of the unit-normalized state; for eigenstates it is
// sqrt(2 pi) times to_position() of the unnormalized eigenstate.

#include <cmath>
#include <complex>
#include <limits>
#include <optional>

#include "toa/error.hpp"
#include "toa/numerics/quadrature.hpp"
#include "toa/numerics/special.hpp"
#include "toa/states.hpp"

namespace toa {

struct TaylorCoefficients {
  int n = 0;
  Complex a;
  Complex b;
};

/// a_n = i^{-3/4+n/2} 2^{n/2-1} pi^{-3/4} Gamma(3/4+n/2)
/// b_n = i^n 2^{n-5/4} pi^{-3/4} Gamma(3/8+n/4)
/// b_n is the n-th x-derivative at x = 0, t = tau (in units of sqrt(m/Delta)),
/// a_n the coefficient of the large-t envelope.
inline TaylorCoefficients taylor_coeffs(int n) {
  if (n < 0) throw DomainError("taylor_coeffs: order must be >= 0");
  const double dn = static_cast<double>(n);
  TaylorCoefficients c;
  c.n = n;
  const double pi34 = std::pow(kPi, -0.75);
  c.a = std::polar(std::pow(2.0, dn / 2.0 - 1.0) * pi34 * std::tgamma(0.75 + dn / 2.0),
                   0.5 * kPi * (-0.75 + dn / 2.0));
  c.b = std::polar(std::pow(2.0, dn - 1.25) * pi34 * std::tgamma(0.375 + dn / 4.0),
                   0.5 * kPi * static_cast<double>(n % 4));
  return c;
}

/// n-th x-derivative at x = 0 of the o-sector amplitude (eps -> 0) at time t:
/// 2^{-5/8+3n/4} i^n pi^{-3/4} Gamma(3/4+n/2) (m/Delta)^{1/4+n/2} e^{z^2/4} D_p(z)
/// with z = i sqrt2 (t - tau)/Delta and p = -3/4 - n/2.
inline Complex o_tau_derivative(int n, double t, const Params& p) {
  if (n < 0) throw DomainError("o_tau_derivative: order must be >= 0");
  const double dn = static_cast<double>(n);
  const Complex z(0.0, std::sqrt(2.0) * (t - p.center) / p.spread);
  const double order = -0.75 - dn / 2.0;
  const double mag = std::pow(2.0, -0.625 + 0.75 * dn) * std::pow(kPi, -0.75) *
                     std::tgamma(0.75 + dn / 2.0) *
                     std::pow(p.mass / p.spread, 0.25 + dn / 2.0);
  return std::polar(mag, 0.5 * kPi * static_cast<double>(n % 4)) *
         parabolic_cylinder_scaled(order, z);
}

struct SeriesResult {
  Complex value;
  /// Ratio-test bound on the discarded tail.
  double remainder = 0.0;
  int terms = 0;
  bool converged = false;
};

inline constexpr int kDefaultSeriesOrder = 24;

/// Taylor series of the o-sector amplitude around x = 0 at time t, summed to
/// n_max terms. Flags divergence when the ratio test does not bound the tail
/// below 1e-8 relative.
inline SeriesResult o_tau_series(double x, double t, const Params& p,
                                 int n_max = kDefaultSeriesOrder) {
  p.validate();
  if (n_max < 1) throw DomainError("o_tau_series: n_max must be >= 1");
  SeriesResult r;
  Complex sum = 0.0;
  double fact = 1.0;
  double xn = 1.0;
  double prev = 0.0, last = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    if (n > 0) {
      fact *= n;
      xn *= x;
    }
    const Complex term = o_tau_derivative(n, t, p) * (xn / fact);
    sum += term;
    prev = last;
    last = std::abs(term);
    r.terms = n + 1;
  }
  r.value = sum;
  if (x == 0.0) {
    r.converged = true;
    return r;
  }
  const double ratio = prev > 0.0 ? last / prev : 0.0;
  r.remainder = ratio < 1.0 ? last * ratio / (1.0 - ratio) : std::numeric_limits<double>::infinity();
  r.converged = r.remainder <= 1e-8 * std::abs(sum);
  return r;
}

/// Leading large-t envelope a_0 sqrt(Delta) m^{1/4} / (t - tau)^{3/4} at x = 0.
inline Complex o_tau_large_t(double t, const Params& p) {
  const double dt = t - p.center;
  if (!(dt > 0.0)) throw DomainError("o_tau_large_t: requires t > tau");
  return taylor_coeffs(0).a * std::sqrt(p.spread) * std::pow(p.mass, 0.25) / std::pow(dt, 0.75);
}

struct EpsTauResult {
  /// Full form: tA integral of the incomplete-gamma expression.
  Complex full;
  double full_error = 0.0;
  /// Small-eps^2 Delta/m approximation with the probability integral.
  Complex approx;
  bool approx_valid = false;
};

namespace detail {

// Phi(w)/w with w = sqrt(-i eps x); tends to 2/sqrt(pi) at w = 0.
inline Complex erf_ratio(double ex) {
  if (ex == 0.0) return 2.0 / kSqrtPi;
  const Complex w = std::sqrt(Complex(0.0, -ex));
  return probability_integral(w) / w;
}

}  // namespace detail

/// Eps-sector amplitude of the coherent state at t = tau = 0.
///
/// full:   N eps^{3/2}/sqrt(2 pi m) Int dtA e^{-tA^2/Delta^2} gamma(s, -i eps x) (-i eps x)^{-s},
///         s = 1/2 + i eps^2 tA / m
/// approx: (2 pi)^{-1/4} sqrt(eps^3 Delta / 2m) Phi(sqrt(-i eps x)) / sqrt(-i eps x)
/// x < 0 follows from amp(-x) = conj(amp(x)).
inline EpsTauResult eps_tau_closed(double x, const Params& p, double rel_tol = 1e-11) {
  p.validate();
  if (p.kind != RegularizerKind::grt) throw DomainError("eps_tau_closed: GRT regularizer only");
  if (!std::isfinite(x)) throw DomainError("eps_tau_closed: x must be finite");
  if (x < 0.0) {
    EpsTauResult r = eps_tau_closed(-x, p, rel_tol);
    r.full = std::conj(r.full);
    r.approx = std::conj(r.approx);
    return r;
  }
  const double ex = p.eps * x;
  const double e2m = p.eps * p.eps / p.mass;
  const double pref =
      coherent_normalization(p.spread) * std::pow(p.eps, 1.5) / std::sqrt(2.0 * kPi * p.mass);
  const Complex arg(0.0, -ex);
  QuadratureSpec spec;
  spec.integrand = [&](double ta) -> Complex {
    const double g = std::exp(-(ta / p.spread) * (ta / p.spread));
    if (g == 0.0) return 0.0;
    const Complex s(0.5, e2m * ta);
    if (ex == 0.0) return g / s;
    return g * lower_incomplete_gamma(s, arg) * std::exp(-s * std::log(arg));
  };
  spec.lower = -std::numeric_limits<double>::infinity();
  spec.upper = std::numeric_limits<double>::infinity();
  spec.scale = p.spread;
  spec.rel_tol = rel_tol;
  const auto res = adaptive_integrate(spec);
  if (!res.converged) throw NumericalFailure("eps_tau_closed: tA integral did not converge");
  EpsTauResult r;
  r.full = pref * res.value;
  r.full_error = pref * res.error;
  r.approx = std::pow(2.0 * kPi, -0.25) * std::sqrt(p.eps * p.eps * p.eps * p.spread / (2.0 * p.mass)) *
             detail::erf_ratio(ex);
  // corrections are O(eps^2 Delta/m) times ln(eps x) once eps x > 1
  r.approx_valid = p.smallness() * (1.0 + std::log(std::max(ex, 1.0))) < 0.05;
  return r;
}

/// Eps-sector amplitude of the tA = 0 eigenstate:
/// eps Phi(sqrt(-i eps x)) / sqrt(-2 i x m), limit 2 eps^{3/2}/sqrt(2 pi m) at x = 0.
inline Complex gex_closed(double x, const Params& p) {
  p.validate();
  if (!std::isfinite(x)) throw DomainError("gex_closed: x must be finite");
  if (x < 0.0) return std::conj(gex_closed(-x, p));
  // eps Phi(w)/sqrt(-2 i x m) = eps sqrt(eps/(2m)) Phi(w)/w
  return p.eps * std::sqrt(p.eps / (2.0 * p.mass)) * detail::erf_ratio(p.eps * x);
}

struct PowerLawNorm {
  /// Empty when the value overflows; log_value is always set.
  std::optional<double> value;
  double log_value = 0.0;
};

/// Eps-sector norm of the power-law regularized coherent state relative to
/// its o-sector norm, halved so that the GRT limit is 1/2:
/// (1/2) e^{a^2} [1 - Phi(-a)],  a = delta m / (sqrt2 eps^2 Delta).
inline PowerLawNorm n_eps_powerlaw(double delta_exp, double eps, double spread, double mass) {
  if (!(delta_exp >= 0.0)) throw DomainError("n_eps_powerlaw: delta_exp must be >= 0");
  if (!(eps > 0.0) || !(spread > 0.0) || !(mass > 0.0))
    throw DomainError("n_eps_powerlaw: eps, spread and mass must be > 0");
  const double a = delta_exp * mass / (std::sqrt(2.0) * eps * eps * spread);
  PowerLawNorm r;
  // 1 - Phi(-a) = erfc(-a) = 2 - erfc(a), in [1, 2) for a >= 0
  r.log_value = std::log(0.5) + a * a + std::log(2.0 - std::erfc(a));
  if (r.log_value < 700.0) r.value = std::exp(r.log_value);
  return r;
}

}  // namespace toa
