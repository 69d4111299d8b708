#pragma once

// Complex special functions used by the arrival-state formulas: gamma,
// the probability integral, the lower incomplete gamma function and the
// parabolic-cylinder function D_p for p <= 0.

#include <array>
#include <cmath>
#include <complex>
#include <limits>

#include "toa/error.hpp"
#include "toa/numerics/quadrature.hpp"

namespace toa {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kSqrtPi = 1.772453850905516027298167483341145182;

namespace detail {

inline constexpr double kLanczosG = 7.0;
inline constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

inline bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace detail

/// Gamma function of complex argument (Lanczos, g = 7, with reflection).
inline Complex gamma(Complex z) {
  if (z.imag() == 0.0 && z.real() > 0.0) return std::tgamma(z.real());
  if (z.real() < 0.5) return kPi / (std::sin(kPi * z) * gamma(1.0 - z));
  z -= 1.0;
  Complex x = detail::kLanczos[0];
  for (int i = 1; i < 9; ++i) x += detail::kLanczos[i] / (z + static_cast<double>(i));
  const Complex t = z + detail::kLanczosG + 0.5;
  return std::sqrt(2.0 * kPi) * std::exp((z + 0.5) * std::log(t) - t) * x;
}

namespace detail {

inline Complex erf_maclaurin(Complex z) {
  const Complex mz2 = -z * z;
  Complex term = z;  // z (-z^2)^n / n!
  Complex sum = z;
  const double zz = std::norm(z);
  for (int n = 1; n < 20000; ++n) {
    term *= mz2 / static_cast<double>(n);
    const Complex add = term / static_cast<double>(2 * n + 1);
    sum += add;
    if (n > zz && std::abs(add) < 1e-17 * std::abs(sum)) break;
  }
  return 2.0 / kSqrtPi * sum;
}

// Laplace continued fraction for erfc, Re z > 0 (modified Lentz).
inline bool erfc_continued_fraction(Complex z, Complex& out) {
  constexpr double tiny = 1e-300;
  Complex f = z;
  Complex c = f;
  Complex d = 0.0;
  for (int n = 1; n < 20000; ++n) {
    const double an = 0.5 * n;
    d = z + an * d;
    if (d == 0.0) d = tiny;
    c = z + an / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const Complex delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) {
      out = std::exp(-z * z) / (kSqrtPi * f);
      return true;
    }
  }
  return false;
}

inline Complex erfc_asymptotic(Complex z) {
  const Complex inv2z2 = 1.0 / (2.0 * z * z);
  Complex term = 1.0;
  Complex sum = 1.0;
  double last = 1.0;
  for (int n = 1; n < 200; ++n) {
    term *= -static_cast<double>(2 * n - 1) * inv2z2;
    const double mag = std::abs(term);
    if (mag > last) break;
    sum += term;
    last = mag;
    if (mag < 1e-17) break;
  }
  return std::exp(-z * z) / (z * kSqrtPi) * sum;
}

}  // namespace detail

/// Radius beyond which the probability integral switches to its asymptotic
/// expansion.
inline constexpr double kErfAsymptoticRadius = 26.0;

/// Probability integral Phi(z) = (2/sqrt(pi)) Int_0^z exp(-u^2) du.
///
/// Maclaurin series for |z| <= 2.5 and near the imaginary axis, Laplace
/// continued fraction for moderate |z| with Re z >= 1, asymptotic erfc
/// expansion for |z| >= 26. Odd symmetry reduces to Re z >= 0.
inline Complex probability_integral(Complex z) {
  if (!detail::finite(z)) throw DomainError("probability_integral: non-finite argument");
  if (z.imag() == 0.0) return std::erf(z.real());
  if (z.real() < 0.0) return -probability_integral(-z);
  const double r = std::abs(z);
  Complex out;
  if (r >= kErfAsymptoticRadius) {
    out = 1.0 - detail::erfc_asymptotic(z);
  } else if (r <= 2.5 || z.real() < 1.0) {
    out = detail::erf_maclaurin(z);
  } else {
    Complex erfc;
    out = detail::erfc_continued_fraction(z, erfc) ? 1.0 - erfc : detail::erf_maclaurin(z);
  }
  if (!detail::finite(out)) throw NumericalFailure("probability_integral: overflow");
  return out;
}

/// Lower incomplete gamma function gamma(s, z) = Int_0^z t^{s-1} e^{-t} dt,
/// principal branch, Re s > 0.
inline Complex lower_incomplete_gamma(Complex s, Complex z) {
  if (!(s.real() > 0.0)) throw DomainError("lower_incomplete_gamma: requires Re s > 0");
  if (!detail::finite(z) || !detail::finite(s))
    throw DomainError("lower_incomplete_gamma: non-finite argument");
  if (z == Complex{0.0, 0.0}) return 0.0;
  const double r = std::abs(z);
  const Complex zs = std::exp(s * std::log(z));

  if (z.real() < 0.0 && std::abs(z.imag()) < -z.real()) {
    // near the negative axis: gamma = z^s Sum_n (-z)^n / (n! (s+n)), terms
    // of one sign there, while the continued fraction converges slowly
    Complex pw = 1.0;
    Complex sum = 1.0 / s;
    for (int n = 1; n < 100000; ++n) {
      pw *= -z / static_cast<double>(n);
      const Complex add = pw / (s + static_cast<double>(n));
      sum += add;
      if (n > r && std::abs(add) < 1e-17 * std::abs(sum)) break;
    }
    return zs * sum;
  }

  if (r <= 12.0 || r <= 1.2 * std::abs(s)) {
    // gamma = z^s e^{-z} Sum_n z^n / (s (s+1) ... (s+n))
    Complex term = 1.0 / s;
    Complex sum = term;
    for (int n = 1; n < 100000; ++n) {
      term *= z / (s + static_cast<double>(n));
      sum += term;
      if (n > r && std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return zs * std::exp(-z) * sum;
  }

  // Upper function by Legendre continued fraction, gamma = Gamma(s) - Gamma(s, z).
  constexpr double tiny = 1e-300;
  Complex b = z + 1.0 - s;
  Complex c = 1.0 / tiny;
  Complex d = 1.0 / b;
  Complex h = d;
  bool done = false;
  for (int i = 1; i < 100000; ++i) {
    const Complex an = -static_cast<double>(i) * (static_cast<double>(i) - s);
    b += 2.0;
    d = an * d + b;
    if (d == 0.0) d = tiny;
    c = b + an / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const Complex delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) {
      done = true;
      break;
    }
  }
  if (!done) throw NumericalFailure("lower_incomplete_gamma: continued fraction did not converge");
  return gamma(s) - zs * std::exp(-z) * h;
}

/// Radius beyond which D_p uses its large-argument expansion (Re z >= 0).
inline constexpr double kPcfAsymptoticRadius = 12.0;

namespace detail {

// e^{z^2/4} D_p(z) ~ z^p Sum_k (-1)^k p(p-1)...(p-2k+1) / (k! (2 z^2)^k)
inline bool pcf_scaled_asymptotic(double p, Complex z, Complex& out) {
  const Complex inv2z2 = 1.0 / (2.0 * z * z);
  Complex term = 1.0;
  Complex sum = 1.0;
  double last = 1.0;
  for (int k = 1; k < 400; ++k) {
    term *= -(p - 2.0 * k + 2.0) * (p - 2.0 * k + 1.0) / static_cast<double>(k) * inv2z2;
    const double mag = std::abs(term);
    if (mag > last) return false;
    sum += term;
    last = mag;
    if (mag < 1e-17 * std::abs(sum)) {
      out = std::exp(p * std::log(z)) * sum;
      return true;
    }
  }
  return false;
}

inline Complex pcf_scaled_integral(double p, Complex z) {
  // e^{z^2/4} D_p(z) Gamma(-p) = Int_0^inf exp(-z s - s^2/2) s^{-p-1} ds,
  // taken along the ray s = sigma e^{i theta} that damps e^{-z s}.
  const double theta =
      (z.imag() > 0.0) ? -kPi / 8.0 : (z.imag() < 0.0 ? kPi / 8.0 : 0.0);
  const Complex dir = std::polar(1.0, theta);
  const Complex measure_phase = std::polar(1.0, -theta * p);
  const double a = -p - 1.0;
  QuadratureSpec spec;
  spec.integrand = [=](double sigma) -> Complex {
    const Complex s = sigma * dir;
    return std::exp(-z * s - 0.5 * s * s) * std::pow(sigma, a) * measure_phase;
  };
  spec.lower = 0.0;
  spec.upper = std::numeric_limits<double>::infinity();
  spec.rel_tol = 1e-13;
  spec.singularity_exponent = (a < 0.0) ? a : 0.0;
  const double zr = std::abs(z);
  spec.scale = (z.real() < 0.0) ? std::max(1.0, zr) : 1.0 / std::max(1.0, 0.4 * zr);
  spec.max_panels = 2000;
  const auto res = adaptive_integrate(spec);
  if (!res.converged && res.error > 1e-9 * std::abs(res.value))
    throw NumericalFailure("parabolic_cylinder: integral representation did not converge");
  return res.value / std::tgamma(-p);
}

}  // namespace detail

/// e^{z^2/4} D_p(z): the parabolic-cylinder function with its Gaussian factor
/// removed, finite where D_p itself would overflow (large imaginary z).
inline Complex parabolic_cylinder_scaled(double p, Complex z) {
  if (p > 0.0) throw DomainError("parabolic_cylinder: order must be <= 0");
  if (!detail::finite(z)) throw DomainError("parabolic_cylinder: non-finite argument");
  if (p == 0.0) return 1.0;
  if (z.real() >= 0.0 && std::abs(z) >= kPcfAsymptoticRadius) {
    Complex out;
    if (detail::pcf_scaled_asymptotic(p, z, out)) return out;
  }
  return detail::pcf_scaled_integral(p, z);
}

/// Parabolic-cylinder (Weber) function D_p(z) for p <= 0.
inline Complex parabolic_cylinder(double p, Complex z) {
  const Complex out = std::exp(-0.25 * z * z) * parabolic_cylinder_scaled(p, z);
  if (!detail::finite(out)) throw NumericalFailure("parabolic_cylinder: overflow");
  return out;
}

/// Int dt exp(-t^2/spread^2) exp(-i b t) = spread sqrt(pi) exp(-b^2 spread^2 / 4).
inline double gaussian_time_kernel(double b, double spread) {
  if (!(spread > 0.0)) throw DomainError("gaussian_time_kernel: spread must be > 0");
  return spread * kSqrtPi * std::exp(-0.25 * b * b * spread * spread);
}

}  // namespace toa
