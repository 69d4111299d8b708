#pragma once

// Reference special functions. Power series are summed in binary128
// (__float128) so cancellation between large alternating terms stays far
// below double rounding; D_p uses the Romberg integrator on the defining
// integral.

#include <cmath>
#include <complex>

#include "toa/error.hpp"
#include "toa/oracle/romberg.hpp"

namespace toa::oracle {

using quad = __float128;

struct QComplex {
  quad re = 0, im = 0;
  QComplex() = default;
  QComplex(quad r, quad i) : re(r), im(i) {}
  explicit QComplex(Complex z) : re(z.real()), im(z.imag()) {}
  Complex to_double() const { return {static_cast<double>(re), static_cast<double>(im)}; }
  QComplex operator+(const QComplex& o) const { return {re + o.re, im + o.im}; }
  QComplex operator*(const QComplex& o) const {
    return {re * o.re - im * o.im, re * o.im + im * o.re};
  }
  QComplex operator*(quad s) const { return {re * s, im * s}; }
  QComplex operator/(const QComplex& o) const {
    const quad d = o.re * o.re + o.im * o.im;
    return {(re * o.re + im * o.im) / d, (im * o.re - re * o.im) / d};
  }
  quad abs2() const { return re * re + im * im; }
};

/// 2/sqrt(pi) to binary128 precision: pi as a double-double, one Newton step.
inline quad two_over_sqrt_pi() {
  const quad pi = static_cast<quad>(3.141592653589793116) + static_cast<quad>(1.2246467991473532e-16);
  quad r = static_cast<quad>(std::sqrt(3.141592653589793116));
  r = (r + pi / r) / 2;
  r = (r + pi / r) / 2;
  return 2 / r;
}

/// Phi(z) = 2/sqrt(pi) Sum (-1)^n z^{2n+1} / (n! (2n+1)), |z| <= 6.
inline Complex erf_series(Complex z) {
  if (std::abs(z) > 6.0) throw DomainError("oracle erf_series: |z| must be <= 6");
  const QComplex qz(z);
  const QComplex mz2 = (qz * qz) * static_cast<quad>(-1);
  QComplex term = qz;
  QComplex sum = qz;
  const double zz = std::norm(z);
  for (int n = 1; n < 2000; ++n) {
    term = term * mz2 * (static_cast<quad>(1) / n);
    const QComplex add = term * (static_cast<quad>(1) / (2 * n + 1));
    sum = sum + add;
    if (n > zz && add.abs2() < static_cast<quad>(1e-70) * sum.abs2()) break;
  }
  return (sum * two_over_sqrt_pi()).to_double();
}

/// gamma(s, z) = z^s Sum (-z)^n / (n! (s+n)), Re s > 0, |z| <= 20.
inline Complex lower_gamma_series(Complex s, Complex z) {
  if (!(s.real() > 0.0)) throw DomainError("oracle lower_gamma_series: Re s must be > 0");
  if (std::abs(z) > 20.0) throw DomainError("oracle lower_gamma_series: |z| must be <= 20");
  if (z == Complex{0.0, 0.0}) return 0.0;
  const QComplex qs(s);
  const QComplex mz = QComplex(z) * static_cast<quad>(-1);
  QComplex pw(1, 0);  // (-z)^n / n!
  QComplex sum = QComplex(1, 0) / qs;
  const double r = std::abs(z);
  for (int n = 1; n < 4000; ++n) {
    pw = pw * mz * (static_cast<quad>(1) / n);
    const QComplex add = pw / (qs + QComplex(n, 0));
    sum = sum + add;
    if (n > r && add.abs2() < static_cast<quad>(1e-70) * sum.abs2()) break;
  }
  return std::exp(s * std::log(z)) * sum.to_double();
}

/// D_p(z) = e^{-z^2/4} / Gamma(-p) Int_0^inf e^{-z t - t^2/2} t^{-p-1} dt, p < 0,
/// by Romberg. On the imaginary axis beyond |z| = 4 the straight path cancels
/// to far below the size of its integrand, so the integral is taken along the
/// ray t = sigma e^{i theta}, theta = -sign(Im z) pi/6, where both factors decay.
inline RombergResult parabolic_cylinder_integral(double p, Complex z, double rel_tol = 1e-13) {
  if (!(p < 0.0)) throw DomainError("oracle parabolic_cylinder_integral: p must be < 0");
  const bool rotate = z.real() == 0.0 && std::abs(z.imag()) > 4.0;
  const double theta = rotate ? (z.imag() > 0.0 ? -1.0 : 1.0) * 3.14159265358979323846 / 6.0 : 0.0;
  const Complex dir = std::polar(1.0, theta);
  const Complex measure = std::polar(1.0, -theta * p);
  const double T = rotate ? 20.0 : 12.0 + std::max(0.0, -z.real());
  OracleSpec spec;
  spec.integrand = [=](double sigma) -> Complex {
    if (sigma <= 0.0) return 0.0;
    const Complex t = sigma * dir;
    return std::exp(-z * t - 0.5 * t * t) * std::pow(sigma, -p - 1.0) * measure;
  };
  spec.lower = 0.0;
  spec.upper = T;
  spec.singularity_exponent = -p - 1.0;
  spec.rel_tol = rel_tol;
  spec.max_levels = 24;
  auto r = oracle_integrate(spec);
  const Complex pre = std::exp(-0.25 * z * z) / std::tgamma(-p);
  r.value *= pre;
  r.error *= std::abs(pre);
  return r;
}

}  // namespace toa::oracle
