#pragma once

// Brute-force reference values for the state-level quantities. Everything
// here is written directly from the momentum-space definitions and
// integrated with Romberg; nothing is shared with the grid pipeline.
//
// Conventions match the pipeline: psi_coherent = N Int dtA e^{-(tA-tau)^2/D^2} g_tA(k),
// g_tA = (2 pi m f)^{-1/2} e^{i tA z/m}, N = (2 pi^3)^{-1/4}/sqrt(D), and
// position amplitudes are Int dk psi e^{ikx}.

#include <cmath>
#include <complex>
#include <limits>

#include "toa/oracle/romberg.hpp"

namespace toa::oracle {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct PhysParams {
  double mass = 1.0;
  double eps = 0.1;
  double spread = 1.0;
  double center = 0.0;
  double delta_exp = 0.0;  // 0: piecewise-linear regularizer, > 0: power law
};

inline double norm_constant(double spread) {
  return std::pow(2.0 * kPi * kPi * kPi, -0.25) / std::sqrt(spread);
}

/// Sum of both sector norms of the coherent state, split into parts.
struct SectorNorms {
  RombergResult eps_piece;
  RombergResult o_piece;
};

/// Sector norms of the coherent state. The eps sector is integrated in
/// u = ln(eps/k) (its mass sits at k ~ eps e^{-m/(eps^2 D)}), the o sector
/// directly in k.
inline SectorNorms sector_norms(const PhysParams& p, double rel_tol = 1e-13) {
  const double A = norm_constant(p.spread) * p.spread * std::sqrt(kPi);
  const double pref = A * A / (2.0 * kPi * p.mass);
  const double c = p.spread * p.spread / (2.0 * p.mass * p.mass);
  const double e2 = p.eps * p.eps;
  SectorNorms out;
  OracleSpec se;
  // dk |psi|^2 = k du |psi|^2; k/f = eps^2 e^{delta u}
  se.integrand = [=](double u) -> Complex {
    const double z = -e2 * u;
    return pref * e2 * std::exp(p.delta_exp * u - c * z * z);
  };
  se.lower = 0.0;
  se.rel_tol = rel_tol;
  if (p.delta_exp > 0.0) {
    const double u0 = p.delta_exp / (2.0 * c * e2 * e2);
    se.upper = u0 + 40.0 / (e2 * std::sqrt(2.0 * c));
  } else {
    se.upper = kInf;
    se.scale = 1.0 / (e2 * std::sqrt(2.0 * c));
  }
  out.eps_piece = oracle_integrate(se);
  OracleSpec so;
  so.integrand = [=](double k) -> Complex {
    const double z = 0.5 * (k * k - e2);
    return pref * k * std::exp(-c * z * z);
  };
  so.lower = p.eps;
  so.upper = kInf;
  so.scale = std::sqrt(p.mass / p.spread);
  so.rel_tol = rel_tol;
  out.o_piece = oracle_integrate(so);
  return out;
}

/// Mass of |psi|^2 beyond k_max relative to the total (o sector tail).
inline RombergResult tail_beyond(const PhysParams& p, double k_max) {
  const double c = p.spread * p.spread / (2.0 * p.mass * p.mass);
  const double e2 = p.eps * p.eps;
  OracleSpec s;
  s.integrand = [=](double k) -> Complex {
    const double z = 0.5 * (k * k - e2);
    return k * std::exp(-c * z * z);
  };
  s.lower = k_max;
  s.upper = kInf;
  s.scale = 0.1 * std::sqrt(p.mass / p.spread);
  s.rel_tol = 1e-10;
  auto r = oracle_integrate(s);
  // Total in the same units: both sectors give Int_0^inf e^{-c z^2} dz.
  const double total = 2.0 * 0.5 * std::sqrt(kPi / c);
  r.value /= total;
  r.error /= total;
  return r;
}

/// Limit eps -> 0 of <k^2/2m> D for the unit-normalized coherent state.
inline RombergResult energy_constant(double mass = 1.0, double spread = 1.0) {
  const double a = spread * spread / (8.0 * mass * mass);
  OracleSpec num, den;
  num.integrand = [=](double k) -> Complex { return k * k * k / (2.0 * mass) * std::exp(-a * k * k * k * k); };
  den.integrand = [=](double k) -> Complex { return 2.0 * k * std::exp(-a * k * k * k * k); };
  for (auto* s : {&num, &den}) {
    s->lower = 0.0;
    s->upper = kInf;
    s->scale = std::sqrt(mass / spread);
    s->rel_tol = 1e-13;
  }
  const auto n = oracle_integrate(num), d = oracle_integrate(den);
  RombergResult r = n;
  r.value = n.value / d.value * spread;
  r.error = std::abs(r.value) * (n.error / std::abs(n.value) + d.error / std::abs(d.value));
  r.converged = n.converged && d.converged;
  return r;
}

/// <tau'|tau> / <tau|tau> with tau' - tau = sep, for the chosen sectors.
/// The normalization is always the full norm.
inline RombergResult overlap_ratio(const PhysParams& p, double sep, bool eps_sector = true,
                                   bool o_sector = true) {
  const double c = p.spread * p.spread / (2.0 * p.mass * p.mass);
  const double e2 = p.eps * p.eps;
  // |psi|^2 e^{i (tau - tau') z/m}, common constants dropped
  Complex num = 0.0;
  double err = 0.0;
  bool conv = true;
  if (eps_sector) {
    OracleSpec s;
    s.integrand = [=](double u) -> Complex {
      const double z = -e2 * u;
      return e2 * std::exp(-c * z * z) * std::polar(1.0, -sep * z / p.mass);
    };
    s.lower = 0.0;
    s.upper = kInf;
    s.scale = 1.0 / (e2 * std::sqrt(2.0 * c));
    s.rel_tol = 1e-13;
    s.abs_tol = 1e-15 / std::sqrt(c);
    const auto r = oracle_integrate(s);
    num += r.value;
    err += r.error;
    conv = conv && r.converged;
  }
  if (o_sector) {
    OracleSpec s;
    s.integrand = [=](double k) -> Complex {
      const double z = 0.5 * (k * k - e2);
      return k * std::exp(-c * z * z) * std::polar(1.0, -sep * z / p.mass);
    };
    s.lower = p.eps;
    s.upper = kInf;
    s.scale = std::sqrt(p.mass / p.spread);
    s.rel_tol = 1e-13;
    s.abs_tol = 1e-15 / std::sqrt(c);
    s.max_levels = 24;
    const auto r = oracle_integrate(s);
    num += r.value;
    err += r.error;
    conv = conv && r.converged;
  }
  const double norm = std::sqrt(kPi / c);  // both sectors, same units
  RombergResult out;
  out.value = num / norm;
  out.error = err / norm;
  out.converged = conv;
  return out;
}

/// Least-squares A in Im <tau'|tau>_o / <tau|tau> ~ A / sep over the given
/// separations.
inline RombergResult o_overlap_fit(const PhysParams& p, const double* seps, int n) {
  double num = 0.0, den = 0.0, err = 0.0;
  bool conv = true;
  for (int i = 0; i < n; ++i) {
    const auto r = overlap_ratio(p, seps[i], false, true);
    num += r.value.imag() / seps[i];
    den += 1.0 / (seps[i] * seps[i]);
    err += r.error / seps[i];
    conv = conv && r.converged;
  }
  RombergResult out;
  out.value = num / den;
  out.error = err / den;
  out.converged = conv;
  return out;
}

/// Coherent amplitude psi(k) by numerical tA integration, k > 0.
inline RombergResult coherent_numeric(double k, const PhysParams& p) {
  const double e2 = p.eps * p.eps;
  double f, z;
  if (k >= p.eps) {
    f = 1.0 / k;
    z = 0.5 * (k * k - e2);
  } else {
    f = (p.delta_exp > 0.0) ? std::pow(p.eps, -(2.0 + p.delta_exp)) * std::pow(k, 1.0 + p.delta_exp)
                            : k / e2;
    z = e2 * std::log(k / p.eps);
  }
  const double amp = norm_constant(p.spread) / std::sqrt(2.0 * kPi * p.mass * f);
  OracleSpec s;
  s.integrand = [=](double ta) -> Complex {
    const double d = (ta - p.center) / p.spread;
    return std::exp(-d * d) * std::polar(amp, ta * z / p.mass);
  };
  s.lower = -kInf;
  s.upper = kInf;
  s.center = p.center;
  s.scale = p.spread;
  s.rel_tol = 1e-13;
  s.abs_tol = 1e-16 * amp * p.spread;
  return oracle_integrate(s);
}

/// Eps-sector eigenstate amplitude at tA = 0: Int_0^eps dk eps (2 pi m k)^{-1/2} e^{ikx}.
inline RombergResult gex_integral(double x, const PhysParams& p) {
  OracleSpec s;
  s.integrand = [=](double k) -> Complex {
    if (k <= 0.0) return 0.0;
    return p.eps / std::sqrt(2.0 * kPi * p.mass * k) * std::polar(1.0, k * x);
  };
  s.lower = 0.0;
  s.upper = p.eps;
  s.singularity_exponent = -0.5;
  s.rel_tol = 1e-13;
  return oracle_integrate(s);
}

/// Eps-sector coherent amplitude at t = tau = 0 as a double integral over
/// tA and u = ln(eps/k).
inline RombergResult eps_tau_double(double x, const PhysParams& p) {
  const double e2m = p.eps * p.eps / p.mass;
  const double pre = norm_constant(p.spread) * p.eps / std::sqrt(2.0 * kPi * p.mass);
  double inner_err = 0.0;
  OracleSpec outer;
  outer.integrand = [&](double ta) -> Complex {
    const double g = std::exp(-(ta / p.spread) * (ta / p.spread));
    if (g < 1e-300) return 0.0;
    OracleSpec in;
    // dk k^{-1/2} (k/eps)^{i e2m ta} e^{ikx}, k = eps e^{-u}
    in.integrand = [=](double u) -> Complex {
      const double k = p.eps * std::exp(-u);
      return std::sqrt(k) * std::polar(1.0, -e2m * ta * u + k * x);
    };
    in.lower = 0.0;
    in.upper = kInf;
    in.scale = 2.0;
    in.rel_tol = 1e-13;
    in.abs_tol = 1e-16;
    const auto r = oracle_integrate(in);
    inner_err = std::max(inner_err, r.error);
    return g * r.value;
  };
  outer.lower = -kInf;
  outer.upper = kInf;
  outer.scale = p.spread;
  outer.rel_tol = 1e-12;
  auto r = oracle_integrate(outer);
  r.value *= pre;
  r.error = pre * (r.error + inner_err * p.spread * std::sqrt(kPi));
  return r;
}

/// o-sector amplitude in the eps -> 0 limit at t = tau:
/// Int_0^inf dk N D sqrt(pi) (2 pi m)^{-1/2} sqrt(k) e^{-k^4 D^2/16 m^2} e^{ikx}.
inline RombergResult o_tau_integral(double x, double mass, double spread, double rel_tol = 1e-13) {
  const double pre = norm_constant(spread) * spread * std::sqrt(kPi) / std::sqrt(2.0 * kPi * mass);
  const double a = spread * spread / (16.0 * mass * mass);
  OracleSpec s;
  s.integrand = [=](double k) -> Complex {
    if (k <= 0.0) return 0.0;
    const double k2 = k * k;
    return std::sqrt(k) * std::exp(-a * k2 * k2) * std::polar(pre, k * x);
  };
  s.lower = 0.0;
  s.upper = kInf;
  s.singularity_exponent = 0.5;
  s.scale = 2.0 * std::sqrt(mass / spread);
  s.rel_tol = rel_tol;
  s.abs_tol = 1e-15 * pre;
  return oracle_integrate(s);
}

/// Fraction of the o-sector norm (eps -> 0) inside |x| <= half_width at t = tau.
inline RombergResult o_window_capture(double half_width, double mass, double spread) {
  double inner_err = 0.0;
  OracleSpec s;
  s.integrand = [&](double x) -> Complex {
    const auto r = o_tau_integral(x, mass, spread, 1e-12);
    inner_err = std::max(inner_err, r.error * std::abs(r.value));
    return std::norm(r.value);
  };
  s.lower = 0.0;
  s.upper = half_width;
  s.rel_tol = 1e-11;
  s.max_levels = 16;
  auto r = oracle_integrate(s);
  // |amp(-x)| = |amp(x)|; the o-sector norm is 1/2 of the analytically normalized total
  r.value *= 4.0;
  r.error = 4.0 * (r.error + 2.0 * inner_err * half_width);
  return r;
}

/// Location of the maximum of sqrt(k) e^{-k^4 D^2/16m^2} by dense scan and
/// bisection on a sign change of the log-derivative evaluated by differences.
inline double envelope_argmax(double mass, double spread) {
  const double a = spread * spread / (16.0 * mass * mass);
  auto lf = [a](double k) { return 0.5 * std::log(k) - a * k * k * k * k; };
  const double top = 10.0 * std::sqrt(mass / spread);
  double best = top / 4000.0, bv = lf(best);
  for (int i = 2; i <= 4000; ++i) {
    const double k = top * i / 4000.0;
    if (lf(k) > bv) {
      bv = lf(k);
      best = k;
    }
  }
  double lo = best - top / 4000.0, hi = best + top / 4000.0;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (lf(m1) < lf(m2))
      lo = m1;
    else
      hi = m2;
  }
  return 0.5 * (lo + hi);
}

}  // namespace toa::oracle
