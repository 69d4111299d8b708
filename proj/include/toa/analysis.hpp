#pragma once

// Norm split, kinetic energy, overlaps and the self-adjointness defect.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "toa/error.hpp"
#include "toa/grid.hpp"
#include "toa/states.hpp"

namespace toa {

struct SplitReport {
  double norm_o = 0.0;
  double norm_eps = 0.0;
  double fraction_eps = 0.0;
  Params params;
  /// Largest relative change of either norm when the grid is refined.
  double grid_delta = 0.0;
  /// Share of the eps-sector norm in the deepest log panel (truncation check).
  double tail_fraction = 0.0;
  bool converged = true;
  std::size_t n_log = 0;
  std::size_t n_lin = 0;
};

namespace detail {

inline void piece_norms(const SpectralState& s, double& o, double& e, double& tail) {
  const auto& g = *s.grid;
  CompensatedSum so, se, st;
  const std::size_t deep = g.rule().size();
  for (const auto* v : {&s.plus, &s.minus}) {
    if (v->empty()) continue;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double q = std::norm((*v)[i]);
      if (g.below_eps(i)) {
        se += q;
        if (i < deep) st += q;
      } else {
        so += q;
      }
    }
  }
  o = so.value();
  e = se.value();
  tail = e > 0.0 ? st.value() / e : 0.0;
}

}  // namespace detail

/// Grid-convergence threshold for the refinement check.
inline constexpr double kSplitConvergence = 1e-7;

/// Norms of the o- and eps-sectors of the coherent state. The fraction is
/// independent of the overall prefactor.
inline SplitReport norm_split(const Params& p, GridPtr grid, bool check_refinement = true) {
  p.validate();
  SplitReport r;
  r.params = p;
  r.n_log = grid->layout().n_log;
  r.n_lin = grid->layout().n_lin;
  detail::piece_norms(coherent_amplitude(p, grid), r.norm_o, r.norm_eps, r.tail_fraction);
  const double total = r.norm_o + r.norm_eps;
  if (!(total > 0.0) || !std::isfinite(total)) throw NumericalFailure("norm_split: non-finite norm");
  r.fraction_eps = r.norm_eps / total;
  if (check_refinement) {
    double o2, e2, t2;
    detail::piece_norms(coherent_amplitude(p, refine(*grid)), o2, e2, t2);
    r.grid_delta = std::max(std::abs(o2 - r.norm_o) / r.norm_o, std::abs(e2 - r.norm_eps) / r.norm_eps);
  }
  r.converged = r.grid_delta < kSplitConvergence && r.tail_fraction < 1e-12;
  return r;
}

/// Sum w (k^2/2m) |psi|^2 without normalization.
inline double kinetic_energy_numerator(const SpectralState& s) {
  const double m = s.label.mass;
  if (!(m > 0.0)) throw DomainError("kinetic energy: state carries no mass");
  return integrate_on_grid(s, [m](const GridNode& n, int) { return n.k * n.k / (2.0 * m); }).real();
}

/// <k^2/2m> of the state, divided by its discrete norm (equal to the plain sum
/// for a unit-normalized state).
inline double mean_kinetic_energy(const SpectralState& s) {
  const double n = s.norm();
  if (!(n > 0.0)) throw NumericalFailure("mean_kinetic_energy: zero norm");
  return kinetic_energy_numerator(s) / n;
}

/// <a|b> = Sum w conj(psi_a) psi_b.
inline Complex overlap(const SpectralState& a, const SpectralState& b) {
  return bilinear_on_grid(a, b, [](const GridNode&, int) { return 1.0; });
}

enum class OperatorKind { T, T_eps };

inline const char* to_string(OperatorKind k) { return k == OperatorKind::T ? "T" : "T_eps"; }

struct DefectReport {
  /// <u, T v> - <T u, v> from the discretized operator.
  Complex bilinear;
  /// i m [v conj(u) a^2] at 0- plus the same at 0+, extrapolated to k -> 0.
  Complex boundary;
  OperatorKind kind = OperatorKind::T_eps;
  /// Magnitude of <u, T v>, the reference for relative statements.
  double scale = 0.0;
  bool extrapolation_unstable = false;
};

/// Defect of the symmetric arrival-time operator on the pair (u, v).
///
/// On each branch, with q = |k| and a = q^{-1/2} (T) or sqrt(f) (T_eps), both
/// inner products reduce to -i m Int [conj(a u) (a v)' + (a v) conj((a u)')] dq.
/// The derivative is the Lobatto differentiation matrix of each panel and the
/// integral is the panel's own Lobatto rule, both in the panel coordinate.
inline DefectReport selfadjoint_defect(const SpectralState& u, const SpectralState& v,
                                       OperatorKind kind, const Params& p) {
  if (u.grid != v.grid) throw GridMismatch();
  const auto& g = *u.grid;
  const auto& rule = g.rule();
  const std::size_t P = rule.size();
  const double m = p.mass;

  auto log_a = [&](const GridNode& n) {
    return kind == OperatorKind::T ? -0.5 * n.log_k : 0.5 * log_regularizer(n.log_k, p);
  };
  // ln|a psi| and arg(a psi) from the weighted amplitude; -inf where phi is 0.
  struct LogAmp {
    std::vector<double> lmod, phase;
  };
  auto scaled = [&](const std::vector<Complex>& phi) {
    LogAmp out{std::vector<double>(g.size(), -std::numeric_limits<double>::infinity()),
               std::vector<double>(g.size(), 0.0)};
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (phi[i] == Complex{0.0, 0.0}) continue;
      const auto& n = g[i];
      out.lmod[i] = log_a(n) + std::log(std::abs(phi[i])) - 0.5 * (n.log_k + std::log(n.log_weight));
      out.phase[i] = std::arg(phi[i]);
    }
    return out;
  };
  // Panel values divided by e^{shift}, shift = largest ln|.| in the panel.
  auto panel_values = [&](const LogAmp& a, std::size_t first, std::vector<Complex>& vals) {
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < P; ++j) shift = std::max(shift, a.lmod[first + j]);
    for (std::size_t j = 0; j < P; ++j)
      vals[j] = std::isinf(a.lmod[first + j]) ? Complex{0.0, 0.0}
                                              : std::polar(std::exp(a.lmod[first + j] - shift), a.phase[first + j]);
    return shift;
  };
  auto product = [](const LogAmp& a, const LogAmp& b, std::size_t i) {
    // conj(a_i) b_i
    const double l = a.lmod[i] + b.lmod[i];
    if (l > 700.0) throw NumericalFailure("selfadjoint_defect: boundary term diverges at k -> 0");
    return std::polar(std::exp(l), b.phase[i] - a.phase[i]);
  };

  DefectReport r;
  r.kind = kind;
  ComplexCompensatedSum total;
  CompensatedSum scale;
  Complex boundary = 0.0;
  for (Branch b : {Branch::minus, Branch::plus}) {
    const auto& pu = u.side(b);
    const auto& pv = v.side(b);
    if (pu.empty() || pv.empty()) continue;
    const auto A = scaled(pu);
    const auto B = scaled(pv);
    // Deep log nodes where phi underflowed carry no information; start at the
    // first panel whose nodes are all representable.
    std::size_t start = 0;
    for (std::size_t q = 0; q < g.panels().size(); ++q) {
      const std::size_t f = g.panels()[q].first;
      bool zero = false;
      for (std::size_t j = 0; j < P; ++j) zero = zero || pu[f + j] == Complex{0.0, 0.0} || pv[f + j] == Complex{0.0, 0.0};
      if (!zero || g[f + P - 1].k > 0.5 * g.eps()) {
        start = q;
        break;
      }
    }
    std::vector<Complex> a(P), bv(P), dA(P), dB(P);
    for (std::size_t q = start; q < g.panels().size(); ++q) {
      const auto& pan = g.panels()[q];
      const double sa = panel_values(A, pan.first, a);
      const double sb = panel_values(B, pan.first, bv);
      if (std::isinf(sa) || std::isinf(sb)) continue;
      for (std::size_t j = 0; j < P; ++j) {
        Complex ca = 0.0, cb = 0.0;
        for (std::size_t l = 0; l < P; ++l) {
          ca += rule.diff[j * P + l] * a[l];
          cb += rule.diff[j * P + l] * bv[l];
        }
        dA[j] = ca;
        dB[j] = cb;
      }
      if (sa + sb > 700.0) throw NumericalFailure("selfadjoint_defect: boundary term diverges at k -> 0");
      const double f = std::exp(sa + sb);
      for (std::size_t j = 0; j < P; ++j) {
        const Complex t1 = std::conj(a[j]) * dB[j];
        const Complex t2 = bv[j] * std::conj(dA[j]);
        total += rule.weights[j] * f * (t1 + t2);
        scale += rule.weights[j] * f * std::abs(t1);
      }
    }
    // Two deepest nodes used; linear extrapolation in k to 0.
    const std::size_t i0 = g.panels()[start].first;
    const Complex r0 = product(A, B, i0);
    const Complex r1 = product(A, B, i0 + 1);
    // local power law of |conj(a u) a v| over the panel; a negative power means
    // the limit does not exist
    const std::size_t i1 = i0 + P - 1;
    const double span = g[i1].log_k - g[i0].log_k;
    if (span > 0.0) {
      const double power = (A.lmod[i1] + B.lmod[i1] - A.lmod[i0] - B.lmod[i0]) / span;
      if (power < -0.5) throw NumericalFailure("selfadjoint_defect: boundary term diverges at k -> 0");
    }
    const double k0 = g[i0].k, k1 = g[i0 + 1].k;
    const Complex lim = (k1 > k0 && k0 > 0.0) ? r0 - k0 * (r1 - r0) / (k1 - k0) : r0;
    boundary += lim;
    const double big = std::max(std::abs(r0), std::abs(r1));
    if (std::abs(r0 - r1) > 0.1 * big && big > 1e-12 * std::max(1.0, std::abs(total.value())))
      r.extrapolation_unstable = true;
  }
  const Complex im(0.0, m);
  r.bilinear = -im * total.value();
  r.boundary = im * boundary;
  r.scale = m * scale.value();
  return r;
}

/// Number of built-in smooth pairs for the T_eps check.
inline constexpr int kSmoothDefectPairs = 5;

/// Built-in defect test pairs on both branches, q = |k|.
/// index 0..4: smooth pairs, nonzero at q = 0.
/// index kSmoothDefectPairs: a pair behaving as sqrt(q) near 0, for which the
/// boundary term of T survives.
inline std::pair<SpectralState, SpectralState> defect_test_pair(int index, GridPtr grid, double mass) {
  using Fn = Complex (*)(double q, int sign);
  static const Fn us[] = {
      [](double q, int) { return Complex(std::exp(-q * q)); },
      [](double q, int) { return q * std::exp(-q * q) * std::polar(1.0, q); },
      [](double q, int) { return Complex(std::exp(-q * q / 4) * std::cos(2 * q)); },
      [](double q, int) { return Complex(1.0, q) * std::exp(-q * q / 2); },
      [](double q, int s) { return std::exp(-(q - 0.5) * (q - 0.5)) * std::polar(1.0, 0.3 * s * q); },
      [](double q, int) { return Complex(std::exp(-q * q)); },
  };
  static const Fn vs[] = {
      [](double q, int) { return Complex((1 + q) * std::exp(-q * q / 2)); },
      [](double q, int) { return Complex(std::exp(-(q - 1) * (q - 1))); },
      [](double q, int) { return Complex(0.0, std::exp(-q * q) * (1 - q * q)); },
      [](double q, int s) { return Complex(1.0 + s * q * std::exp(-q * q / 3)); },
      [](double q, int) { return std::exp(-q * q) * std::polar(1.0, -q * q); },
      [](double q, int s) { return (1 + q) * std::exp(-q * q / 2) * std::polar(1.0, 0.3 * s * q); },
  };
  if (index < 0 || index > kSmoothDefectPairs) throw DomainError("defect_test_pair: index out of range");
  const bool root = index == kSmoothDefectPairs;
  auto build = [&](Fn f) {
    SpectralState s{grid, {}, {}, 0.0, {}};
    for (int sign : {1, -1}) {
      auto v = detail::weighted_from_log(*grid, SplitTag::full, [&](const GridNode& n) {
        // sqrt(q) psi, with an extra sqrt(q) for the root pair
        const Complex h = f(n.k, sign);
        const double lm = (root ? 1.0 : 0.5) * n.log_k + std::log(std::abs(h));
        return std::pair{lm, std::arg(h)};
      });
      (sign > 0 ? s.plus : s.minus) = std::move(v);
    }
    s.label = {"defect_pair", "full", 0.0, 0.0, grid->eps(), mass, 0.0};
    return s;
  };
  return {build(us[index]), build(vs[index])};
}

}  // namespace toa
