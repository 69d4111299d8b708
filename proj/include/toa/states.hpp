#pragma once

// Regularizer, arrival-time eigenstates and coherent states in momentum
// representation (hbar = 1).
//
// Amplitudes are built in logarithmic form from ln k so that the deep part of
// the log segment (k far below the double range) is handled without
// underflow. The - branch is the mirror of the + branch: z^-(-q) = z^+(q) and
// the amplitude carries an extra factor i, so both branches range over the
// whole z line.

#include <cmath>
#include <complex>
#include <string>

#include "toa/error.hpp"
#include "toa/grid.hpp"
#include "toa/numerics/special.hpp"

namespace toa {

enum class RegularizerKind { grt, power };

inline const char* to_string(RegularizerKind k) { return k == RegularizerKind::grt ? "grt" : "power"; }

struct Params {
  double mass = 1.0;
  double eps = 0.1;
  double spread = 10.0;
  double center = 0.0;
  Branch branch = Branch::plus;
  RegularizerKind kind = RegularizerKind::grt;
  double delta_exp = 0.2;

  /// eps^2 Delta / m, the parameter that controls the regularized sector.
  double smallness() const { return eps * eps * spread / mass; }

  void validate() const {
    if (!(mass > 0.0) || !std::isfinite(mass)) throw DomainError("mass: must be finite and > 0");
    if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("eps: must be finite and > 0");
    if (!(spread > 0.0) || !std::isfinite(spread)) throw DomainError("spread: must be finite and > 0");
    if (!std::isfinite(center)) throw DomainError("center: must be finite");
    if (kind == RegularizerKind::power && !(delta_exp > 0.0))
      throw DomainError("delta_exp: must be > 0 for the power regularizer");
  }
};

enum class SplitTag { full, o_piece, eps_piece };

inline const char* to_string(SplitTag s) {
  switch (s) {
    case SplitTag::o_piece: return "o";
    case SplitTag::eps_piece: return "eps";
    default: return "full";
  }
}

struct EigenstateDescriptor {
  double arrival_time = 0.0;
  Branch branch = Branch::plus;
  SplitTag split = SplitTag::full;
};

/// ln f(k) given ln k.
inline double log_regularizer(double log_k, const Params& p) {
  const double le = std::log(p.eps);
  if (log_k >= le) return -log_k;
  if (p.kind == RegularizerKind::grt) return log_k - 2.0 * le;
  return (1.0 + p.delta_exp) * log_k - (2.0 + p.delta_exp) * le;
}

/// f(k): k/eps^2 below eps (or the continuous power law), 1/k above.
inline double regularizer(double k, const Params& p) {
  if (!(k > 0.0)) throw DomainError("regularizer: k must be > 0");
  if (k >= p.eps) return 1.0 / k;
  if (p.kind == RegularizerKind::grt) return k / (p.eps * p.eps);
  return std::pow(p.eps, -(2.0 + p.delta_exp)) * std::pow(k, 1.0 + p.delta_exp);
}

/// z(k) from ln k. The logarithmic form below eps is used for both kinds.
inline double z_from_log(double log_k, const Params& p) {
  const double le = std::log(p.eps);
  if (log_k < le) return p.eps * p.eps * (log_k - le);
  const double k = std::exp(log_k);
  return 0.5 * (k - p.eps) * (k + p.eps);
}

inline double z_coordinate(double k, const Params& p) {
  if (!(k > 0.0)) throw DomainError("z_coordinate: k must be > 0");
  if (k >= p.eps) return 0.5 * (k - p.eps) * (k + p.eps);
  return p.eps * p.eps * std::log(k / p.eps);
}

inline bool in_split(const MomentumGrid& g, std::size_t i, SplitTag s) {
  switch (s) {
    case SplitTag::o_piece: return !g.below_eps(i);
    case SplitTag::eps_piece: return g.below_eps(i);
    default: return true;
  }
}

namespace detail {

// Fill one branch with phi = sqrt(w) psi where ln|sqrt(k) psi| and arg psi
// come from `shape(node) -> {log_mod, phase}`.
template <class F>
std::vector<Complex> weighted_from_log(const MomentumGrid& g, SplitTag split, F&& shape) {
  std::vector<Complex> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!in_split(g, i, split)) continue;
    const auto& n = g[i];
    const auto [log_mod, phase] = shape(n);
    const double l = log_mod + 0.5 * std::log(n.log_weight);
    if (l > 700.0 || std::isnan(l))
      throw NumericalFailure("state amplitude not representable at ln k = " + format_real(n.log_k));
    out[i] = std::polar(std::exp(l), phase);
  }
  return out;
}

inline void place(SpectralState& s, Branch b, std::vector<Complex> v) {
  if (b == Branch::minus)
    for (auto& c : v) c *= Complex(0.0, 1.0);
  s.side(b) = std::move(v);
}

}  // namespace detail

/// Modified eigenstate (2 pi m f)^{-1/2} e^{i tA z / m} on the chosen support.
inline SpectralState eigenstate_modified(const EigenstateDescriptor& d, const Params& p,
                                         GridPtr grid) {
  p.validate();
  if (std::abs(grid->eps() - p.eps) > 1e-14 * p.eps)
    throw DomainError("eigenstate_modified: grid built for a different eps");
  const double l2pm = std::log(2.0 * kPi * p.mass);
  auto v = detail::weighted_from_log(*grid, d.split, [&](const GridNode& n) {
    const double log_mod = 0.5 * (n.log_k - l2pm - log_regularizer(n.log_k, p));
    return std::pair{log_mod, d.arrival_time * z_from_log(n.log_k, p) / p.mass};
  });
  SpectralState s{grid, {}, {}, 0.0, {}};
  detail::place(s, d.branch, std::move(v));
  s.label = {"eigenstate", to_string(d.split), d.arrival_time, 0.0, p.eps, p.mass, d.arrival_time};
  return s;
}

/// Unmodified eigenstate alpha(k) sqrt(k) e^{i tA k^2/2m} / sqrt(2 pi m) on both
/// branches, alpha = 1 for k > 0 and i for k < 0.
inline SpectralState eigenstate_unmodified(double arrival_time, const Params& p, GridPtr grid) {
  p.validate();
  const double l2pm = std::log(2.0 * kPi * p.mass);
  auto v = detail::weighted_from_log(*grid, SplitTag::full, [&](const GridNode& n) {
    const double k2 = std::exp(2.0 * n.log_k);
    return std::pair{n.log_k - 0.5 * l2pm, arrival_time * k2 / (2.0 * p.mass)};
  });
  SpectralState s{grid, {}, {}, 0.0, {}};
  s.plus = v;
  detail::place(s, Branch::minus, std::move(v));
  s.label = {"unmodified_eigenstate", "full", arrival_time, 0.0, p.eps, p.mass, arrival_time};
  return s;
}

/// N = (2 pi^3)^{-1/4} / sqrt(Delta).
inline double coherent_normalization(double spread) {
  return std::pow(2.0 * kPi * kPi * kPi, -0.25) / std::sqrt(spread);
}

/// Coherent arrival state with the tA integral done analytically:
/// psi = N Delta sqrt(pi) (2 pi m f)^{-1/2} e^{i tau z/m} e^{-z^2 Delta^2/(4 m^2)}.
/// This is the analytic normalization; its discrete norm is 1/(2 pi) in the
/// conventions used here.
inline SpectralState coherent_amplitude(const Params& p, GridPtr grid,
                                        SplitTag split = SplitTag::full) {
  p.validate();
  if (std::abs(grid->eps() - p.eps) > 1e-14 * p.eps)
    throw DomainError("coherent_amplitude: grid built for a different eps");
  const double l2pm = std::log(2.0 * kPi * p.mass);
  const double lpref = std::log(coherent_normalization(p.spread) * p.spread * kSqrtPi);
  const double c = p.spread / (2.0 * p.mass);
  auto v = detail::weighted_from_log(*grid, split, [&](const GridNode& n) {
    const double z = z_from_log(n.log_k, p);
    const double log_mod =
        lpref + 0.5 * (n.log_k - l2pm - log_regularizer(n.log_k, p)) - (c * z) * (c * z);
    return std::pair{log_mod, p.center * z / p.mass};
  });
  SpectralState s{grid, {}, {}, 0.0, {}};
  detail::place(s, p.branch, std::move(v));
  s.label = {"coherent", to_string(split), p.center, p.spread, p.eps, p.mass, p.center};
  return s;
}

/// Scale to unit discrete norm.
inline SpectralState normalized(SpectralState s) {
  const double n = s.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericalFailure("normalized: state has no finite norm");
  const double f = 1.0 / std::sqrt(n);
  for (auto* v : {&s.plus, &s.minus})
    for (auto& c : *v) c *= f;
  return s;
}

/// Unit-normalized coherent state restricted to `split`. The normalization is
/// always that of the full state, so piece norms are fractions of the total.
inline SpectralState coherent_unit(const Params& p, GridPtr grid, SplitTag split = SplitTag::full) {
  SpectralState full = normalized(coherent_amplitude(p, grid));
  if (split == SplitTag::full) return full;
  const auto& g = *grid;
  for (auto* v : {&full.plus, &full.minus})
    if (!v->empty())
      for (std::size_t i = 0; i < g.size(); ++i)
        if (!in_split(g, i, split)) (*v)[i] = 0.0;
  full.label.piece = to_string(split);
  return full;
}

}  // namespace toa
