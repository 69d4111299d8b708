#pragma once

// Composite momentum grid. Below eps the nodes are placed in u = ln(eps/k),
// which resolves the 1/sqrt(k) singularity and the Gaussian-in-ln(k) envelope
// of the regularized sector; above eps they are placed in w with k = eps + w^2,
// which keeps sqrt(k)-type amplitudes smooth as eps -> 0. Both segments are
// tiled with Gauss-Lobatto panels whose endpoints are shared, so the node at
// k = eps appears exactly once.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "toa/error.hpp"
#include "toa/format.hpp"
#include "toa/numerics/lobatto.hpp"
#include "toa/numerics/summation.hpp"

namespace toa {

using Complex = std::complex<double>;

enum class Segment { log, upper };

inline const char* to_string(Segment s) { return s == Segment::log ? "log" : "upper"; }

struct GridNode {
  /// Momentum; underflows to 0 deep in the log segment, use log_k there.
  double k;
  double log_k;
  /// dk weight; underflows together with k.
  double weight;
  /// d(ln k) weight, weight = k * log_weight; always representable.
  double log_weight;
  double sqrt_weight;
  Segment segment;
};

/// Panel covering nodes [first, first + rule.size() - 1].
struct GridPanel {
  std::size_t first;
  Segment segment;
  /// Half width in the panel coordinate (u for log panels, w for upper ones).
  double half;
};

/// Panel layout: 8-point Lobatto panels, 7 new nodes per panel.
inline constexpr std::size_t kPanelPoints = 8;
/// Log-segment nodes with u below this are placed on the fine zone.
inline constexpr double kFineLogSpan = 64.0;

class MomentumGrid {
 public:
  struct Layout {
    double eps;
    double mass;
    double spread;
    std::size_t n_log;
    std::size_t n_lin;
    double u_max;
    double u_fine;
    double k_max;
    std::size_t fine_panels;
    std::size_t coarse_panels;
    std::size_t upper_panels;
  };

  MomentumGrid(Layout layout, std::vector<GridNode> nodes, std::vector<GridPanel> panels,
               std::size_t knee)
      : layout_(layout),
        rule_(LobattoRule::make(kPanelPoints)),
        nodes_(std::move(nodes)),
        panels_(std::move(panels)),
        knee_(knee) {}

  const Layout& layout() const { return layout_; }
  double eps() const { return layout_.eps; }
  double k_max() const { return layout_.k_max; }
  double u_max() const { return layout_.u_max; }
  double k_min_log() const { return std::log(layout_.eps) - layout_.u_max; }

  std::size_t size() const { return nodes_.size(); }
  const GridNode& operator[](std::size_t i) const { return nodes_[i]; }
  const std::vector<GridNode>& nodes() const { return nodes_; }
  const std::vector<GridPanel>& panels() const { return panels_; }
  const LobattoRule& rule() const { return rule_; }

  /// Index of the node at k = eps. Nodes 0..knee are the |k| <= eps sector.
  std::size_t knee_index() const { return knee_; }
  bool below_eps(std::size_t i) const { return i <= knee_; }

  /// Largest spacing in k between neighbours among nodes [lo, hi).
  double max_spacing(std::size_t lo, std::size_t hi) const {
    double out = 0.0;
    for (std::size_t i = lo + 1; i < hi; ++i)
      out = std::max(out, nodes_[i].k - nodes_[i - 1].k);
    return out;
  }

  /// Whether every node has a representable k and weight.
  bool representable() const {
    return nodes_.front().k > 0.0 && nodes_.front().weight > 0.0;
  }

 private:
  Layout layout_;
  LobattoRule rule_;
  std::vector<GridNode> nodes_;
  std::vector<GridPanel> panels_;
  std::size_t knee_;
};

using GridPtr = std::shared_ptr<const MomentumGrid>;

inline double grid_u_max(double eps, double mass, double spread) {
  return 8.0 * mass / (eps * eps * spread) + 25.0;
}

inline double grid_k_max(double eps, double mass, double spread) {
  return 6.0 * std::sqrt(mass / spread) + 3.0 * eps;
}

/// Build the composite grid for regulator eps, mass m and arrival spread Delta.
///
/// u_max = 8m/(eps^2 Delta) + 25 bounds the discarded regularized-sector mass
/// below e^{-32}; k_max = 6 sqrt(m/Delta) + 3 eps puts the o-sector envelope
/// below 1e-19. Throws DomainError when the node budget cannot resolve the
/// coarse log zone; the message names the required n_log.
inline GridPtr build_momentum_grid(double eps, double mass, double spread, std::size_t n_log,
                                   std::size_t n_lin) {
  if (!(eps > 0.0) || !(mass > 0.0) || !(spread > 0.0))
    throw DomainError("build_momentum_grid: eps, mass and spread must be > 0");
  if (n_log < 16 || n_lin < 16)
    throw DomainError("build_momentum_grid: n_log and n_lin must be >= 16");

  const std::size_t per = kPanelPoints - 1;
  MomentumGrid::Layout L{};
  L.eps = eps;
  L.mass = mass;
  L.spread = spread;
  L.n_log = n_log;
  L.n_lin = n_lin;
  L.u_max = grid_u_max(eps, mass, spread);
  L.k_max = grid_k_max(eps, mass, spread);
  if (!std::isfinite(L.u_max) || L.u_max > 1e15)
    throw DomainError("build_momentum_grid: eps^2 Delta/m too small, log span u_max = " +
                      format_real(L.u_max) + " is not representable");
  L.u_fine = std::min(L.u_max, kFineLogSpan);

  const std::size_t log_panels = (n_log + per - 1) / per;
  const double sigma_u = mass / (eps * eps * spread);
  std::size_t coarse = 0;
  if (L.u_max > L.u_fine)
    coarse = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::ceil((L.u_max - L.u_fine) / (0.5 * sigma_u))));
  const std::size_t min_fine = 4;
  if (log_panels < coarse + min_fine)
    throw DomainError("build_momentum_grid: n_log = " + std::to_string(n_log) +
                      " cannot resolve the log segment; required n_log >= " +
                      std::to_string((coarse + min_fine) * per));
  L.coarse_panels = coarse;
  L.fine_panels = log_panels - coarse;
  L.upper_panels = (n_lin + per - 1) / per;

  const LobattoRule rule = LobattoRule::make(kPanelPoints);
  const std::size_t total_panels = L.coarse_panels + L.fine_panels + L.upper_panels;
  std::vector<GridNode> nodes(total_panels * per + 1);
  std::vector<GridPanel> panels;
  panels.reserve(total_panels);
  const double log_eps = std::log(eps);

  // Log segment, walked from u_max down to 0 so that k increases.
  std::size_t base = 0;
  auto add_log_panel = [&](double u_hi, double u_lo) {
    const double half = 0.5 * (u_hi - u_lo);
    const double mid = 0.5 * (u_hi + u_lo);
    for (std::size_t j = 0; j < kPanelPoints; ++j) {
      const double u = (j == 0) ? u_hi : (j + 1 == kPanelPoints ? u_lo : mid - half * rule.nodes[j]);
      GridNode& n = nodes[base + j];
      n.log_k = log_eps - u;
      n.log_weight += rule.weights[j] * half;
      n.segment = Segment::log;
    }
    panels.push_back({base, Segment::log, half});
    base += per;
  };
  if (coarse > 0) {
    const double h = (L.u_max - L.u_fine) / static_cast<double>(coarse);
    for (std::size_t p = 0; p < coarse; ++p)
      add_log_panel(L.u_max - p * h, (p + 1 == coarse) ? L.u_fine : L.u_max - (p + 1) * h);
  }
  {
    const double h = L.u_fine / static_cast<double>(L.fine_panels);
    for (std::size_t p = 0; p < L.fine_panels; ++p)
      add_log_panel(L.u_fine - p * h, (p + 1 == L.fine_panels) ? 0.0 : L.u_fine - (p + 1) * h);
  }
  const std::size_t knee = base;
  nodes[knee].log_k = log_eps;

  // Upper segment, k = eps + w^2.
  const double w_max = std::sqrt(L.k_max - eps);
  const double hw = w_max / static_cast<double>(L.upper_panels);
  std::vector<double> upper_weight(nodes.size(), 0.0);
  for (std::size_t p = 0; p < L.upper_panels; ++p) {
    const double w_lo = p * hw;
    const double w_hi = (p + 1 == L.upper_panels) ? w_max : (p + 1) * hw;
    const double half = 0.5 * (w_hi - w_lo);
    const double mid = 0.5 * (w_hi + w_lo);
    for (std::size_t j = 0; j < kPanelPoints; ++j) {
      const double w = (j == 0) ? w_lo : (j + 1 == kPanelPoints ? w_hi : mid + half * rule.nodes[j]);
      GridNode& n = nodes[base + j];
      if (base + j != knee) {
        n.k = eps + w * w;
        n.log_k = std::log(n.k);
        n.segment = Segment::upper;
      }
      upper_weight[base + j] += rule.weights[j] * half * 2.0 * w;
    }
    panels.push_back({base, Segment::upper, half});
    base += per;
  }

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    GridNode& n = nodes[i];
    if (i <= knee) n.k = (i == knee) ? eps : std::exp(n.log_k);
    // Upper-segment weights are native dk weights; convert to d(ln k).
    if (upper_weight[i] != 0.0) n.log_weight += upper_weight[i] / n.k;
    n.weight = n.k * n.log_weight;
    n.sqrt_weight = std::exp(0.5 * (n.log_k + std::log(n.log_weight)));
  }
  nodes[knee].segment = Segment::log;
  return std::make_shared<const MomentumGrid>(L, std::move(nodes), std::move(panels), knee);
}

/// Same construction with every resolution doubled.
inline GridPtr refine(const MomentumGrid& g) {
  const auto& L = g.layout();
  return build_momentum_grid(L.eps, L.mass, L.spread, 2 * L.n_log, 2 * L.n_lin);
}

/// CSV dump of the grid: segment,k,weight.
inline void write_grid_csv(std::ostream& os, const MomentumGrid& g) {
  os << "segment,k,weight\n";
  for (const auto& n : g.nodes())
    os << to_string(n.segment) << ',' << format_from_log(1.0, n.log_k) << ','
       << format_from_log(1.0, n.log_k + std::log(n.log_weight)) << '\n';
}

enum class Branch { plus, minus };

inline const char* to_string(Branch b) { return b == Branch::plus ? "+" : "-"; }

/// Provenance of a spectral state.
struct StateLabel {
  std::string kind;
  std::string piece = "full";
  double center = 0.0;
  double spread = 0.0;
  double eps = 0.0;
  double mass = 0.0;
  double arrival_time = 0.0;
};

/// Complex amplitude sampled on a MomentumGrid.
///
/// Amplitudes are stored weighted, phi_i = sqrt(w_i) psi(k_i), so that
/// sums like Sum w |psi|^2 = Sum |phi|^2 stay finite even where psi and w
/// individually leave double range. `plus` holds the k > 0 branch, `minus`
/// the mirror k < 0 branch at the same |k| nodes; an empty vector means no
/// support on that side.
struct SpectralState {
  GridPtr grid;
  std::vector<Complex> plus;
  std::vector<Complex> minus;
  double time = 0.0;
  StateLabel label;

  bool has_plus() const { return !plus.empty(); }
  bool has_minus() const { return !minus.empty(); }

  const std::vector<Complex>& side(Branch b) const { return b == Branch::plus ? plus : minus; }
  std::vector<Complex>& side(Branch b) { return b == Branch::plus ? plus : minus; }

  /// psi(k_i) on the given branch; may be +-inf where it leaves double range.
  Complex psi(Branch b, std::size_t i) const {
    const auto& v = side(b);
    if (v.empty() || v[i] == Complex{0.0, 0.0}) return {0.0, 0.0};
    const auto& n = (*grid)[i];
    return v[i] * std::exp(-0.5 * (n.log_k + std::log(n.log_weight)));
  }

  /// Sum_i w_i |psi_i|^2 over both branches.
  double norm() const {
    CompensatedSum s;
    for (const auto* v : {&plus, &minus})
      for (const auto& phi : *v) s += std::norm(phi);
    return s.value();
  }
};

/// Build a state from sqrt(k) psi(k). This form stays finite for amplitudes
/// that diverge like 1/sqrt(k) at small k.
template <class F>
std::vector<Complex> sample_root_k(const MomentumGrid& g, F&& root_k_psi) {
  std::vector<Complex> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Complex v = root_k_psi(g[i], i);
    out[i] = (v == Complex{0.0, 0.0}) ? v : v * std::sqrt(g[i].log_weight);
  }
  return out;
}

/// Build a state from psi(k) directly.
template <class F>
std::vector<Complex> sample_psi(const MomentumGrid& g, F&& psi) {
  std::vector<Complex> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& n = g[i];
    out[i] = (n.sqrt_weight == 0.0) ? Complex{0.0, 0.0} : psi(n, i) * n.sqrt_weight;
  }
  return out;
}

/// Sum_i w_i obs(k_i) |psi_i|^2 with compensated summation in node order.
/// `obs(node, sign)` receives the node and the branch sign (+1 or -1).
template <class Obs>
Complex integrate_on_grid(const SpectralState& s, Obs&& obs) {
  ComplexCompensatedSum acc;
  const auto& g = *s.grid;
  if (s.has_minus())
    for (std::size_t i = g.size(); i-- > 0;)
      acc += Complex(obs(g[i], -1)) * std::norm(s.minus[i]);
  if (s.has_plus())
    for (std::size_t i = 0; i < g.size(); ++i) acc += Complex(obs(g[i], +1)) * std::norm(s.plus[i]);
  return acc.value();
}

/// Per-node factor variant; factors are indexed like the grid and applied on
/// both branches.
inline Complex integrate_on_grid(const SpectralState& s, const std::vector<Complex>& factor) {
  if (factor.size() != s.grid->size()) throw DomainError("integrate_on_grid: factor size mismatch");
  return integrate_on_grid(s, [&](const GridNode& n, int) {
    return factor[static_cast<std::size_t>(&n - s.grid->nodes().data())];
  });
}

/// Sum_i w_i conj(psi_a) obs psi_b.
template <class Obs>
Complex bilinear_on_grid(const SpectralState& a, const SpectralState& b, Obs&& obs) {
  if (a.grid != b.grid) throw GridMismatch();
  ComplexCompensatedSum acc;
  const auto& g = *a.grid;
  if (a.has_minus() && b.has_minus())
    for (std::size_t i = g.size(); i-- > 0;)
      acc += std::conj(a.minus[i]) * Complex(obs(g[i], -1)) * b.minus[i];
  if (a.has_plus() && b.has_plus())
    for (std::size_t i = 0; i < g.size(); ++i)
      acc += std::conj(a.plus[i]) * Complex(obs(g[i], +1)) * b.plus[i];
  return acc.value();
}

/// CSV dump of a state: k,re,im,weight (mirror branch first, k ascending).
inline void write_state_csv(std::ostream& os, const SpectralState& s) {
  os << "k,re,im,weight\n";
  const auto& g = *s.grid;
  auto row = [&](const GridNode& n, double sign, Complex phi) {
    const double log_w = n.log_k + std::log(n.log_weight);
    std::string re = "0", im = "0";
    if (phi != Complex{0.0, 0.0}) {
      const double log_mod = std::log(std::abs(phi)) - 0.5 * log_w;
      const double ph = std::arg(phi);
      const double c = std::cos(ph), sn = std::sin(ph);
      re = (c == 0.0) ? "0" : format_from_log(c < 0 ? -1.0 : 1.0, log_mod + std::log(std::abs(c)));
      im = (sn == 0.0) ? "0" : format_from_log(sn < 0 ? -1.0 : 1.0, log_mod + std::log(std::abs(sn)));
    }
    os << format_from_log(sign, n.log_k) << ',' << re << ',' << im << ','
       << format_from_log(1.0, log_w) << '\n';
  };
  if (s.has_minus())
    for (std::size_t i = g.size(); i-- > 0;) row(g[i], -1.0, s.minus[i]);
  if (s.has_plus())
    for (std::size_t i = 0; i < g.size(); ++i) row(g[i], 1.0, s.plus[i]);
}

}  // namespace toa
