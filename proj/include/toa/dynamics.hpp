#pragma once

// Free evolution and the transform to position space.
//
// amplitude(x) = (2 pi)^{-1/2} Sum_i w_i psi(k_i) e^{i k_i x}, plus the mirror
// branch with e^{-i k_i x}. The sum is a composite Lobatto quadrature, so each
// panel's top Legendre coefficients of the integrand give a local error
// estimate; beyond x_res = pi / (largest node spacing on the support) the
// phase is no longer sampled and samples are flagged untrusted.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "toa/error.hpp"
#include "toa/grid.hpp"
#include "toa/numerics/quadrature.hpp"
#include "toa/numerics/special.hpp"
#include "toa/parallel.hpp"
#include "toa/states.hpp"

namespace toa {

/// Flags attached to position and arrival samples.
enum SampleFlag : int {
  kFlagOk = 0,
  kFlagUntrusted = 1,   // beyond the phase-resolution bound
  kFlagUnresolved = 2,  // quadrature error estimate above tolerance
};

/// e^{-i k^2 t / 2m} on every node; |psi| is unchanged.
inline SpectralState propagate(SpectralState s, double t) {
  if (!std::isfinite(t)) throw DomainError("propagate: time must be finite");
  if (t == 0.0) return s;
  const auto& g = *s.grid;
  const double m = s.label.mass > 0.0 ? s.label.mass : 1.0;
  for (auto* v : {&s.plus, &s.minus}) {
    if (v->empty()) continue;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if ((*v)[i] == Complex{0.0, 0.0}) continue;
      const double k = g[i].k;
      (*v)[i] *= std::polar(1.0, -k * k * t / (2.0 * m));
    }
  }
  s.time += t;
  return s;
}

struct PositionDensity {
  std::vector<double> x;
  std::vector<double> density;
  std::vector<Complex> amplitude;
  /// Estimated absolute error of each amplitude.
  std::vector<double> error;
  std::vector<int> flags;
  double time = 0.0;
  double x_resolution = 0.0;
  StateLabel label;
};

/// Precomputed transform data for one state.
class PositionTransform {
 public:
  explicit PositionTransform(const SpectralState& s) : s_(s) {
    const auto& g = *s.grid;
    const auto& rule = g.rule();
    const std::size_t P = rule.size();
    // w_i psi_i = sqrt(w_i) phi_i
    for (auto* src : {&s.plus, &s.minus}) {
      auto& dst = (src == &s.plus) ? wpsi_plus_ : wpsi_minus_;
      if (src->empty()) continue;
      dst.resize(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] = (*src)[i] * g[i].sqrt_weight;
    }
    // Per panel node: psi * dk/dxi = phi * jac.
    jac_.resize(g.panels().size() * P);
    for (std::size_t p = 0; p < g.panels().size(); ++p) {
      const auto& pan = g.panels()[p];
      for (std::size_t j = 0; j < P; ++j) {
        const auto& n = g[pan.first + j];
        double J;
        if (pan.segment == Segment::log) {
          // psi k h = phi sqrt(k / dlw) h
          J = std::exp(0.5 * (n.log_k - std::log(n.log_weight))) * pan.half;
        } else {
          const double w = std::sqrt(std::max(0.0, n.k - g.eps()));
          J = (w == 0.0) ? 0.0 : 2.0 * w * pan.half / n.sqrt_weight;
        }
        jac_[p * P + j] = J;
      }
    }
    // Phase-resolution bound from the support.
    double gap = 0.0;
    std::size_t prev = g.size();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const bool on = (s.has_plus() && s.plus[i] != Complex{0.0, 0.0}) ||
                      (s.has_minus() && s.minus[i] != Complex{0.0, 0.0});
      if (!on) continue;
      if (prev < g.size()) gap = std::max(gap, g[i].k - g[prev].k);
      prev = i;
    }
    x_res_ = gap > 0.0 ? kPi / gap : std::numeric_limits<double>::infinity();
    scale_ = std::sqrt(s.norm());
  }

  double x_resolution() const { return x_res_; }

  /// Amplitude at x with its error estimate.
  Complex amplitude(double x, double* error = nullptr) const {
    const auto& g = *s_.grid;
    const std::size_t N = g.size();
    thread_local std::vector<Complex> phase;
    phase.resize(N);
    for (std::size_t i = 0; i < N; ++i) phase[i] = std::polar(1.0, g[i].k * x);
    ComplexCompensatedSum acc;
    if (!wpsi_minus_.empty())
      for (std::size_t i = N; i-- > 0;) acc += wpsi_minus_[i] * std::conj(phase[i]);
    if (!wpsi_plus_.empty())
      for (std::size_t i = 0; i < N; ++i) acc += wpsi_plus_[i] * phase[i];
    const double inv = 1.0 / std::sqrt(2.0 * kPi);
    if (error) {
      const auto& rule = g.rule();
      const std::size_t P = rule.size();
      double err = 0.0;
      for (std::size_t p = 0; p < g.panels().size(); ++p) {
        const std::size_t first = g.panels()[p].first;
        for (int side = 0; side < 2; ++side) {
          const auto& phi = side == 0 ? s_.plus : s_.minus;
          if (phi.empty()) continue;
          Complex c0 = 0.0, c1 = 0.0;
          for (std::size_t j = 0; j < P; ++j) {
            const std::size_t i = first + j;
            if (phi[i] == Complex{0.0, 0.0}) continue;
            const Complex F =
                phi[i] * jac_[p * P + j] * (side == 0 ? phase[i] : std::conj(phase[i]));
            c0 += rule.tail[j] * F;
            c1 += rule.tail[P + j] * F;
          }
          err += std::abs(c0) + std::abs(c1);
        }
      }
      *error = err * inv + 1e-15 * scale_;
    }
    return acc.value() * inv;
  }

  const SpectralState& state() const { return s_; }

 private:
  const SpectralState& s_;
  std::vector<Complex> wpsi_plus_;
  std::vector<Complex> wpsi_minus_;
  std::vector<double> jac_;
  double x_res_ = 0.0;
  double scale_ = 0.0;
};

/// Relative (to the state's norm scale) error above which a sample is flagged.
inline constexpr double kUnresolvedTolerance = 1e-6;

inline PositionDensity to_position(const SpectralState& s, const std::vector<double>& xs,
                                   unsigned workers = 1) {
  for (double x : xs)
    if (!std::isfinite(x)) throw DomainError("to_position: x must be finite");
  const PositionTransform tr(s);
  const double scale = std::sqrt(s.norm());
  struct Sample {
    Complex amp;
    double err;
  };
  const auto samples = parallel_map(
      xs.size(),
      [&](std::size_t i) {
        Sample out{};
        out.amp = tr.amplitude(xs[i], &out.err);
        return out;
      },
      workers);
  PositionDensity d;
  d.x = xs;
  d.time = s.time;
  d.label = s.label;
  d.x_resolution = tr.x_resolution();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto& smp = samples[i];
    if (!detail::finite(smp.amp)) throw NumericalFailure("to_position: non-finite amplitude");
    d.amplitude.push_back(smp.amp);
    d.density.push_back(std::norm(smp.amp));
    d.error.push_back(smp.err);
    int flag = kFlagOk;
    if (std::abs(xs[i]) > d.x_resolution) flag |= kFlagUntrusted;
    if (smp.err > kUnresolvedTolerance * scale) flag |= kFlagUnresolved;
    d.flags.push_back(flag);
  }
  return d;
}

/// n equally spaced points on [a, b].
inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = (n == 1) ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

struct WindowResult {
  double probability = 0.0;
  double error = 0.0;
  bool untrusted = false;
  /// "unit" when the input had unit discrete norm, otherwise "raw".
  std::string normalization;
  double norm = 0.0;
};

/// P = Int_{-dw}^{dw} |amplitude(x, t)|^2 dx, with the state evolved from its
/// own time to t. Integrated adaptively in x.
inline WindowResult window_probability(const SpectralState& state, double t, double half_width,
                                       double rel_tol = 1e-8) {
  if (!(half_width > 0.0)) throw DomainError("window_probability: half width must be > 0");
  const SpectralState s = propagate(state, t - state.time);
  const PositionTransform tr(s);
  WindowResult r;
  r.norm = s.norm();
  r.normalization = std::abs(r.norm - 1.0) < 1e-9 ? "unit" : "raw";
  r.untrusted = half_width > tr.x_resolution();
  QuadratureSpec spec;
  spec.integrand = [&tr](double x) { return Complex(std::norm(tr.amplitude(x))); };
  spec.lower = -half_width;
  spec.upper = half_width;
  spec.rel_tol = rel_tol;
  spec.abs_tol = 1e-14 * r.norm;
  // Start from panels no wider than the shortest structure the spectrum allows.
  const double kmax = s.grid->k_max();
  spec.oscillation_rate = std::min(kmax, 64.0 / half_width);
  spec.max_panels = 20000;
  const auto res = adaptive_integrate(spec);
  r.probability = res.value.real();
  r.error = res.error;
  if (!res.converged) r.untrusted = true;
  return r;
}

/// Full width at half maximum of |amplitude|^2 around a peak at x0, found by
/// stepping out in units of x_scale/64 and bisecting each crossing.
inline double density_fwhm(const SpectralState& s, double x_scale, double x0 = 0.0) {
  const PositionTransform tr(s);
  auto rho = [&](double x) { return std::norm(tr.amplitude(x)); };
  const double half = 0.5 * rho(x0);
  auto crossing = [&](double dir) {
    double inner = x0, outer = x0;
    const double step = x_scale / 64.0;
    for (int i = 0; i < 64 * 200; ++i) {
      outer = x0 + dir * step * (i + 1);
      if (rho(outer) < half) break;
      inner = outer;
      if (i + 1 == 64 * 200) throw NumericalFailure("density_fwhm: no half-maximum crossing");
    }
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (inner + outer);
      (rho(mid) >= half ? inner : outer) = mid;
    }
    return 0.5 * (inner + outer);
  };
  return crossing(1.0) - crossing(-1.0);
}

/// Int_{-X}^{X} |amplitude|^2 dx for each X in the ascending list `xs`,
/// accumulated interval by interval.
inline std::vector<WindowResult> cumulative_density(const SpectralState& s,
                                                    const std::vector<double>& xs,
                                                    double rel_tol = 1e-9) {
  const PositionTransform tr(s);
  std::vector<WindowResult> out;
  double acc = 0.0, err = 0.0, lo = 0.0;
  for (double X : xs) {
    if (!(X > lo)) throw DomainError("cumulative_density: half widths must be positive and ascending");
    for (double sign : {1.0, -1.0}) {
      QuadratureSpec spec;
      spec.integrand = [&tr, sign](double x) { return Complex(std::norm(tr.amplitude(sign * x))); };
      spec.lower = lo;
      spec.upper = X;
      spec.rel_tol = rel_tol;
      spec.abs_tol = 1e-15 * s.norm();
      spec.oscillation_rate = std::min(s.grid->k_max(), 64.0 / (X - lo));
      spec.max_panels = 20000;
      const auto r = adaptive_integrate(spec);
      acc += r.value.real();
      err += r.error;
    }
    WindowResult w;
    w.probability = acc;
    w.error = err;
    w.norm = s.norm();
    w.normalization = std::abs(w.norm - 1.0) < 1e-9 ? "unit" : "raw";
    w.untrusted = X > tr.x_resolution();
    out.push_back(w);
    lo = X;
  }
  return out;
}

struct ArrivalCurve {
  std::vector<double> times;
  std::vector<double> probability;
  std::vector<double> error;
  std::vector<int> flags;
  double half_width = 0.0;
  std::string normalization;
};

/// Window probability of the unit-normalized coherent state at each time.
inline ArrivalCurve arrival_curve(const Params& p, GridPtr grid, const std::vector<double>& times,
                                  double half_width, unsigned workers = 1,
                                  SplitTag split = SplitTag::full) {
  for (double t : times)
    if (!std::isfinite(t)) throw DomainError("arrival_curve: times must be finite");
  const SpectralState s = coherent_unit(p, grid, split);
  const auto res = parallel_map(
      times.size(), [&](std::size_t i) { return window_probability(s, times[i], half_width); },
      workers);
  ArrivalCurve c;
  c.times = times;
  c.half_width = half_width;
  c.normalization = "unit";
  for (const auto& r : res) {
    c.probability.push_back(r.probability);
    c.error.push_back(r.error);
    c.flags.push_back(r.untrusted ? kFlagUntrusted : kFlagOk);
  }
  return c;
}

}  // namespace toa
