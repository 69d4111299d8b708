#pragma once

// Figure data: o-sector density widths and eps-sector tails at the arrival time.

#include <algorithm>
#include <cmath>
#include <vector>

#include "toa/dynamics.hpp"
#include "toa/states.hpp"

namespace toa {

struct WidthCurve {
  Params params;
  PositionDensity density;
  double fwhm = 0.0;
  /// x of the largest sampled density.
  double peak_x = 0.0;
};

/// o-sector density |amplitude|^2 of the unit coherent state at t = tau.
/// xs are in units of sqrt(Delta/m).
inline WidthCurve width_curve(const Params& p, std::size_t n_log, std::size_t n_lin,
                              const std::vector<double>& xs, unsigned workers = 1) {
  p.validate();
  const auto grid = build_momentum_grid(p.eps, p.mass, p.spread, n_log, n_lin);
  const auto s = propagate(coherent_unit(p, grid, SplitTag::o_piece), p.center);
  const double scale = std::sqrt(p.spread / p.mass);
  std::vector<double> x(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) x[i] = xs[i] * scale;
  WidthCurve c;
  c.params = p;
  c.density = to_position(s, x, workers);
  c.fwhm = density_fwhm(s, scale);
  const auto it = std::max_element(c.density.density.begin(), c.density.density.end());
  if (it != c.density.density.end()) c.peak_x = x[static_cast<std::size_t>(it - c.density.density.begin())];
  return c;
}

struct TailCurve {
  Params params;
  /// eps x
  std::vector<double> scaled_x;
  /// (1/eps) |amplitude|^2, so that Int density d(eps x) is a probability
  std::vector<double> scaled_density;
  std::vector<int> flags;
  double origin_density = 0.0;
  /// Two-sided cumulative mass at the fit points.
  std::vector<double> fit_x;
  std::vector<double> cumulative;
  std::vector<double> cumulative_error;
  double slope = 0.0;
  /// slope / (eps^2 Delta / m); tends to 1/sqrt(2 pi) for small parameter
  double slope_ratio = 0.0;
  bool fit_untrusted = false;
};

/// Least-squares slope of y against ln x.
inline double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double l = std::log(x[i]);
    sx += l;
    sy += y[i];
    sxx += l * l;
    sxy += l * y[i];
  }
  const double d = n * sxx - sx * sx;
  if (!(d > 0.0)) throw DomainError("log_slope: need at least two distinct points");
  return (n * sxy - sx * sy) / d;
}

/// Asymptotic slope of the two-sided cumulative eps-sector mass per unit ln x,
/// in units of eps^2 Delta / m.
inline double tail_slope_constant() { return 1.0 / std::sqrt(2.0 * kPi); }

/// eps-sector density of the unit coherent state at t = tau for
/// eps^2 Delta / m = smallness with Delta and m taken from p. The cumulative
/// fit uses 21 points log-spaced over 1 < eps x < min(100, e^{1/smallness}/10).
inline TailCurve tail_curve(Params p, double smallness, std::size_t n_log, std::size_t n_lin,
                            const std::vector<double>& scaled_xs, unsigned workers = 1) {
  if (!(smallness > 0.0)) throw DomainError("smallness: must be > 0");
  p.eps = std::sqrt(smallness * p.mass / p.spread);
  p.validate();
  const auto grid = build_momentum_grid(p.eps, p.mass, p.spread, n_log, n_lin);
  const auto s = propagate(coherent_unit(p, grid, SplitTag::eps_piece), p.center);
  TailCurve c;
  c.params = p;
  std::vector<double> x(scaled_xs.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = scaled_xs[i] / p.eps;
  const auto d = to_position(s, x, workers);
  c.scaled_x = scaled_xs;
  for (std::size_t i = 0; i < x.size(); ++i) c.scaled_density.push_back(d.density[i] / p.eps);
  c.flags = d.flags;
  c.origin_density = std::norm(PositionTransform(s).amplitude(0.0)) / p.eps;

  const double hi = std::min(100.0, std::exp(std::min(700.0, 1.0 / smallness)) / 10.0);
  if (!(hi > 1.0)) throw DomainError("smallness: fit range 1 < eps x < e^{m/(eps^2 Delta)}/10 is empty");
  std::vector<double> X;
  for (int j = 0; j <= 20; ++j) X.push_back(std::pow(hi, j / 20.0) / p.eps);
  const auto cum = cumulative_density(s, X);
  for (std::size_t j = 0; j < X.size(); ++j) {
    c.fit_x.push_back(X[j] * p.eps);
    c.cumulative.push_back(cum[j].probability);
    c.cumulative_error.push_back(cum[j].error);
    if (cum[j].untrusted) c.fit_untrusted = true;
  }
  c.slope = log_slope(c.fit_x, c.cumulative);
  c.slope_ratio = c.slope / smallness;
  return c;
}

}  // namespace toa
