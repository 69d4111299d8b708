#pragma once

// Text formatting for CSV/JSON output. Values deep in the logarithmic grid
// segment (k ~ eps e^{-10^4}) are outside double range, so they are carried
// as logarithms and printed with an arbitrary decimal exponent.

#include <cmath>
#include <complex>
#include <cstdio>
#include <string>

namespace toa {

/// Shortest round-trip representation of a double.
inline std::string format_real(double v) {
  if (v == 0.0) return "0";
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// sign * exp(log_abs) in scientific notation, valid for any finite log_abs.
inline std::string format_from_log(double sign, double log_abs) {
  if (sign == 0.0 || (std::isinf(log_abs) && log_abs < 0)) return "0";
  if (log_abs > -700.0 && log_abs < 700.0) return format_real(sign * std::exp(log_abs));
  const double l10 = log_abs / std::log(10.0);
  double e = std::floor(l10);
  double mant = std::pow(10.0, l10 - e);
  if (mant >= 10.0) {
    mant /= 10.0;
    e += 1.0;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%.15fe%+.0f", sign < 0 ? "-" : "", mant, e);
  return buf;
}

}  // namespace toa
