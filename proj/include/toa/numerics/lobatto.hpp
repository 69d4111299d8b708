#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "toa/error.hpp"

namespace toa {

/// Gauss-Lobatto-Legendre rule on [-1, 1] with n points (endpoints included),
/// its nodal differentiation matrix, and the projection of nodal values onto
/// the two highest Legendre modes (used as a per-panel resolution check).
struct LobattoRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  /// diff[i * n + j] = l_j'(x_i)
  std::vector<double> diff;
  /// tail[r * n + j], r = 0, 1: coefficient of P_{n-1}, P_{n-2} from value j
  std::vector<double> tail;

  std::size_t size() const { return nodes.size(); }

  static LobattoRule make(std::size_t n) {
    if (n < 3) throw DomainError("LobattoRule: need at least 3 points");
    LobattoRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const std::size_t N = n - 1;
    auto legendre = [N](double x, double& pn, double& pn1) {
      // P_N and P_{N-1}
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= N; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pn = p1;
      pn1 = p0;
    };
    for (std::size_t i = 0; i < n; ++i) {
      double x = -std::cos(M_PI * static_cast<double>(i) / N);
      if (i != 0 && i != N) {
        // Newton on (1 - x^2) P_N'(x) = N (P_{N-1} - x P_N)
        for (int it = 0; it < 100; ++it) {
          double pn, pn1;
          legendre(x, pn, pn1);
          const double g = pn1 - x * pn;  // proportional to (1-x^2) P_N'
          // d/dx (P_{N-1} - x P_N) = -(N+1) P_N   (Legendre identity)
          const double dg = -(N + 1.0) * pn;
          const double step = g / dg;
          x -= step;
          if (std::abs(step) < 1e-16) break;
        }
      }
      r.nodes[i] = x;
      double pn, pn1;
      legendre(x, pn, pn1);
      r.weights[i] = 2.0 / (N * (N + 1.0) * pn * pn);
    }
    // Differentiation matrix.
    r.diff.assign(n * n, 0.0);
    std::vector<double> pN(n);
    for (std::size_t i = 0; i < n; ++i) {
      double pn, pn1;
      legendre(r.nodes[i], pn, pn1);
      pN[i] = pn;
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double v = 0.0;
        if (i != j)
          v = pN[i] / (pN[j] * (r.nodes[i] - r.nodes[j]));
        else if (i == 0)
          v = -0.25 * N * (N + 1.0);
        else if (i == N)
          v = 0.25 * N * (N + 1.0);
        r.diff[i * n + j] = v;
      }
    // Legendre projection of the two highest modes. Lobatto quadrature is exact
    // for degree <= 2N-1, so mode N-1 is exact; mode N uses the discrete norm
    // 2/N of P_N on the Lobatto points.
    r.tail.assign(2 * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double pn, pn1;
      legendre(r.nodes[j], pn, pn1);
      r.tail[j] = r.weights[j] * pn / (2.0 / N);
      r.tail[n + j] = r.weights[j] * pn1 * (2.0 * (N - 1.0) + 1.0) / 2.0;
    }
    return r;
  }
};

}  // namespace toa
