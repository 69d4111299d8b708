// Build a coherent arrival state, split its norm and watch how much of it
// reaches the origin on time.

#include <cmath>
#include <cstdio>

#include "toa.hpp"

int main() {
  toa::Params p;
  p.mass = 1.0;
  p.spread = 1.0;
  p.eps = 0.01;

  const auto grid = toa::build_momentum_grid(p.eps, p.mass, p.spread, 2048, 512);
  const auto split = toa::norm_split(p, grid);
  std::printf("eps^2 Delta/m = %g\n", p.smallness());
  std::printf("eps-sector share of the norm: %.6f (grid change %.1e)\n", split.fraction_eps, split.grid_delta);

  const double window = 10.0 * std::sqrt(p.spread / p.mass);
  const auto full = toa::coherent_unit(p, grid);
  const auto o = toa::coherent_unit(p, grid, toa::SplitTag::o_piece);
  const auto wf = toa::window_probability(full, p.center, window);
  const auto wo = toa::window_probability(o, p.center, window);
  std::printf("captured in |x| < %g at t = tau: full %.4f, o-piece %.4f of %.4f\n", window, wf.probability,
              wo.probability, wo.norm);

  const auto d = toa::to_position(full, toa::linspace(-3.0, 3.0, 7));
  for (std::size_t i = 0; i < d.x.size(); ++i) std::printf("  x = %+.1f  |psi|^2 = %.6f\n", d.x[i], d.density[i]);
  return 0;
}
