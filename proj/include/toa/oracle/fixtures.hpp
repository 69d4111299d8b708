#pragma once

// Reference fixtures: named oracle values with their error estimates,
// serialized as a JSON array. Regeneration is deterministic; an existing
// file is only overwritten when no value moved by more than 10x its
// recorded error, unless regeneration is forced.

#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "toa/error.hpp"
#include "toa/oracle/physics.hpp"
#include "toa/oracle/romberg.hpp"
#include "toa/oracle/series.hpp"
#include "toa/parallel.hpp"

namespace toa::oracle {

inline constexpr const char* kSpecVersion = "1.0";

struct Fixture {
  std::string name;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  double value_re = 0.0;
  double value_im = 0.0;
  double err = 0.0;
  std::string algo;
  std::string spec_version = kSpecVersion;

  Complex value() const { return {value_re, value_im}; }
};

inline Fixture make_fixture(std::string name, nlohmann::ordered_json params, Complex v, double err,
                            std::string algo) {
  Fixture f;
  f.name = std::move(name);
  f.params = std::move(params);
  f.value_re = v.real();
  f.value_im = v.imag();
  f.err = err > 0.0 ? err : 1e-300;
  f.algo = std::move(algo);
  return f;
}

inline nlohmann::ordered_json to_json(const Fixture& f) {
  nlohmann::ordered_json j;
  j["name"] = f.name;
  j["params"] = f.params;
  j["value_re"] = f.value_re;
  j["value_im"] = f.value_im;
  j["err"] = f.err;
  j["algo"] = f.algo;
  j["spec_version"] = f.spec_version;
  return j;
}

inline Fixture from_json(const nlohmann::ordered_json& j) {
  static const char* keys[] = {"name", "params", "value_re", "value_im", "err", "algo", "spec_version"};
  if (!j.is_object() || j.size() != 7) throw DomainError("fixture: expected exactly 7 fields");
  for (const char* k : keys)
    if (!j.contains(k)) throw DomainError(std::string("fixture: missing field ") + k);
  Fixture f;
  f.name = j["name"].get<std::string>();
  f.params = j["params"];
  f.value_re = j["value_re"].get<double>();
  f.value_im = j["value_im"].get<double>();
  f.err = j["err"].get<double>();
  f.algo = j["algo"].get<std::string>();
  f.spec_version = j["spec_version"].get<std::string>();
  if (!(f.err > 0.0)) throw DomainError("fixture " + f.name + ": err must be > 0");
  return f;
}

inline std::string serialize(const std::vector<Fixture>& fx) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& f : fx) arr.push_back(to_json(f));
  return arr.dump(2) + "\n";
}

inline std::vector<Fixture> parse_fixtures(const std::string& text) {
  const auto arr = nlohmann::ordered_json::parse(text);
  if (!arr.is_array()) throw DomainError("fixture file: expected a JSON array");
  std::vector<Fixture> out;
  for (const auto& j : arr) out.push_back(from_json(j));
  return out;
}

inline std::vector<Fixture> read_fixtures(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("fixture file not readable: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_fixtures(ss.str());
}

inline const Fixture& find_fixture(const std::vector<Fixture>& fx, const std::string& name) {
  for (const auto& f : fx)
    if (f.name == name) return f;
  throw DomainError("fixture not found: " + name);
}

/// Names of fixtures in `fresh` that moved by more than 10x the recorded error
/// of the same-named entry in `old`.
inline std::vector<std::string> moved_fixtures(const std::vector<Fixture>& old,
                                               const std::vector<Fixture>& fresh) {
  std::vector<std::string> out;
  for (const auto& n : fresh)
    for (const auto& o : old)
      if (o.name == n.name && std::abs(n.value() - o.value()) > 10.0 * o.err) out.push_back(n.name);
  return out;
}

/// Write `fx` to `path`. Throws FixtureMismatch when an existing file holds
/// values that moved beyond tolerance and `regenerate` is false.
inline void write_fixtures(const std::string& path, const std::vector<Fixture>& fx, bool regenerate) {
  if (!regenerate) {
    std::ifstream probe(path);
    if (probe) {
      probe.close();
      const auto moved = moved_fixtures(read_fixtures(path), fx);
      if (!moved.empty()) {
        std::string msg = "fixtures moved beyond 10x their recorded error:";
        for (const auto& m : moved) msg += " " + m;
        throw FixtureMismatch(msg + " (pass the regenerate flag to overwrite)");
      }
    }
  }
  std::ofstream out(path);
  if (!out) throw DomainError("fixture file not writable: " + path);
  out << serialize(fx);
}

using Json = nlohmann::ordered_json;

inline std::string fmt_tag(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

/// Fixture recipes; each entry computes one fixture.
inline std::vector<std::function<Fixture()>> fixture_recipes() {
  std::vector<std::function<Fixture()>> r;

  r.push_back([] {
    const Complex v = erf_series(1.0);
    return make_fixture("phi_1", Json{{"z_re", 1.0}, {"z_im", 0.0}}, v, 1e-16 * std::abs(v),
                        "taylor-series-binary128");
  });
  r.push_back([] {
    const auto res = parabolic_cylinder_integral(-0.75, 0.0);
    return make_fixture("pcf_m0.75_0", Json{{"p", -0.75}, {"z_re", 0.0}, {"z_im", 0.0}}, res.value,
                        res.error, "romberg-r4-map");
  });
  r.push_back([] {
    const Complex v = lower_gamma_series(0.5, 2.0);
    return make_fixture("lower_gamma_0.5_2", Json{{"s_re", 0.5}, {"s_im", 0.0}, {"z_re", 2.0}, {"z_im", 0.0}},
                        v, 1e-16 * std::abs(v), "alternating-series-binary128");
  });

  for (double s : {1e-1, 1e-2, 1e-4}) {
    r.push_back([s] {
      PhysParams p;
      p.mass = 1.0;
      p.spread = 10.0;
      p.eps = std::sqrt(s * p.mass / p.spread);
      const auto n = sector_norms(p);
      const double e = n.eps_piece.value.real(), o = n.o_piece.value.real();
      const double frac = e / (e + o);
      const double err = (n.eps_piece.error + n.o_piece.error) / (e + o);
      return make_fixture("split_fraction_" + fmt_tag(s),
                          Json{{"smallness", s}, {"mass", p.mass}, {"spread", p.spread}, {"eps", p.eps}},
                          frac, err, "romberg-trapezoid");
    });
  }
  r.push_back([] {
    PhysParams p;
    p.mass = 1.0;
    p.spread = 10.0;
    p.eps = 0.1;
    const auto n = sector_norms(p);
    return make_fixture("eps_norm_0.1",
                        Json{{"mass", p.mass}, {"spread", p.spread}, {"eps", p.eps}},
                        n.eps_piece.value, n.eps_piece.error, "romberg-trapezoid");
  });
  r.push_back([] {
    PhysParams p;
    p.mass = 1.0;
    p.spread = 10.0;
    p.eps = 0.1;
    const double kmax = 6.0 * std::sqrt(p.mass / p.spread) + 3.0 * p.eps;
    const auto t = tail_beyond(p, kmax);
    return make_fixture("kmax_tail", Json{{"mass", p.mass}, {"spread", p.spread}, {"eps", p.eps}, {"k_max", kmax}},
                        t.value, t.error, "romberg-trapezoid");
  });
  r.push_back([] {
    const auto e = energy_constant();
    return make_fixture("energy_constant", Json{{"mass", 1.0}, {"spread", 1.0}, {"eps", 0.0}}, e.value,
                        e.error, "romberg-trapezoid");
  });
  for (double s : {0.5, 1.0, 2.0}) {
    r.push_back([s] {
      PhysParams p;
      p.mass = 1.0;
      p.spread = 1.0;
      p.eps = 0.1;
      const auto o = overlap_ratio(p, s * p.spread);
      return make_fixture("overlap_ratio_" + fmt_tag(s),
                          Json{{"separation", s}, {"mass", p.mass}, {"spread", p.spread}, {"eps", p.eps}},
                          o.value, o.error, "romberg-trapezoid");
    });
  }
  r.push_back([] {
    PhysParams p;
    p.mass = 1.0;
    p.spread = 1.0;
    p.eps = 0.01;
    const double seps[] = {10.0, 15.0, 20.0, 30.0};
    const auto a = o_overlap_fit(p, seps, 4);
    return make_fixture("o_overlap_fit_A",
                        Json{{"mass", p.mass}, {"spread", p.spread}, {"eps", p.eps},
                             {"separations", Json::array({10.0, 15.0, 20.0, 30.0})}},
                        a.value.real(), a.error, "romberg-trapezoid-lsq");
  });
  r.push_back([] {
    PhysParams p;
    p.mass = 1.0;
    p.spread = 1.0;
    p.eps = 0.1;
    const auto v = eps_tau_double(10.0, p);
    return make_fixture("eps_tau_ex1", Json{{"mass", p.mass}, {"spread", p.spread}, {"eps", p.eps}, {"x", 10.0}},
                        v.value, v.error, "nested-romberg");
  });
  r.push_back([] {
    PhysParams p;
    p.mass = 1.0;
    p.eps = 0.1;
    const auto v = gex_integral(10.0, p);
    return make_fixture("gex_ex1", Json{{"mass", p.mass}, {"eps", p.eps}, {"x", 10.0}}, v.value, v.error,
                        "romberg-r4-map");
  });
  r.push_back([] {
    const auto v = o_window_capture(10.0, 1.0, 1.0);
    return make_fixture("o_window_capture_10", Json{{"mass", 1.0}, {"spread", 1.0}, {"half_width", 10.0}},
                        v.value.real(), v.error, "nested-romberg");
  });
  r.push_back([] {
    const auto v = o_tau_integral(0.1, 1.0, 1.0);
    return make_fixture("o_tau_0.1", Json{{"mass", 1.0}, {"spread", 1.0}, {"x", 0.1}}, v.value, v.error,
                        "romberg-r2-map");
  });
  for (double s : {1.0, 0.5, 0.3, 0.2, 0.15, 0.1}) {
    r.push_back([s] {
      PhysParams p;
      p.mass = 1.0;
      p.spread = 1.0;
      p.eps = std::sqrt(s);
      p.delta_exp = 0.2;
      const auto n = sector_norms(p);
      const double ratio = n.eps_piece.value.real() / n.o_piece.value.real();
      const double err = ratio * (n.eps_piece.error / n.eps_piece.value.real() +
                                  n.o_piece.error / n.o_piece.value.real());
      return make_fixture("power_ratio_" + fmt_tag(s),
                          Json{{"smallness", s}, {"delta_exp", 0.2}, {"mass", 1.0}, {"spread", 1.0}}, ratio,
                          err, "romberg-trapezoid");
    });
  }
  return r;
}

/// All fixtures, in recipe order regardless of the worker count.
inline std::vector<Fixture> generate_fixtures(unsigned workers = 1) {
  const auto recipes = fixture_recipes();
  return parallel_map(recipes.size(), [&](std::size_t i) { return recipes[i](); }, workers);
}

}  // namespace toa::oracle
