#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "toa/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path workdir() {
  static const fs::path d = [] {
    auto p = fs::temp_directory_path() / ("toa_cli_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

// runs the binary inside the scratch dir; env is prepended verbatim
int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = "cd '" + workdir().string() + "' && env -u TOA_WORKERS " + env + " '" + TOA_CLI_PATH +
                          "' " + args + " > last.out 2> last.err";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json manifest(const std::string& dir, const std::string& cmd) {
  return json::parse(slurp(workdir() / dir / (cmd + ".manifest.json")));
}

const std::string kSmall = " --n_log 256 --n_lin 128";

}  // namespace

TEST(Config, ParsesFlatText) {
  const auto m = toa::cli::parse_config_text("# c\n\n eps = 0.05 \nmass=2\n", "t");
  EXPECT_EQ(m.at("eps"), "0.05");
  EXPECT_EQ(m.at("mass"), "2");
  EXPECT_THROW(toa::cli::parse_config_text("bogus=1\n", "t"), toa::cli::ConfigError);
  EXPECT_THROW(toa::cli::parse_config_text("eps 0.1\n", "t"), toa::cli::ConfigError);
}

TEST(Config, LayersAndSources) {
  toa::cli::Config c;
  EXPECT_EQ(c.str("eps"), "0.1");
  EXPECT_EQ(c.source("eps"), "default");
  c.apply({{"eps", "0.2"}, {"mass", "3"}}, "file");
  c.apply({{"eps", "0.3"}}, "flag");
  EXPECT_EQ(c.num("eps"), 0.3);
  EXPECT_EQ(c.source("eps"), "flag");
  EXPECT_EQ(c.num("mass"), 3.0);
  EXPECT_EQ(c.source("mass"), "file");
  c.apply({{"x_count", "abc"}}, "flag");
  EXPECT_THROW(c.count("x_count"), toa::cli::ConfigError);
}

TEST(Cli, PrecedenceFlagsOverFileOverDefaults) {
  std::ofstream(workdir() / "p.cfg") << "eps=0.05\nmass=2\n";
  ASSERT_EQ(run_cli("split --config p.cfg --eps 0.07 --out prec" + kSmall), 0) << slurp(workdir() / "last.err");
  const auto cfg = manifest("prec", "split")["config"];
  EXPECT_EQ(cfg["eps"]["value"], "0.07");
  EXPECT_EQ(cfg["eps"]["source"], "flag");
  EXPECT_EQ(cfg["mass"]["value"], "2");
  EXPECT_EQ(cfg["mass"]["source"], "file");
  EXPECT_EQ(cfg["spread"]["value"], "10");
  EXPECT_EQ(cfg["spread"]["source"], "default");
  const auto res = manifest("prec", "split")["results"]["params"];
  EXPECT_EQ(res["eps"], 0.07);
  EXPECT_EQ(res["mass"], 2.0);
}

TEST(Cli, ConfigErrorsExitTwo) {
  std::ofstream(workdir() / "bad.cfg") << "no_such_key=1\n";
  EXPECT_EQ(run_cli("split --config bad.cfg --out e2"), 2);
  EXPECT_NE(slurp(workdir() / "last.err").find("no_such_key"), std::string::npos);
  EXPECT_EQ(run_cli("split --eps -1 --out e2"), 2);
  EXPECT_EQ(run_cli("split --eps abc --out e2"), 2);
  EXPECT_EQ(run_cli("split --config missing.cfg --out e2"), 2);
  EXPECT_EQ(run_cli("split --bogus 1 --out e2"), 2);
  EXPECT_EQ(run_cli("--out e2"), 2);
  EXPECT_EQ(run_cli("curve --window 0 --out e2" + kSmall), 2);
  EXPECT_EQ(run_cli("defect --defect_pair 9 --out e2"), 2);
}

TEST(Cli, NumericalFailureExitsThree) {
  // the bare operator on a pair that does not vanish at k = 0 has no finite boundary term
  EXPECT_EQ(run_cli("defect --operator T --defect_pair 0 --out e3"), 3);
  EXPECT_NE(slurp(workdir() / "last.err").find("numerical"), std::string::npos);
}

TEST(Cli, MovedFixtureExitsFour) {
  const auto src = fs::path(TOA_SOURCE_DIR) / "tests/fixtures/oracle_fixtures.json";
  const auto copy = workdir() / "fx.json";
  fs::copy_file(src, copy, fs::copy_options::overwrite_existing);
  ASSERT_EQ(run_cli("fixtures --fixtures_path fx.json --out fx"), 0);
  EXPECT_EQ(slurp(copy), slurp(src));

  auto j = json::parse(slurp(copy));
  j[0]["value_re"] = j[0]["value_re"].get<double>() + 1e-3;
  const std::string moved = j.dump(2);
  std::ofstream(copy, std::ios::binary) << moved;
  EXPECT_EQ(run_cli("fixtures --fixtures_path fx.json --out fx"), 4);
  EXPECT_EQ(slurp(copy), moved);
  EXPECT_EQ(run_cli("fixtures --fixtures_path fx.json --regenerate --out fx"), 0);
  EXPECT_EQ(slurp(copy), slurp(src));
}

TEST(Cli, WorkerFlagBeatsEnvironment) {
  ASSERT_EQ(run_cli("split --out w1" + kSmall, "TOA_WORKERS=3"), 0);
  EXPECT_EQ(manifest("w1", "split")["results"]["workers"], 3);
  ASSERT_EQ(run_cli("split --workers 2 --out w2" + kSmall, "TOA_WORKERS=3"), 0);
  EXPECT_EQ(manifest("w2", "split")["results"]["workers"], 2);
  ASSERT_EQ(run_cli("split --out w3" + kSmall), 0);
  EXPECT_EQ(manifest("w3", "split")["results"]["workers"], 1);
  EXPECT_EQ(run_cli("split --workers 0 --out w4" + kSmall), 2);
}

TEST(Cli, OutputIndependentOfRunAndWorkers) {
  const std::string a = "curve --eps 0.01 --spread 1 --window 1 --t_count 9" + kSmall;
  ASSERT_EQ(run_cli(a + " --out d1 --workers 1"), 0);
  ASSERT_EQ(run_cli(a + " --out d2 --workers 4"), 0);
  ASSERT_EQ(run_cli(a + " --out d3 --workers 1"), 0);
  const auto ref = slurp(workdir() / "d1/curve.csv");
  EXPECT_FALSE(ref.empty());
  EXPECT_EQ(slurp(workdir() / "d2/curve.csv"), ref);
  EXPECT_EQ(slurp(workdir() / "d3/curve.csv"), ref);
}

TEST(Cli, ManifestHoldsEveryCsvValue) {
  ASSERT_EQ(run_cli("evolve --eps 0.01 --spread 1 --x_count 21 --out m" + kSmall), 0);
  const auto m = manifest("m", "evolve");
  EXPECT_EQ(m["schema_version"], toa::kManifestSchema);
  EXPECT_TRUE(m.contains("wall_time_s"));
  ASSERT_EQ(m["csv"].size(), 1u);
  const auto& c = m["csv"][0];
  EXPECT_EQ(c["columns"], json({"x", "density", "flag"}));
  std::istringstream in(slurp(workdir() / "m" / c["file"].get<std::string>()));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,density,flag");
  std::size_t row = 0;
  while (std::getline(in, line)) {
    std::string joined;
    for (const auto& cell : c["rows"][row]) joined += (joined.empty() ? "" : ",") + cell.get<std::string>();
    EXPECT_EQ(line, joined) << row;
    ++row;
  }
  EXPECT_EQ(row, 21u);
}

TEST(Cli, CsvFilesCarryNoTimestamps) {
  ASSERT_EQ(run_cli("split --out ts --dump_grid" + kSmall), 0);
  const std::regex stamp(R"(\d{4}-\d{2}-\d{2}T\d{2}:\d{2})");
  for (const auto& e : fs::directory_iterator(workdir() / "ts")) {
    if (e.path().extension() != ".csv") continue;
    EXPECT_FALSE(std::regex_search(slurp(e.path()), stamp)) << e.path();
  }
  EXPECT_TRUE(std::regex_search(slurp(workdir() / "ts/split.manifest.json"), stamp));
}

TEST(Cli, GridDumpOnlyBehindFlag) {
  ASSERT_EQ(run_cli("split --out g0" + kSmall), 0);
  EXPECT_FALSE(fs::exists(workdir() / "g0/grid.csv"));
  ASSERT_EQ(run_cli("split --out g1 --dump_grid" + kSmall), 0);
  std::ifstream in(workdir() / "g1/grid.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "segment,k,weight");
  ASSERT_EQ(run_cli("fig1 --out g2 --dump_grid --x_count 11" + kSmall), 0);
  EXPECT_TRUE(fs::exists(workdir() / "g2/grid_delta_m.csv"));
  EXPECT_TRUE(fs::exists(workdir() / "g2/grid_delta_m_over_10.csv"));
}

TEST(Cli, SchemasOfMainOutputs) {
  ASSERT_EQ(run_cli("coherent --eps 0.1 --spread 1 --out s" + kSmall), 0);
  std::ifstream in(workdir() / "s/coherent.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "k,re,im,weight");
  ASSERT_EQ(run_cli("curve --eps 0.01 --spread 1 --t_count 3 --out s" + kSmall), 0);
  std::ifstream cin(workdir() / "s/curve.csv");
  std::getline(cin, header);
  EXPECT_EQ(header, "t,probability,flag");
}

TEST(Cli, EverySubcommandRuns) {
  const std::vector<std::string> runs = {
      "eigenstate --arrival_time 0.5" + kSmall,
      "eigenstate --unmodified" + kSmall,
      "coherent --piece eps" + kSmall,
      "evolve --x_count 11" + kSmall,
      "split" + kSmall,
      "energy --eps 0.01 --spread 1" + kSmall,
      "overlap --spread 1 --separation 0.5" + kSmall,
      "defect --operator T_eps --defect_pair 2" + kSmall,
      "curve --eps 0.01 --spread 1 --t_count 5" + kSmall,
      "fig1 --x_count 21" + kSmall,
      "fig2 --x_count 6 --spread 1",
      "sweep --sweep_values 0.3,0.1" + kSmall,
      "fixtures --fixtures_path fx_all.json",
  };
  std::set<std::string> seen;
  for (const auto& r : runs) {
    const std::string cmd = r.substr(0, r.find(' '));
    seen.insert(cmd);
    EXPECT_EQ(run_cli(r + " --out all_" + cmd), 0) << r << "\n" << slurp(workdir() / "last.err");
    EXPECT_TRUE(fs::exists(workdir() / ("all_" + cmd) / (cmd + ".manifest.json"))) << r;
  }
  EXPECT_EQ(seen.size(), toa::cli::commands().size());
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run_cli("--help"), 0); }
