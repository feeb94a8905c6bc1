#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wtp/cli/commands.hpp"
#include "wtp/cli/config.hpp"
#include "wtp/errors.hpp"

namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = wtp::cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path workdir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "wtp_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_config(const fs::path& dir, const std::string& extra = "") {
  const auto p = dir / "short.cfg";
  std::ofstream(p) << "[simulation]\nduration_h = 1\n" << extra;
  return p;
}

bool single_error_line(const std::string& err, const std::string& code) {
  return err.rfind("error[" + code + "]: ", 0) == 0 && err.find('\n') == err.size() - 1;
}

TEST(Config, DefaultsMatchTheBuiltInScenario) {
  const auto c = wtp::cli::parse_config("", ".");
  const auto d = wtp::default_scenario();
  EXPECT_EQ(c.scenario.plant.distribution_resistance, d.plant.distribution_resistance);
  EXPECT_EQ(c.scenario.mpc.bounds.upper, d.mpc.bounds.upper);
  EXPECT_EQ(c.notices.size(), wtp::cli::config_keys().size());
}

TEST(Config, BundledDefaultListsEveryKey) {
  const auto c = wtp::cli::load_config(fs::path(WTP_DATA_DIR) / "default.cfg");
  EXPECT_TRUE(c.notices.empty());
  EXPECT_EQ(wtp::cli::dump_config(c), wtp::cli::dump_config(wtp::cli::default_config()));
}

TEST(Config, ParsesValuesAndLists) {
  const auto c = wtp::cli::parse_config(
      "# comment\n[controller.mpc]\nlambda_d = 2.5  # inline\nmesh_resolution = 3\n"
      "[simulation]\ncontroller = reactive\ninitial_tank_psi = 80, 90\n",
      ".");
  EXPECT_EQ(c.scenario.mpc.weights.pressure, 2.5);
  EXPECT_EQ(c.scenario.mpc.resolution, (std::array<int, 5>{3, 3, 3, 3, 3}));
  EXPECT_EQ(c.scenario.controller, wtp::ControllerKind::kReactive);
  EXPECT_EQ(c.scenario.initial_tank_pressures, (std::vector<double>{80, 90}));
}

TEST(Config, RejectsUnknownKeysWithLocationAndKeyPath) {
  try {
    wtp::cli::parse_config("[plant]\nsource_pressure_psi = 70\nflux = 3\n", ".", "x.cfg");
    FAIL();
  } catch (const wtp::ConfigError& e) {
    EXPECT_EQ(std::string(e.what()), "x.cfg:3: plant.flux: unknown key");
  }
  EXPECT_THROW(wtp::cli::parse_config("[nonsense]\n", "."), wtp::ConfigError);
  EXPECT_THROW(wtp::cli::parse_config("key = 1\n", "."), wtp::ConfigError);
  EXPECT_THROW(wtp::cli::parse_config("[plant]\nsource_pressure_psi = abc\n", "."), wtp::ConfigError);
  EXPECT_THROW(wtp::cli::parse_config("[plant]\nsource_pressure_psi = 1\nsource_pressure_psi = 2\n", "."),
               wtp::ConfigError);
  EXPECT_THROW(wtp::cli::parse_config("[controller.mpc]\nupper = 1, 2\n", "."), wtp::ConfigError);
}

TEST(Config, DumpRoundTripsThroughTheParser) {
  auto c = wtp::cli::parse_config("[controller.mpc]\nlambda_e = 0.1234567890123\n[demand]\nnoise_fraction = 0.03\n", ".");
  const auto text = wtp::cli::dump_config(c);
  const auto back = wtp::cli::parse_config(text, ".");
  EXPECT_EQ(wtp::cli::dump_config(back), text);
  EXPECT_TRUE(back.notices.empty());
}

TEST(Cli, RunWritesTraceAndMetrics) {
  const auto dir = workdir("run");
  const auto r = cli({"run", write_config(dir).string(), "--controller", "reactive", "--out", dir.string(), "--quiet"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "trace_reactive.csv"));
  EXPECT_NE(slurp(dir / "metrics_reactive.json").find("\"total_emissions_kg\""), std::string::npos);
}

TEST(Cli, SeedGivesIdenticalOutputs) {
  const auto dir = workdir("seed");
  const auto cfg = write_config(dir, "[demand]\nnoise_fraction = 0.05\n");
  ASSERT_EQ(cli({"run", cfg.string(), "--seed", "7", "--out", (dir / "a").string(), "--quiet"}).code, 0);
  ASSERT_EQ(cli({"run", cfg.string(), "--seed", "7", "--out", (dir / "b").string(), "--quiet"}).code, 0);
  ASSERT_EQ(cli({"run", cfg.string(), "--seed", "8", "--out", (dir / "c").string(), "--quiet"}).code, 0);
  EXPECT_EQ(slurp(dir / "a" / "trace_mpc.csv"), slurp(dir / "b" / "trace_mpc.csv"));
  EXPECT_NE(slurp(dir / "a" / "trace_mpc.csv"), slurp(dir / "c" / "trace_mpc.csv"));
}

TEST(Cli, EffectiveConfigReproducesTheTrace) {
  const auto dir = workdir("dump");
  const auto cfg = write_config(dir, "[demand]\nnoise_fraction = 0.02\n");
  const auto eff = dir / "effective.cfg";
  ASSERT_EQ(cli({"run", cfg.string(), "--seed", "3", "--out", (dir / "a").string(), "--dump-effective-config",
                 eff.string(), "--quiet"})
                .code,
            0);
  ASSERT_EQ(cli({"run", eff.string(), "--out", (dir / "b").string()}).code, 0);
  EXPECT_EQ(slurp(dir / "a" / "trace_mpc.csv"), slurp(dir / "b" / "trace_mpc.csv"));
}

TEST(Cli, MissingConfigNamesThePath) {
  const auto r = cli({"run", "/nonexistent/plant.cfg"});
  EXPECT_NE(r.code, 0);
  EXPECT_TRUE(single_error_line(r.err, "E_CONFIG")) << r.err;
  EXPECT_NE(r.err.find("/nonexistent/plant.cfg"), std::string::npos);
}

TEST(Cli, ConfigErrorsAreSingleLineWithKeyPath) {
  const auto dir = workdir("badcfg");
  const auto r = cli({"run", write_config(dir, "[controller.mpc]\nlambda_x = 1\n").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(single_error_line(r.err, "E_CONFIG")) << r.err;
  EXPECT_NE(r.err.find("controller.mpc.lambda_x"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  const auto r = cli({"run", "x.cfg", "--controller", "pid"});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(single_error_line(r.err, "E_USAGE")) << r.err;
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, CompareWritesReportWithChlorineMinimum) {
  const auto dir = workdir("compare");
  const auto r = cli({"compare", write_config(dir).string(), "--out", dir.string(), "--quiet"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("chlorine_min_mg_per_gal"), std::string::npos);
  EXPECT_NE(r.out.find("emissions savings"), std::string::npos);
  for (const char* f : {"trace_mpc.csv", "trace_reactive.csv", "comparison.json", "comparison.txt"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
}

TEST(Cli, CompareParallelMatchesSequential) {
  const auto dir = workdir("parallel");
  const auto cfg = write_config(dir);
  ASSERT_EQ(cli({"compare", cfg.string(), "--out", (dir / "s").string(), "--quiet"}).code, 0);
  ASSERT_EQ(cli({"compare", cfg.string(), "--out", (dir / "p").string(), "--quiet", "--parallel"}).code, 0);
  EXPECT_EQ(slurp(dir / "s" / "comparison.json"), slurp(dir / "p" / "comparison.json"));
}

TEST(Cli, FitRecoversGeneratorCoefficientsAndEmitsPhi) {
  const auto dir = workdir("fit");
  const auto phi = dir / "phi.csv";
  const auto r = cli({"fit", (fs::path(WTP_DATA_DIR) / "synthetic_mix_120h.csv").string(), "--emit-phi", phi.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& [name, truth] : {std::pair{"coal,", 820.0}, std::pair{"gas,", 490.0}, std::pair{"wind,", 11.0}}) {
    const auto at = r.out.find(std::string("\n") + name);
    ASSERT_NE(at, std::string::npos) << r.out;
    const double fitted = std::stod(r.out.substr(at + 1 + std::string(name).size()));
    EXPECT_NEAR(fitted, truth, 1e-9 * truth) << name;
  }
  const auto text = slurp(phi);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 121);
}

TEST(Cli, FitReportsMalformedLine) {
  const auto dir = workdir("fitbad");
  const auto mix = dir / "bad.csv";
  std::ofstream(mix) << "hour,wind_mwh,solar_mwh,hydro_mwh,gas_mwh,coal_mwh,nuclear_mwh,ghg_kg\n0,1,2,3\n";
  const auto r = cli({"fit", mix.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(single_error_line(r.err, "E_PARSE")) << r.err;
  EXPECT_NE(r.err.find(":2:"), std::string::npos) << r.err;
}

TEST(Cli, PlotdataEmitsNarrowSeries) {
  const auto dir = workdir("plot");
  ASSERT_EQ(cli({"run", write_config(dir).string(), "--controller", "reactive", "--out", dir.string(), "--quiet"}).code, 0);
  const auto trace = (dir / "trace_reactive.csv").string();
  auto r = cli({"plotdata", trace, "--series", "chlorine"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 25);
  EXPECT_EQ(r.out.rfind("time_min,chlorine_mg_per_gal\n", 0), 0u);
  r = cli({"plotdata", trace, "--series", "tanks"});
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 49);
  r = cli({"plotdata", trace, "--series", "pressure"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("yD, tanks, flows, emissions, chlorine"), std::string::npos) << r.err;
}

TEST(Cli, PlotdataRejectsEmptyTrace) {
  const auto dir = workdir("plotempty");
  const auto path = dir / "empty.csv";
  wtp::write_trace_csv(path, wtp::SimulationTrace{});
  const auto r = cli({"plotdata", path.string(), "--series", "yD"});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(single_error_line(r.err, "E_SERIES")) << r.err;
}

}  // namespace
