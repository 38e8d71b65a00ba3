#include <doctest.h>

#include <filesystem>
#include <limits>

#include "fsi/config.hpp"
#include "fsi/io.hpp"

using namespace fsi;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fsi_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("empty config gives the defaults") {
  const ParsedConfig c = parse_config("");
  CHECK(c.config == RunConfig{});
  CHECK(c.warnings.empty());
  const ParsedConfig commented = parse_config("# nothing here\n\n   # indented\n");
  CHECK(commented.config == RunConfig{});
}

TEST_CASE("config values") {
  const ParsedConfig c = parse_config(
      "preset = wall-impact\n"
      "T = 0.2  # trailing comment\n"
      "N = 20\r\n"
      "fluid_resolution = 32 48\n"
      "container_origin = -1 -0.5\n"
      "collar_widths = 1 2\n"
      "method = gradient-descent\n"
      "write_vtk = yes\n");
  CHECK(c.config.preset == Preset::WallImpact);
  CHECK(c.config.params.T == 0.2);
  CHECK(c.config.params.N == 20);
  CHECK(c.config.params.container.resolution == Index2{32, 48});
  CHECK(c.config.params.container.origin == Vec2(-1.0, -0.5));
  CHECK(c.config.collar_widths == std::vector<double>{1.0, 2.0});
  CHECK(c.config.params.ssp.method == OptimizerMethod::GradientDescent);
  CHECK(c.config.write_vtk);
  CHECK(c.config.params.h() == doctest::Approx(0.01));
}

TEST_CASE("soft violations are warnings") {
  const ParsedConfig c = parse_config("gamma = 1.5\n");
  CHECK(c.config.params.fluid.gamma == 1.5);
  REQUIRE(c.warnings.size() == 1);
  CHECK(c.warnings[0].line == 1);
  CHECK(c.warnings[0].message.find("12/7") != std::string::npos);
}

TEST_CASE("config errors are all reported with positions") {
  const std::string text =
      "viscocity = 0.1\n"
      "N = ten\n"
      "  eps = -1\n"
      "just words\n"
      "T = 1\n"
      "T = 2\n"
      "dimension = 3\n";
  try {
    parse_config(text);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const auto& is = e.issues();
    REQUIRE(is.size() == 6);
    CHECK(is[0].line == 1);
    CHECK(is[0].column == 1);
    CHECK(is[0].message.find("unknown key 'viscocity'") != std::string::npos);
    CHECK(is[1].line == 2);
    CHECK(is[1].column == 5);
    CHECK(is[2].line == 3);
    CHECK(is[2].column == 9);
    CHECK(is[2].message.find("eps") != std::string::npos);
    CHECK(is[3].line == 4);
    CHECK(is[4].line == 6);
    CHECK(is[4].message.find("duplicate") != std::string::npos);
    CHECK(is[5].line == 7);
    CHECK(std::string(e.what()).find("line 1, column 1") != std::string::npos);
  }
}

TEST_CASE("config round trip") {
  const RunConfig c = parse_config(
                          "preset = quiescent\n"
                          "output_dir = runs/q\n"
                          "collar_widths = 1 2.5\n"
                          "snapshot_every = 5\n"
                          "T = 0.3\n"
                          "eps = 0.025\n"
                          "seed = 99\n"
                          "container_origin = -1 0\n"
                          "container_extent = 2 1\n"
                          "fluid_resolution = 32 16\n"
                          "mu = 0.123456789012345678\n"
                          "M = 6\n")
                          .config;
  CHECK(c.params.fluid.eps == 0.025);
  CHECK(c.params.ssp.h == doctest::Approx(0.006));
  const std::string text = write_config(c);
  CHECK(parse_config(text).config == c);
  CHECK(write_config(parse_config(text).config) == text);
  for (const std::string& k : config_keys()) CHECK(text.find("\n" + k + " = ") != std::string::npos);
}

TEST_CASE("config file io") {
  CHECK_THROWS_AS(load_config("/nonexistent/run.cfg"), IoError);
  const fs::path dir = scratch_dir("cfg");
  write_text((dir / "run.cfg").string(), "N = 7\n");
  CHECK(load_config((dir / "run.cfg").string()).config.params.N == 7);
}

TEST_CASE("ledger csv") {
  EnergyLedger empty;
  const std::string header = ledger_csv(empty);
  CHECK(header.find('\n') == header.size() - 1);
  CHECK(header.rfind("time,", 0) == 0);
  CHECK(parse_ledger_csv(header).rows.empty());

  LedgerRow r;
  const auto cols = LedgerRow::columns();
  std::array<double, LedgerRow::column_count> v{};
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (3.0 + static_cast<double>(i)) * (i % 2 ? -1 : 1) * 1e-7;
  v[0] = std::numeric_limits<double>::denorm_min();
  r = LedgerRow::from_values(v);
  CHECK(r.values() == v);
  EnergyLedger one;
  one.rows.push_back(r);
  const std::string text = ledger_csv(one);
  const EnergyLedger back = parse_ledger_csv(text);
  REQUIRE(back.rows.size() == 1);
  CHECK(back.rows[0] == r);
  CHECK(ledger_csv(back) == text);
  CHECK(cols.size() == LedgerRow::column_count);

  CHECK_THROWS_AS(parse_ledger_csv("time,oops\n"), IoError);
  CHECK_THROWS_AS(parse_ledger_csv(header + "1,2\n"), IoError);
  CHECK_THROWS_AS(load_ledger_csv("/nonexistent/ledger.csv"), IoError);
}

TEST_CASE("snapshot text") {
  FieldSnapshot s;
  s.resolution = {4, 4};
  s.origin = Vec2(-1, 0.5);
  s.extent = Vec2(2, 3);
  s.time = 0.125;
  s.names = {"rho", "u"};
  s.fields.assign(2, std::vector<double>(16));
  for (int i = 0; i < 16; ++i) {
    s.fields[0][static_cast<std::size_t>(i)] = 0.1 * i;
    s.fields[1][static_cast<std::size_t>(i)] = -1.0 / (i + 1);
  }
  const std::string text = snapshot_text(s);
  CHECK(text.find("resolution 4 4\n") != std::string::npos);
  CHECK(parse_snapshot(text) == s);
  CHECK_THROWS_AS(parse_snapshot("fsi-snapshot 2\n"), IoError);
  CHECK_THROWS_AS(parse_snapshot(text.substr(0, text.size() / 2)), IoError);

  const FluidState f(FluidGrid(Vec2(0, 0), Vec2(1, 1), {8, 8}), 2.0);
  const FieldSnapshot fs_ = fluid_snapshot(f);
  CHECK(fs_.location == "cell");
  CHECK(fs_.fields[0] == std::vector<double>(64, 2.0));

  DeformationField d(SolidGrid(Vec2(0, 0), Vec2(1, 1), {5, 5}));
  d.positions *= 1.5;
  d.velocity.setConstant(0.25);
  const DeformationField back = deformation_from_snapshot(parse_snapshot(snapshot_text(solid_snapshot(d))));
  CHECK(back.positions == d.positions);
  CHECK(back.velocity == d.velocity);
}

TEST_CASE("run outputs") {
  SchemeParams p;
  p.N = 1;
  p.T = 0.01;
  const RunResult run = run_scheme(p, Preset::Quiescent);
  const fs::path dir = scratch_dir("out");
  const std::vector<std::string> written = write_outputs(run, dir.string(), {true});
  for (const std::string& f : written) CHECK(fs::exists(f));
  CHECK(load_ledger_csv((dir / "ledger.csv").string()).rows == run.ledger.rows);
  CHECK(fs::exists(dir / "windows.csv"));
  CHECK(fs::exists(dir / "mm_steps.csv"));
  CHECK(fs::exists(dir / "snapshots" / "w00000_fluid.txt"));
  CHECK(fs::exists(dir / "snapshots" / "w00001_solid.vtk"));
}
