#include <catch_amalgamated.hpp>

#include <fstream>
#include <random>
#include <sstream>

#include "homsim/cli.hpp"

using namespace homsim;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("homsim_test_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

json tpi_config() {
  return json::parse(R"({
    "schema_version": 1,
    "label": "tpi water",
    "mode": "tpi",
    "spectrum": {"family": "gaussian", "lci_fwhm_um": 4.2},
    "stack": [{"material": "water", "thickness_mm": 25}],
    "pass_factor": 1
  })");
}

json lci_config() {
  return json::parse(R"({
    "schema_version": 1,
    "label": "lci gdd",
    "mode": "lci",
    "spectrum": {"family": "gaussian", "lci_fwhm_um": 4.2},
    "stack": [{"name": "gdd", "thickness_mm": 1, "taylor": {"beta": [0, 0, 300]}}]
  })");
}

fs::path write_config(const fs::path& dir, const json& j, const std::string& name = "scenario.json") {
  const auto p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli_run(std::vector<std::string> args) {
  args.insert(args.begin(), "homsim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), {out, err});
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("Scenario defaults") {
  const auto sc = parse_scenario(tpi_config(), ".", "out");
  CHECK(sc.mode == Mode::tpi);
  CHECK(sc.options.pass_factor == 1.0);
  CHECK(sc.options.delay_reference == DelayReference::group_delay);
  CHECK(sc.method == WidthMethod::gaussian_fit);
  CHECK(sc.delays_um.size() == 1025);
  CHECK(sc.csv_path == fs::path("out") / "tpi_water.csv");
  CHECK(sc.report_path == fs::path("out") / "tpi_water.report.json");
  CHECK(std::holds_alternative<MonochromaticPump>(sc.pump));
  CHECK_THAT(lci_fwhm_um(sc.signal), WithinRel(4.2, 1e-6));
}

TEST_CASE("Unknown fields are rejected with their path") {
  auto j = tpi_config();
  j["spectrum"]["fwhm_typo"] = 1;
  CHECK_THROWS_AS(parse_scenario(j), ValidationError);
  CHECK_THROWS_WITH(parse_scenario(j), ContainsSubstring("spectrum.fwhm_typo"));
  auto k = tpi_config();
  k["colour"] = "blue";
  CHECK_THROWS_WITH(parse_scenario(k), ContainsSubstring("colour"));
}

TEST_CASE("Invalid scenario values") {
  auto j = tpi_config();
  j["stack"][0]["material"] = "diamondX";
  CHECK_THROWS_AS(parse_scenario(j), ValidationError);
  CHECK_THROWS_WITH(parse_scenario(j), ContainsSubstring("diamondX"));

  auto g = tpi_config();
  g["delay_grid"] = {{"span_um", 40}, {"points", 32}};
  CHECK_THROWS_AS(parse_scenario(g), ValidationError);

  auto v = tpi_config();
  v["schema_version"] = 2;
  CHECK_THROWS_AS(parse_scenario(v), ValidationError);

  auto m = tpi_config();
  m["mode"] = "ocT";
  CHECK_THROWS_AS(parse_scenario(m), ValidationError);

  auto two = tpi_config();
  two["spectrum"]["fwhm_nm"] = 5;
  CHECK_THROWS_AS(parse_scenario(two), ValidationError);

  auto fringes = tpi_config();
  fringes["carrier"] = "with_fringes";
  CHECK_THROWS_AS(parse_scenario(fringes), ValidationError);

  auto neg = tpi_config();
  neg["stack"][0]["thickness_mm"] = -1;
  CHECK_THROWS_AS(parse_scenario(neg), ValidationError);

  auto text = tpi_config();
  text["pass_factor"] = "two";
  CHECK_THROWS_AS(parse_scenario(text), ValidationError);
}

TEST_CASE("Spectrum widths in nm and rad/fs agree") {
  auto a = tpi_config();
  a["spectrum"] = {{"family", "gaussian"}, {"fwhm_nm", 5.0}};
  auto b = tpi_config();
  b["spectrum"] = {{"family", "gaussian"}, {"fwhm_rad_per_fs", angular_bandwidth_from_nm(5.0, 808.0)}};
  CHECK(parse_scenario(a).signal.density() == parse_scenario(b).signal.density());
}

TEST_CASE("Gaussian pump in THz") {
  auto j = tpi_config();
  j["pump"] = {{"model", "gaussian"}, {"fwhm_thz", 2.0}, {"samples", 33}};
  const auto sc = parse_scenario(j);
  const auto& p = std::get<GaussianPump>(sc.pump);
  CHECK_THAT(p.fwhm, WithinRel(2.0 * std::numbers::pi * 2e-3, 1e-12));
  CHECK(p.samples == 33);
  auto l = lci_config();
  l["pump"] = j["pump"];
  CHECK_THROWS_AS(parse_scenario(l), ValidationError);
}

TEST_CASE("Custom materials load from files") {
  TempDir dir;
  std::ofstream(dir.path / "fused.json") << R"({"name": "fused", "sellmeier": {
      "B": [0.6961663, 0.4079426, 0.8974794], "C_um2": [0.004679148, 0.01351206, 97.934],
      "range_nm": [210, 3700]}})";
  auto j = tpi_config();
  j["materials"] = {"fused.json"};
  j["stack"] = {{{"material", "fused"}, {"thickness_mm", 10}}};
  const auto sc = parse_scenario(j, dir.path);
  CHECK(sc.stack.media.size() == 1);
}

TEST_CASE("Tabulated spectrum from a CSV file") {
  TempDir dir;
  {
    std::ofstream csv(dir.path / "spec.csv");
    csv << "omega_rad_per_fs,density\n";
    for (int i = -60; i <= 60; ++i) {
      const double w = 0.01 * i;
      csv << w << "," << std::exp(-4.0 * std::log(2.0) * std::pow(w / 0.2, 2)) << "\n";
    }
  }
  auto j = tpi_config();
  j["spectrum"] = {{"family", "tabulated"}, {"csv", "spec.csv"}};
  const auto sc = parse_scenario(j, dir.path);
  CHECK_THAT(lci_fwhm_um(sc.signal), WithinRel(4.0 * std::log(2.0) * 0.299792458 / 0.2, 2e-3));
  CHECK(run_scenario(sc).report.fwhm > 0.0);
}

TEST_CASE("Run writes a CSV and a report") {
  TempDir dir;
  const auto cfg = write_config(dir.path, tpi_config());
  const auto r = cli_run({"--out-dir", dir.path.string(), "run", cfg.string()});
  REQUIRE(r.code == 0);
  const auto csv = dir.path / "tpi_water.csv";
  const auto report = dir.path / "tpi_water.report.json";
  REQUIRE(fs::exists(csv));
  REQUIRE(fs::exists(report));
  const auto rep = json::parse(slurp(report));
  CHECK(rep["fwhm"].get<double>() > 0.0);

  std::ifstream in(csv);
  const auto ig = read_csv(in);
  CHECK(ig.kind == InterferogramKind::tpi);
  CHECK(ig.values.size() == 1025);
  CHECK(ig.metadata["label"] == "tpi water");
  CHECK(ig.metadata["scenario"] == tpi_config());
}

TEST_CASE("Runs are deterministic") {
  TempDir a, b;
  const auto cfg = write_config(a.path, lci_config());
  REQUIRE(cli_run({"--quiet", "--out-dir", a.path.string(), "run", cfg.string()}).code == 0);
  REQUIRE(cli_run({"--quiet", "--out-dir", b.path.string(), "run", cfg.string()}).code == 0);
  CHECK(slurp(a.path / "lci_gdd.csv") == slurp(b.path / "lci_gdd.csv"));
  CHECK(slurp(a.path / "lci_gdd.report.json") == slurp(b.path / "lci_gdd.report.json"));
}

TEST_CASE("Fringed LCI is measured on its envelope") {
  auto j = lci_config();
  j["stack"] = json::array();
  j["carrier"] = "with_fringes";
  const auto res = run_scenario(parse_scenario(j));
  CHECK(res.interferogram.carrier == Carrier::with_fringes);
  CHECK_THAT(res.report.fwhm, WithinRel(4.2, 1e-2));
}

TEST_CASE("CLI exit codes") {
  TempDir dir;
  auto bad = tpi_config();
  bad["stack"][0]["material"] = "diamondX";
  const auto r = cli_run({"--out-dir", dir.path.string(), "run", write_config(dir.path, bad).string()});
  CHECK(r.code == 2);
  CHECK_THAT(r.err, ContainsSubstring("diamondX"));

  auto few = tpi_config();
  few["delay_grid"] = {{"span_um", 40}, {"points", 10}};
  CHECK(cli_run({"run", write_config(dir.path, few).string()}).code == 2);

  std::ofstream(dir.path / "broken.json") << "{ not json";
  CHECK(cli_run({"run", (dir.path / "broken.json").string()}).code == 2);
  CHECK(cli_run({"run", (dir.path / "missing.json").string()}).code == 2);
  CHECK(cli_run({"reproduce", "fig9"}).code == 2);
  CHECK(cli_run({}).code == 2);
  CHECK(cli_run({"--version"}).code == 0);

  // a sample too thick for the spectral grid is a numerical problem of the run
  auto thick = lci_config();
  thick["stack"][0]["taylor"]["beta"] = {0, 0, 300000};
  thick["delay_grid"] = {{"span_um", 100}, {"points", 1025}};
  CHECK(cli_run({"--out-dir", dir.path.string(), "run", write_config(dir.path, thick).string()}).code == 2);
}

TEST_CASE("Reproduce writes a summary and reports failing rows") {
  TempDir dir;
  const auto ok = cli_run({"--out-dir", dir.path.string(), "reproduce", "fig2"});
  CHECK(ok.code == 0);
  CHECK_THAT(ok.out, ContainsSubstring("targets table version"));
  const auto summary = json::parse(slurp(dir.path / "fig2_summary.json"));
  CHECK(summary["passed"] == true);
  CHECK(summary["targets_version"] == kTargetsVersion);
  CHECK(fs::exists(dir.path / "fig2_gaussian_tpi.csv"));
}

TEST_CASE("Sweep writes one row per value") {
  TempDir dir;
  const auto cfg = write_config(dir.path, lci_config());
  const auto r = cli_run({"--out-dir", dir.path.string(), "sweep", cfg.string(), "--param", "stack.0.taylor.beta.2",
                          "--min", "0", "--max", "600", "--steps", "4"});
  REQUIRE(r.code == 0);
  std::istringstream in(slurp(dir.path / "lci_gdd_sweep.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "param_value,fwhm_um,visibility,asymmetry");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
}

TEST_CASE("LCI width grows monotonically with GDD") {
  const auto rows = sweep(lci_config(), "stack.0.taylor.beta.2", 0.0, 1500.0, 6);
  REQUIRE(rows.size() == 6);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].fwhm_um > rows[i - 1].fwhm_um);
  CHECK(rows.front().param_value == 0.0);
  CHECK(rows.back().param_value == 1500.0);
}

TEST_CASE("TPI width does not follow even-order GDD") {
  auto j = lci_config();
  j["mode"] = "tpi";
  j["pass_factor"] = 1;
  const auto rows = sweep(j, "stack.0.taylor.beta.2", 0.0, 3000.0, 5);
  for (const auto& r : rows) CHECK_THAT(r.fwhm_um, WithinRel(rows.front().fwhm_um, 2e-3));
}

TEST_CASE("TPI width grows with pump linewidth") {
  auto j = lci_config();
  j["mode"] = "tpi";
  j["pass_factor"] = 1;
  j["stack"][0]["taylor"]["beta"] = {0, 0, 1700};
  j["pump"] = {{"model", "gaussian"}, {"fwhm_rad_per_fs", 0.005}};
  const double dws = gaussian_fwhm_for_lci(4.2);
  const double at_117 = pump_linewidth_for_degradation(1.17, dws, 1700.0);
  const auto rows = sweep(j, "pump.fwhm_rad_per_fs", 0.005, 2.0 * at_117, 4);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].fwhm_um > rows[i - 1].fwhm_um);
}

TEST_CASE("Sweep parameter must be numeric") {
  CHECK_THROWS_AS(sweep(lci_config(), "mode", 0.0, 1.0, 2), ValidationError);
  CHECK_THROWS_AS(sweep(lci_config(), "spectrum.nothing.here", 0.0, 1.0, 2), ValidationError);
  CHECK_THROWS_AS(sweep(lci_config(), "spectrum..x", 0.0, 1.0, 2), ValidationError);
  CHECK_THROWS_AS(sweep_values(1.0, 0.0, 3), ValidationError);
  TempDir dir;
  const auto cfg = write_config(dir.path, lci_config());
  CHECK(cli_run({"sweep", cfg.string(), "--param", "label", "--min", "0", "--max", "1", "--steps", "2"}).code == 2);
}
