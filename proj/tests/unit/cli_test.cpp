#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unistd.h>

#include "dephase/cli.hpp"
#include "dephase/constants.hpp"
#include "dephase/noise.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using dephase::constants::two_pi;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "dephase");
  std::ostringstream out, err;
  const int code = dephase::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class Scratch {
 public:
  Scratch() {
    static int counter = 0;
    dir_ = fs::temp_directory_path() /
           ("dephase_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Scratch() { fs::remove_all(dir_); }
  std::string config(const json& j) const {
    const auto p = dir_ / "config.json";
    std::ofstream(p) << j.dump();
    return p.string();
  }
  std::string out(const std::string& name = "out") const { return (dir_ / name).string(); }

 private:
  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Columns of a csv file after the '#' comment and header lines.
std::vector<std::vector<double>> csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::vector<double>> rows;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::vector<double> row;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

const json kTrap = {{"trap",
                     {{"mass_amu", 9.012182},
                      {"field_tesla", 4.46},
                      {"voltage_v", 1000},
                      {"geometry_factor_m2", 8.495e-4},
                      {"plasma", {{"density_m3", 4e14}, {"temperature_k", 1e-3}}}}}};

}  // namespace

TEST_CASE("trap report at the operating point") {
  Scratch s;
  const auto r = invoke({"trap", "--config", s.config(kTrap), "--out", s.out()});
  REQUIRE(r.code == 0);
  std::ifstream in(fs::path(s.out()) / "trap.csv");
  std::string line;
  double magnetron_hz = 0.0;
  std::getline(in, line);
  CHECK(line == "# manifest: manifest.json");
  while (std::getline(in, line)) {
    if (line.rfind("magnetron_hz,", 0) == 0) magnetron_hz = std::stod(line.substr(13));
  }
  CHECK(magnetron_hz == doctest::Approx(42.2e3).epsilon(0.005));
  CHECK(fs::exists(fs::path(s.out()) / "manifest.json"));
}

TEST_CASE("missing field is a validation error") {
  Scratch s;
  json cfg = kTrap;
  cfg["trap"].erase("field_tesla");
  const auto r = invoke({"trap", "--config", s.config(cfg), "--out", s.out()});
  CHECK(r.code == 2);
  CHECK(r.err.find("trap.field_tesla") != std::string::npos);
  CHECK_FALSE(fs::exists(s.out()));
}

TEST_CASE("unknown fields and bad flags are validation errors") {
  Scratch s;
  json cfg = kTrap;
  cfg["trap"]["feild_tesla"] = 1.0;
  CHECK(invoke({"trap", "--config", s.config(cfg), "--out", s.out()}).code == 2);
  CHECK(invoke({"trap", "--format", "xml"}).code == 2);
  CHECK(invoke({"nonsense"}).code == 2);
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"trap", "--config", s.out("missing.json")}).code == 2);
  CHECK(invoke({"--help"}).code == 0);
  CHECK_FALSE(fs::exists(s.out()));
}

TEST_CASE("unstable trap is a computation error") {
  Scratch s;
  json cfg = kTrap;
  cfg["trap"]["field_tesla"] = 0.2;
  const auto r = invoke({"trap", "--config", s.config(cfg), "--out", s.out()});
  CHECK(r.code == 3);
  CHECK(r.err.find("Unstable") != std::string::npos);
  CHECK_FALSE(fs::exists(s.out()));
}

TEST_CASE("udd outperforms cpmg in the coherence output") {
  Scratch s;
  const json cfg = {
      {"spectrum", {{"kind", "ohmic"}, {"high_cutoff_hz", 500}, {"strength", 50.0}}},
      {"sequences", {{{"kind", "udd"}, {"n", 6}}, {{"kind", "cpmg"}, {"n", 6}}}},
      {"grid", {{"tau_min_s", 1e-4}, {"tau_max_s", 1e-3}, {"points", 20}}}};
  REQUIRE(invoke({"coherence", "--config", s.config(cfg), "--out", s.out()}).code == 0);
  const auto udd = csv_rows(fs::path(s.out()) / "coherence_udd6.csv");
  const auto cpmg = csv_rows(fs::path(s.out()) / "coherence_cpmg6.csv");
  REQUIRE(udd.size() == 20);
  REQUIRE(cpmg.size() == 20);
  for (std::size_t i = 0; i < udd.size(); ++i) CHECK(udd[i][2] >= cpmg[i][2]);
  CHECK(cpmg.back()[2] > 0.9);
}

TEST_CASE("zero spectrum gives unit coherence") {
  Scratch s;
  const json cfg = {{"spectrum", {{"kind", "white"}, {"strength", 0.0}}},
                    {"sequence", {{"kind", "hahn"}}},
                    {"grid", {{"tau_s", {1e-3, 2e-3, 4e-3}}}}};
  REQUIRE(invoke({"coherence", "--config", s.config(cfg), "--out", s.out()}).code == 0);
  for (const auto& row : csv_rows(fs::path(s.out()) / "coherence_hahn.csv")) CHECK(row[2] == 1.0);
}

TEST_CASE("analytic and monte carlo columns agree") {
  Scratch s;
  const json cfg = {
      {"spectrum", {{"kind", "ohmic"}, {"high_cutoff_hz", 500}, {"strength", 5.0}}},
      {"sequence", {{"kind", "cpmg"}, {"n", 2}}},
      {"grid", {{"tau_s", {2.5e-4, 5e-4, 1e-3}}}},
      {"coherence", {{"method", "both"}, {"shots", 2000}}}};
  REQUIRE(invoke({"coherence", "--config", s.config(cfg), "--out", s.out(), "--seed", "3"}).code == 0);
  const auto an = csv_rows(fs::path(s.out()) / "coherence_cpmg2_analytic.csv");
  const auto mc = csv_rows(fs::path(s.out()) / "coherence_cpmg2_montecarlo.csv");
  REQUIRE(an.size() == mc.size());
  for (std::size_t i = 0; i < an.size(); ++i) {
    CHECK(std::abs(an[i][2] - mc[i][2]) <= std::max(3 * mc[i][4], 5e-3));
  }
}

TEST_CASE("rb workflow end to end") {
  Scratch s;
  const json cfg = {{"rb",
                     {{"lengths", {1, 10, 25, 50, 75, 100, 125, 150, 175, 200}},
                      {"runs", 20},
                      {"depolarizing", 8e-4}}}};
  REQUIRE(invoke({"rb", "--config", s.config(cfg), "--out", s.out()}).code == 0);
  const auto summary = json::parse(slurp(fs::path(s.out()) / "rb_summary.json"));
  const double pg = summary["error_per_gate"], ci = summary["ci68"];
  CHECK(std::abs(pg - 8e-4) <= 2 * ci);
  CHECK(csv_rows(fs::path(s.out()) / "rb_runs.csv").size() == 200);
}

TEST_CASE("optimize under white noise keeps the centred pulse") {
  Scratch s;
  const json cfg = {{"spectrum", {{"kind", "white"}, {"strength", 1.0}}},
                    {"optimize", {{"n", 1}, {"tau_s", 1e-3}}}};
  REQUIRE(invoke({"optimize", "--config", s.config(cfg), "--out", s.out()}).code == 0);
  CHECK(slurp(fs::path(s.out()) / "optimized.txt") == "1,0,0.5\n");
}

TEST_CASE("noise round trip through the cli") {
  Scratch s;
  const json cfg = {
      {"spectrum", {{"kind", "ambient"}, {"exponent", 4}, {"low_cutoff_hz", 30}}},
      {"noise", {{"dt_s", 1e-4}, {"samples", 65536}, {"traces", 8}, {"segment", 4096},
                 {"fit_band_hz", {60, 1000}}}}};
  REQUIRE(invoke({"noise", "--config", s.config(cfg), "--out", s.out(), "--format", "json"}).code == 0);
  const auto j = json::parse(slurp(fs::path(s.out()) / "noise.json"));
  CHECK(j["summary"]["loglog_slope"].get<double>() == doctest::Approx(-4.0).epsilon(0.05));
}

TEST_CASE("manifest replay reproduces outputs byte for byte") {
  Scratch s;
  const json cfg = {
      {"seed", 11},
      {"spectrum", {{"kind", "ohmic"}, {"high_cutoff_hz", 500}, {"strength", 50.0}}},
      {"sequence", {{"kind", "udd"}, {"n", 3}}},
      {"grid", {{"tau_s", {1e-3, 2e-3}}}},
      {"coherence", {{"method", "montecarlo"}, {"shots", 300}}}};
  REQUIRE(invoke({"coherence", "--config", s.config(cfg), "--out", s.out("a")}).code == 0);
  const auto manifest = fs::path(s.out("a")) / "manifest.json";
  REQUIRE(invoke({"coherence", "--config", manifest.string(), "--out", s.out("b")}).code == 0);
  const auto first = slurp(fs::path(s.out("a")) / "coherence_udd3.csv");
  CHECK(first == slurp(fs::path(s.out("b")) / "coherence_udd3.csv"));
  const auto m = json::parse(slurp(manifest));
  CHECK(m["seed"] == 11);
  CHECK(m["subcommand"] == "coherence");
  // a different seed changes the draw; the flag overrides the config
  REQUIRE(invoke({"coherence", "--config", s.config(cfg), "--out", s.out("c"), "--seed", "12"}).code == 0);
  CHECK(first != slurp(fs::path(s.out("c")) / "coherence_udd3.csv"));
  CHECK(invoke({"rb", "--config", manifest.string(), "--out", s.out("d")}).code == 2);
}

TEST_CASE("json output format") {
  Scratch s;
  const json cfg = {{"spectrum", {{"kind", "white"}, {"strength", 10.0}}},
                    {"sequence", {{"kind", "ramsey"}}},
                    {"grid", {{"tau_s", {1e-3}}}},
                    {"format", "json"}};
  REQUIRE(invoke({"coherence", "--config", s.config(cfg), "--out", s.out()}).code == 0);
  const auto j = json::parse(slurp(fs::path(s.out()) / "coherence.json"));
  CHECK(j["curves"][0]["W"][0].get<double>() == doctest::Approx(std::exp(-0.02)).epsilon(1e-6));
}

TEST_CASE("t2 calibration in the spectrum block") {
  Scratch s;
  const json cfg = {
      {"spectrum", {{"kind", "ambient"}, {"exponent", 4}, {"low_cutoff_hz", 30}, {"t2_s", 2.4e-3}}},
      {"sequence", {{"kind", "ramsey"}}},
      {"grid", {{"tau_s", {2.4e-3}}}}};
  REQUIRE(invoke({"coherence", "--config", s.config(cfg), "--out", s.out()}).code == 0);
  const auto rows = csv_rows(fs::path(s.out()) / "coherence_ramsey.csv");
  CHECK(rows[0][2] == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
}
