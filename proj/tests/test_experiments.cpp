#include <filesystem>
#include <fstream>
#include <sstream>

#include "common.hpp"
#include "lod2s/experiments.hpp"

using namespace lod2s;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lod2s_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ExperimentConfig tiny() {
  ExperimentConfig c;
  c.macro_n = 4;
  c.cell_n = 4;
  c.macro_levels = 1;
  c.cell_levels = 1;
  c.k_list = {2.0};
  c.m = 1;
  c.dump_grid = 8;
  return c;
}

}  // namespace

TEST_CASE("study names") {
  for (auto s : {StudyKind::decay, StudyKind::quasiopt, StudyKind::sweep, StudyKind::single})
    CHECK(parse_study(study_name(s)) == s);
  CHECK_THROWS_AS(parse_study("tables"), ConfigurationError);
}

TEST_CASE("settings") {
  ExperimentConfig c;
  apply_setting(c, "params.k", "4 8 16");
  CHECK(c.k_list == std::vector<double>{4, 8, 16});
  apply_setting(c, "params.inv_eps_i", "10 1");
  CHECK(std::abs(c.eps_i - 1.0 / Complex(10, 1)) < 1e-15);
  apply_setting(c, "params.eps_e", "2");
  CHECK(c.eps_e == Complex(2.0));
  apply_setting(c, "method.m", "auto");
  CHECK(c.m == -1);
  apply_setting(c, "method.m", "3");
  CHECK(c.m == 3);
  apply_setting(c, "mesh.sweep_cell", "false");
  CHECK_FALSE(c.sweep_cell);
  apply_setting(c, "params.datum", "zero");
  CHECK(c.zero_datum);
  CHECK_THROWS_AS(apply_setting(c, "mesh.colour", "1"), ConfigurationError);
  CHECK_THROWS_AS(apply_setting(c, "mesh.macro_n", "eight"), ConfigurationError);
  CHECK_THROWS_AS(apply_setting(c, "mesh.macro_n", "8 9"), ConfigurationError);
  CHECK_THROWS_AS(apply_setting(c, "params.datum", "point"), ConfigurationError);
}

TEST_CASE("validation") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  c.macro_levels = 0;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
  c = ExperimentConfig{};
  c.omega_side = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
  c = ExperimentConfig{};
  c.eps_i = Complex(0.0, 1.0);
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
  c = ExperimentConfig{};
  c.m = -2;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
}

TEST_CASE("INI configuration") {
  const fs::path dir = scratch("ini");
  const fs::path ini = dir / "run.ini";
  {
    std::ofstream os(ini);
    os << "[params]\nk = 4 8\ninv_eps_i = 10 1\n[mesh]\nmacro_n = 16\n[method]\nm = auto\n[run]\nstudy = sweep\n";
  }
  const ExperimentConfig c = load_config(ini.string());
  CHECK(c.k_list == std::vector<double>{4, 8});
  CHECK(c.macro_n == 16);
  CHECK(c.m == -1);
  CHECK(c.study == StudyKind::sweep);
  {
    std::ofstream os(ini);
    os << "[mesh]\nmacro_m = 16\n";
  }
  CHECK_THROWS_AS(load_config(ini.string()), ConfigurationError);
  {
    std::ofstream os(ini);
    os << "k = 4\n";
  }
  CHECK_THROWS_AS(load_config(ini.string()), ConfigurationError);
  CHECK_THROWS_AS(load_config((dir / "missing.ini").string()), ConfigurationError);
}

TEST_CASE("canonical text and hash") {
  ExperimentConfig a, b;
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  b.cell_n = 16;
  CHECK(a.hash() != b.hash());
  CHECK(a.canonical().find("mesh.cell_n=8") != std::string::npos);
  // the output directory and thread count do not change results
  b = a;
  b.out = "elsewhere";
  b.threads = 4;
  CHECK(a.hash() == b.hash());
}

TEST_CASE("result files") {
  const fs::path dir = scratch("result");
  StudyResult r;
  r.name = "demo";
  r.columns = {"a", "b"};
  r.rows = {{1.0, 2.5}, {3.0, 0.125}};
  r.fitted = {{"slope", 0.5}};
  r.provenance = "test";
  write_result(r, dir.string());
  CHECK(slurp(dir / "demo.csv") == "a,b\n1,2.5\n3,0.125\n");
  CHECK(slurp(dir / "demo.dat").rfind("# a b\n", 0) == 0);
  CHECK(slurp(dir / "demo.meta").find("slope = 0.5") != std::string::npos);
  CHECK(r.fitted_value("slope") == 0.5);
  CHECK_THROWS_AS(r.fitted_value("intercept"), ArgumentError);
}

TEST_CASE("single run writes outputs and reuses the corrector cache") {
  const fs::path dir = scratch("single");
  ExperimentConfig c = tiny();
  c.out = dir.string();
  const StudyResult first = run_single(c);
  REQUIRE(first.rows.size() == 1);
  CHECK(first.rows[0][3] < 1e-10);  // residual
  CHECK(first.rows[0][6] < 3.0);    // error ratio
  CHECK(fs::exists(dir / "single_solution.txt"));
  CHECK(fs::exists(dir / "single_field.dat"));
  CHECK(slurp(dir / "single.timing").find("(cached)") == std::string::npos);

  const StudyResult second = run_single(c);
  CHECK(slurp(dir / "single.timing").find("(cached)") != std::string::npos);
  CHECK(second.rows[0][4] == doctest::Approx(first.rows[0][4]).epsilon(1e-12));
}

TEST_CASE("decay study on a tiny hierarchy") {
  ExperimentConfig c = tiny();
  c.decay_mmax = 2;
  c.decay_seeds = 1;
  const StudyResult r = run_decay_study(c);
  CHECK_FALSE(r.rows.empty());
  for (const char* key : {"beta_macro", "beta_star", "beta_incl", "beta_macro_refined", "r2_min_incl_refined"}) {
    const double v = r.fitted_value(key);
    CHECK(std::isfinite(v));
  }
  CHECK(r.provenance.find(version()) != std::string::npos);
}
