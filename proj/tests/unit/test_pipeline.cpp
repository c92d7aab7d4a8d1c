#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bandframe/errors.hpp"
#include "bandframe/pipeline.hpp"
#include "support.hpp"

using namespace bandframe;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("bandframe_pipeline_" + name);
  fs::remove_all(dir);
  return dir;
}

RunConfig minimal(const fs::path& out) {
  RunConfig c;
  c.domain = testing::unit_interval(1.0 / 256);
  c.delta = 0.5;
  c.trials = 20;
  c.besov_functions = 4;
  c.output_dir = out;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

} // namespace

TEST_CASE("minimal interval run passes every certificate") {
  const auto out = scratch("minimal");
  const auto report = run_pipeline(minimal(out));
  for (const auto& c : report.certificates) CHECK_MESSAGE((c.passed || !c.gating), c.name);
  CHECK(report.passed());
  CHECK(report.body["schema"] == std::string(kReportSchema));
  for (const char* f : {"report.json", "weyl.csv", "eigenvalues.csv", "localization.csv",
                        "reconstruction.csv", "besov.csv"}) {
    CHECK_MESSAGE(fs::exists(out / f), f);
  }
  std::ifstream weyl(out / "weyl.csv");
  std::string header;
  std::getline(weyl, header);
  CHECK(header == "omega,dim_E,weyl_prediction,ratio");
  fs::remove_all(out);
}

TEST_CASE("second run hits the cache and reproduces the numbers") {
  const auto out = scratch("cache");
  const auto cfg = minimal(out);
  const auto first = run_pipeline(cfg);
  const auto first_file = nlohmann::json::parse(slurp(out / "report.json"));
  const auto second = run_pipeline(cfg);
  const auto second_file = nlohmann::json::parse(slurp(out / "report.json"));
  CHECK(first.body["runtime"]["cache"]["status"] == "miss");
  CHECK(second.body["runtime"]["cache"]["status"] == "hit");
  CHECK(first.numeric() == second.numeric());
  auto strip = [](nlohmann::json j) {
    j.erase("runtime");
    return j.dump();
  };
  CHECK(strip(first_file) == strip(second_file));

  RunConfig uncached = cfg;
  uncached.use_cache = false;
  uncached.output_dir = scratch("cache_off");
  CHECK(run_pipeline(uncached).numeric() == first.numeric());
  fs::remove_all(out);
  fs::remove_all(uncached.output_dir);
}

TEST_CASE("configuration errors name the field") {
  RunConfig c = minimal(scratch("bad"));
  c.delta = 1.5;
  try {
    validate(c);
    FAIL("expected a configuration error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("frame.delta") != std::string::npos);
  }
  CHECK_THROWS_AS(run_pipeline(c), ConfigError);

  c = minimal(scratch("bad"));
  c.coefficient = "quadratic";
  CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("operator.coefficient"), ConfigError);
  c = minimal(scratch("bad"));
  c.qs = {0.5};
  CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("besov.q"), ConfigError);
  c = minimal(scratch("bad"));
  c.matrix = {1.0, 3.0, 1.0};
  c.coefficient = "matrix";
  CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("operator.matrix"), ConfigError);
}

TEST_CASE("stage failures keep a partial report") {
  const auto out = scratch("partial");
  RunConfig c = minimal(out);
  c.max_level = 12;
  try {
    run_pipeline(c);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "eigs");
  }
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  CHECK(report["failure"]["stage"] == "eigs");
  CHECK(report.contains("domain"));
  CHECK(report["passed"] == true); // only the domain certificate was reached
  fs::remove_all(out);
}

TEST_CASE("partial stages") {
  RunConfig c = minimal(scratch("stages"));
  c.write_files = false;
  const auto domain_only = run_pipeline(c, Stage::domain);
  CHECK(domain_only.body.contains("domain"));
  CHECK_FALSE(domain_only.body.contains("eigs"));
  const auto frame = run_pipeline(c, Stage::frame);
  CHECK(frame.body.contains("frame"));
  CHECK_FALSE(frame.body.contains("verify"));
  CHECK(parse_stage("reconstruct") == Stage::reconstruct);
  CHECK_THROWS_AS(parse_stage("plot"), ConfigError);
  CHECK_FALSE(fs::exists(c.output_dir));
}

TEST_CASE("seeded bandlimited samples") {
  const auto dom = build_domain(testing::unit_square(1.0 / 32));
  const auto basis = solve_lowest(assemble(dom, CoefficientField::identity()), dom, 30);
  const double omega = basis.values[19];
  const GridFunction a = sample_bandlimited(basis, omega, 5);
  const GridFunction b = sample_bandlimited(basis, omega, 5);
  CHECK(a == b);
  CHECK(a != sample_bandlimited(basis, omega, 6));
  CHECK(norm(a, dom) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(best_approx(basis, a, std::sqrt(omega)) <= 1e-12);
  CHECK_THROWS_AS(sample_bandlimited(basis, 1.0, 5), ContractViolation);
}

TEST_CASE("config files and settings") {
  const auto dir = scratch("config");
  fs::create_directories(dir);
  const auto path = dir / "run.toml";
  {
    std::ofstream out(path);
    out << "# comment\n"
           "[domain]\nkind = \"disk\"\nparams = [0.0, 0.0, 1.0]\nh = \"1/32\"\n"
           "[operator]\ncoefficient = \"sine_bump\"\namplitude = 0.25\n"
           "[frame]\ndelta = 0.4\na0 = 0.3\nmax_level = 2\n"
           "[besov]\nq = [1, \"inf\"]\n"
           "[test]\nseed = 99\n";
  }
  const auto c = load_config(path);
  CHECK(c.domain.kind == DomainKind::disk);
  CHECK(c.domain.params == std::vector<double>{0.0, 0.0, 1.0});
  CHECK(c.domain.h == 1.0 / 32);
  CHECK(c.coefficient == "sine_bump");
  CHECK(c.amplitude == 0.25);
  CHECK(c.delta == 0.4);
  REQUIRE(c.a0.has_value());
  CHECK(*c.a0 == 0.3);
  CHECK(c.max_level == 2);
  REQUIRE(c.qs.size() == 2);
  CHECK(std::isinf(c.qs[1]));
  CHECK(c.seed == 99);
  CHECK_NOTHROW(validate(c));

  RunConfig d = c;
  apply_setting(d, "frame.a0", {"calibrate"});
  CHECK_FALSE(d.a0.has_value());
  apply_setting(d, "besov.alpha", {"0.5,1,2"});
  CHECK(d.alphas == std::vector<double>{0.5, 1.0, 2.0});
  apply_setting(d, "solver.m", {"auto"});
  CHECK(d.m == 0);
  CHECK_THROWS_WITH_AS(apply_setting(d, "frame.delta", {"half"}), doctest::Contains("frame.delta"),
                       ConfigError);
  CHECK_THROWS_AS(apply_setting(d, "frame.colour", {"1"}), ConfigError);
  CHECK_THROWS_AS(apply_setting(d, "domain.h", {"1/0"}), ConfigError);
  CHECK_THROWS_AS(apply_setting(d, "test.trials", {"-3"}), ConfigError);
  CHECK(std::find(setting_keys().begin(), setting_keys().end(), "frame.delta") != setting_keys().end());

  {
    std::ofstream out(path);
    out << "[frame]\nspacing = 3\n";
  }
  CHECK_THROWS_WITH_AS(load_config(path), doctest::Contains("frame.spacing"), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "missing.toml"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("output directory environment override") {
  RunConfig c;
  c.output_dir = "somewhere";
  ::setenv(kOutputDirEnv, "/tmp/elsewhere", 1);
  CHECK(with_environment(c).output_dir == "/tmp/elsewhere");
  ::unsetenv(kOutputDirEnv);
  CHECK(with_environment(c).output_dir == "somewhere");
}

TEST_CASE("report summary") {
  RunConfig c = minimal(scratch("summary"));
  c.write_files = false;
  const auto report = run_pipeline(c, Stage::frame);
  const auto text = summarize_report(report.body);
  CHECK(text.find("PASS partition_of_unity") != std::string::npos);
  CHECK(text.find("all gating certificates pass") != std::string::npos);
}
