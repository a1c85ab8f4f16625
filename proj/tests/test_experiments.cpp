#include "fbmlab/experiments.hpp"

#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

using namespace fbmlab;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = FBMLAB_SOURCE_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fbmlab_test_" + name);
  fs::remove_all(p);
  return p;
}

const char* kStability = R"(
[experiment]
name = stability-rate
seed = 1
output = out

[params]
hurst = 0.5
q = inf
alpha = ALPHA
n_steps = 32
replicates = 4
x0 = 0
perturbations = 0.5, 0.25

[field]
name = sine
dim = 1
amplitude = 1
frequency = 1
)";

std::string stability_with_alpha(const std::string& a) {
  std::string s = kStability;
  s.replace(s.find("ALPHA"), 5, a);
  return s;
}

}  // namespace

TEST_CASE("config parsing") {
  const Config c = Config::parse("# c\n[a]\nx = 1, 2 ,3\ny = inf\n[b]\nz = word\n");
  CHECK(c.numbers("a", "x") == std::vector<double>{1, 2, 3});
  CHECK(std::isinf(c.number("a", "y")));
  CHECK(c.raw("b", "z") == "word");
  CHECK(c.canonical() == "a.x=1, 2 ,3\na.y=inf\nb.z=word\n");
  CHECK_THROWS_AS(Config::parse("[a]\nx = 1\nx = 2\n"), ValidationError);
  CHECK_THROWS_AS(Config::parse("[a]\nx =\n"), ValidationError);
  CHECK_THROWS_AS(Config::parse("x = 1\n"), ValidationError);
  CHECK_THROWS_AS(Config::parse("[a]\nx = 1.5\n").integer("a", "x"), ValidationError);
  CHECK_THROWS_AS(Config::parse("[a]\nx = 1q\n").number("a", "x"), ValidationError);
  CHECK(Config::parse("[a]\nx=1\n[b]\ny=2\n").digest() == Config::parse("[b]\ny = 2\n[a]\nx = 1\n").digest());
}

TEST_CASE("catalog") {
  const auto& cat = list_experiments();
  REQUIRE_FALSE(cat.empty());
  std::set<int> criteria;
  bool has_rho = false;
  for (const auto& e : cat) {
    CHECK(e.criterion >= 1);
    CHECK_FALSE(e.claim.empty());
    criteria.insert(e.criterion);
    has_rho = has_rho || e.name == "rho-irregularity";
  }
  CHECK(has_rho);
  CHECK(criteria.size() == cat.size());
  CHECK(&list_experiments() == &cat);
  CHECK(list_experiments().front().name == "lnd-constant");
  CHECK_THROWS_AS(find_experiment("nope"), ValidationError);
}

TEST_CASE("every shipped config validates") {
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(kSource / "configs")) {
    if (entry.path().extension() != ".cfg") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(validate_config(Config::load(entry.path())));
    ++seen;
  }
  CHECK(seen >= 14);
}

TEST_CASE("strict keys") {
  const std::string good = stability_with_alpha("1");
  CHECK_NOTHROW(validate_config(Config::parse(good)));
  CHECK_THROWS_AS(validate_config(Config::parse(good + "\n[extra]\nk = 1\n")), ValidationError);
  std::string unknown = good;
  unknown.insert(unknown.find("n_steps"), "bogus = 1\n");
  CHECK_THROWS_WITH_AS(validate_config(Config::parse(unknown)), doctest::Contains("bogus"), ValidationError);
  std::string missing_field = good;
  missing_field.erase(missing_field.find("frequency = 1\n"), 14);
  CHECK_THROWS_WITH_AS(validate_config(Config::parse(missing_field)), doctest::Contains("frequency"), ValidationError);
  std::string no_seed = good;
  no_seed.erase(no_seed.find("seed = 1\n"), 9);
  CHECK_THROWS_AS(validate_config(Config::parse(no_seed)), ValidationError);
}

TEST_CASE("out-of-regime alpha names the violated inequality") {
  CHECK_THROWS_WITH_AS(validate_config(Config::parse(stability_with_alpha("-1.5"))),
                       doctest::Contains("alpha = -1.5 must be > 1 - 1/(q'H)"), ValidationError);
}

TEST_CASE("golden digest for the brownian lnd run") {
  const fs::path root = scratch("golden");
  const RunSummary s = run_experiment(Config::load(kSource / "configs" / "lnd-half.cfg"), root);
  std::string golden = slurp(kSource / "tests" / "golden" / "lnd-half.digest");
  golden.erase(golden.find_last_not_of(" \n\r") + 1);
  CHECK(s.digest == golden);
  fs::remove_all(root);
}

TEST_CASE("re-running after deleting outputs reproduces the files") {
  const fs::path root = scratch("rerun");
  const Config cfg = Config::load(kSource / "configs" / "pvar-oracle.cfg");
  const RunSummary a = run_experiment(cfg, root);
  const std::string points = slurp(a.directory / "points.csv"), summary = slurp(a.directory / "summary.json");
  fs::remove_all(root);
  const RunSummary b = run_experiment(cfg, root);
  CHECK(a.digest == b.digest);
  CHECK(a.directory == b.directory);
  CHECK(slurp(b.directory / "points.csv") == points);
  CHECK(slurp(b.directory / "summary.json") == summary);
  CHECK(fs::exists(b.directory / "manifest.json"));
  fs::remove_all(root);
}

TEST_CASE("plot emission") {
  const fs::path root = scratch("plot");
  const RunSummary s = run_experiment(Config::load(kSource / "configs" / "sewing-convergence.cfg"), root);
  const fs::path ll = emit_plot_data(s.directory, "loglog");
  const std::string text = slurp(ll);
  CHECK(text.rfind("series,log_x,log_y,fit_y\n", 0) == 0);
  CHECK(slurp(emit_plot_data(s.directory, "series")).rfind("series,x,y,y_err\n", 0) == 0);
  CHECK_THROWS_AS(emit_plot_data(s.directory, "pie"), DomainError);

  const fs::path empty = root / "empty";
  fs::create_directories(empty);
  std::ofstream(empty / "points.csv") << "series,x,y,y_err\n";
  CHECK_THROWS_AS(emit_plot_data(empty, "loglog"), NumericalError);
  CHECK_FALSE(fs::exists(empty / "plot_loglog.csv"));
  CHECK_THROWS_AS(emit_plot_data(root / "missing", "series"), NumericalError);
  fs::remove_all(root);
}

TEST_CASE("output root follows the environment") {
  const Config cfg = Config::parse(stability_with_alpha("1"));
  ::setenv("FBMLAB_OUTPUT_ROOT", "/tmp/elsewhere", 1);
  CHECK(output_root(cfg) == fs::path("/tmp/elsewhere"));
  ::unsetenv("FBMLAB_OUTPUT_ROOT");
  CHECK(output_root(cfg) == fs::path("out"));
}
