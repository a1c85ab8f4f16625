// Acceptance driver: runs every shipped config, checks the pinned
// tolerances and prints one PASS/FAIL line per criterion.

#include "fbmlab/config.hpp"
#include "fbmlab/experiments.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using fbmlab::Config;

namespace {

struct Run {
  Config cfg;
  fbmlab::RunSummary first;
  json summary;  // full summary.json of the first run
};

const fs::path kConfigs = fs::path(FBMLAB_SOURCE_DIR) / "configs";

bool near(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol; }

bool same_list(const std::vector<double>& got, const std::vector<double>& want) {
  if (got.size() != want.size()) return false;
  for (std::size_t i = 0; i < got.size(); ++i)
    if (!near(got[i], want[i])) return false;
  return true;
}

class Checker {
 public:
  // Accumulates the conditions of one criterion with a readable trail.
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      failed_ << " [" << what << "]";
    }
  }
  void note(const std::string& key, double v) { notes_ << " " << key << "=" << v; }
  bool pass() const { return pass_; }
  std::string text() const { return notes_.str() + (pass_ ? "" : "; failed:" + failed_.str()); }

 private:
  bool pass_ = true;
  std::ostringstream notes_, failed_;
};

struct Line {
  int id;
  std::string title;
  bool pass;
  std::string detail;
  double seconds;
  double budget;
};

}  // namespace

int main() {
  const fs::path root_a = fs::temp_directory_path() / "fbmlab-acceptance-a";
  const fs::path root_b = fs::temp_directory_path() / "fbmlab-acceptance-b";
  fs::remove_all(root_a);
  fs::remove_all(root_b);

  std::map<std::string, Run> runs;
  auto run = [&](const std::string& cfg_name) -> Run& {
    auto it = runs.find(cfg_name);
    if (it != runs.end()) return it->second;
    Run r{Config::load(kConfigs / (cfg_name + ".cfg")), {}, {}};
    r.first = fbmlab::run_experiment(r.cfg, root_a);
    std::ifstream in(r.first.directory / "summary.json");
    r.summary = json::parse(in);
    return runs.emplace(cfg_name, std::move(r)).first->second;
  };

  std::vector<Line> lines;
  auto criterion = [&](int id, const std::string& title, const std::string& cfg_name, double budget,
                       const std::function<void(const Run&, const json&, Checker&)>& body) {
    Checker c;
    double seconds = 0.0;
    try {
      const Run& r = run(cfg_name);
      seconds = r.first.wall_seconds;
      c.expect(!r.first.divergence, "no divergence");
      body(r, r.first.headline, c);
      c.expect(seconds < budget, "runtime within budget");
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    lines.push_back({id, title, c.pass(), c.text(), seconds, budget});
    const Line& l = lines.back();
    std::printf("AC%-2d %s  %-28s %8.2fs/%.0fs %s\n", l.id, l.pass ? "PASS" : "FAIL", l.title.c_str(), l.seconds,
                l.budget, l.detail.c_str());
    std::fflush(stdout);
  };

  criterion(1, "lnd-constant", "lnd-constant", 60, [](const Run& r, const json& h, Checker& c) {
    c.expect(same_list(r.cfg.numbers("params", "hurst"), {0.25, 0.5, 0.75}), "hurst set");
    c.expect(r.cfg.integer("params", "n_steps") == 512, "n = 512");
    for (const auto& ph : r.summary.at("per_hurst")) {
      const double cv = ph.at("cv").get<double>();
      c.expect(cv < 0.05, "cv < 5% at H=" + std::to_string(ph.at("hurst").get<double>()));
    }
    c.expect(h.at("half_max_abs_error").get<double>() < 1e-6, "H=1/2 constant within 1e-6");
    c.note("max_cv", h.at("max_cv").get<double>());
    c.note("half_err", h.at("half_max_abs_error").get<double>());
  });

  criterion(2, "fbm-law", "fbm-law", 60, [](const Run& r, const json& h, Checker& c) {
    c.expect(r.cfg.integer("params", "paths") == 20000, "paths = 2e4");
    c.expect(r.cfg.integer("params", "n_steps") == 64, "n = 64");
    c.expect(h.at("entries_beyond_3se").get<int>() == 0, "all entries within 3 SE");
    c.note("max_abs_z", h.at("max_abs_z").get<double>());
    c.note("entries", h.at("entries").get<double>());
  });

  criterion(3, "sewing-convergence", "sewing-convergence", 10, [](const Run&, const json& h, Checker& c) {
    const double rate = h.at("decay_rate").get<double>(), want = h.at("predicted_rate").get<double>();
    c.expect(want > 0.0 && std::abs(rate - want) / want < 0.1, "rate within 10% of prediction");
    c.expect(h.at("oracle_abs_difference").get<double>() < 1e-6, "oracle within 1e-6");
    c.note("rate", rate);
    c.note("predicted", want);
    c.note("oracle_diff", h.at("oracle_abs_difference").get<double>());
  });

  criterion(4, "pvar-oracle", "pvar-oracle", 10, [](const Run& r, const json& h, Checker& c) {
    c.expect(r.cfg.integer("params", "cases") == 100, "100 cases");
    c.expect(r.cfg.integer("params", "points") == 8, "8 points");
    c.expect(h.at("comparisons").get<int>() >= 100, "every case compared");
    c.expect(h.at("mismatches").get<int>() == 0, "exact agreement");
    c.note("comparisons", h.at("comparisons").get<double>());
    c.note("mismatches", h.at("mismatches").get<double>());
  });

  criterion(5, "affine-young-bound", "affine-young-bound", 60, [](const Run& r, const json& h, Checker& c) {
    c.expect(r.cfg.integer("params", "cases") == 100, "100 cases");
    c.expect(near(r.cfg.number("params", "p"), 1.8), "p = 1.8");
    c.expect(h.at("all_finite").get<bool>(), "finite sup|x|");
    c.expect(h.at("blow_ups").get<int>() == 0, "no blow-up");
    c.expect(h.at("slope").get<double>() > 0.0, "positive slope");
    c.note("slope", h.at("slope").get<double>());
    c.note("r2", h.at("r2").get<double>());
  });

  criterion(6, "conditional-regularity", "conditional-regularity", 1200, [](const Run& r, const json& h, Checker& c) {
    const double H = r.cfg.number("params", "hurst"), q = r.cfg.number("params", "q");
    const double alpha = r.cfg.number("params", "alpha");
    c.expect(near(H, 1.0 / 3.0, 1e-9) && near(q, 2.0) && near(alpha, 0.5), "H=1/3, q=2, alpha=0.5");
    c.expect(r.cfg.integer("params", "pasts") == 64 && r.cfg.integer("params", "branches") == 256 &&
                 r.cfg.integer("params", "n_steps") == 512,
             "P=64, M=256, n=512");
    const double target = (1.0 - 1.0 / q) + alpha * H;
    c.expect(std::abs(h.at("slope").get<double>() - target) < 0.1, "slope within 0.1");
    c.expect(h.at("r2").get<double>() >= 0.9, "R2 >= 0.9");
    c.note("slope", h.at("slope").get<double>());
    c.note("target", target);
    c.note("r2", h.at("r2").get<double>());
  });

  criterion(7, "stability-rate", "stability-rate", 900, [](const Run& r, const json& h, Checker& c) {
    c.expect(r.cfg.integer("params", "replicates") == 200, "200 replicates");
    for (const std::string k : {"initial", "drift"}) {
      c.expect(std::abs(h.at(k + "_slope").get<double>() - 1.0) <= 0.2, k + " slope 1 +- 0.2");
      c.expect(h.at(k + "_r2").get<double>() >= 0.9, k + " R2 >= 0.9");
      c.note(k + "_slope", h.at(k + "_slope").get<double>());
    }
  });

  criterion(8, "mollified-cauchy", "mollified-cauchy", 1200, [](const Run& r, const json& h, Checker& c) {
    const double H = r.cfg.number("params", "hurst"), q = r.cfg.number("params", "q");
    const double alpha = r.cfg.number("params", "alpha");
    c.expect(near(H, 0.3) && near(q, 2.0) && near(alpha, -0.1), "alpha=-0.1, H=0.3, q=2");
    c.expect(alpha > 1.0 - 1.0 / ((1.0 - 1.0 / q) * H), "condition A");
    c.expect(r.cfg.integer("params", "replicates") == 200, "200 replicates");
    c.expect(r.cfg.numbers("params", "levels").size() == 4, "4 levels");
    const auto d = h.at("mean_deltas").get<std::vector<double>>();
    for (std::size_t k = 1; k < d.size(); ++k) c.expect(d[k] <= 1.1 * d[k - 1], "monotone with 10% slack");
    for (std::size_t k = 0; k < d.size(); ++k) c.note("delta" + std::to_string(k), d[k]);
  });

  criterion(9, "flow-jacobian", "flow-jacobian", 120, [](const Run& r, const json& h, Checker& c) {
    c.expect(r.cfg.integer("params", "n_steps") == 2048, "n = 2048");
    const double tol = h.at("solver_tolerance").get<double>();
    c.expect(h.at("semiflow_residual").get<double>() < 10.0 * tol, "composition < 10 tol");
    c.expect(h.at("max_fd_relative_error").get<double>() < 1e-3, "Jacobian vs FD 1e-3");
    c.expect(h.at("identity_residual").get<double>() < 1e-6, "J K = I within 1e-6");
    c.note("semiflow", h.at("semiflow_residual").get<double>());
    c.note("fd_rel", h.at("max_fd_relative_error").get<double>());
    c.note("jk", h.at("identity_residual").get<double>());
  });

  criterion(10, "malliavin", "malliavin", 60, [](const Run&, const json& h, Checker& c) {
    c.expect(h.at("sup_difference").get<double>() < 1e-4, "sup difference < 1e-4");
    c.note("sup", h.at("sup_difference").get<double>());
  });

  criterion(11, "rho-irregularity", "rho-irregularity", 900, [](const Run& r, const json&, Checker& c) {
    c.expect(same_list(r.cfg.numbers("params", "hurst"), {0.35, 0.5, 0.75}), "hurst set");
    c.expect(r.cfg.integer("params", "paths") == 200, "200 paths");
    for (const auto& ph : r.summary.at("per_hurst")) {
      const double H = ph.at("hurst").get<double>(), med = ph.at("median_rho").get<double>();
      c.expect(std::abs(med - 1.0 / (2.0 * H)) <= 0.15, "median within 0.15 at H=" + std::to_string(H));
      c.note("median@" + std::to_string(H).substr(0, 4), med);
    }
  });

  criterion(12, "counterexample", "counterexample", 1200, [](const Run& r, const json& h, Checker& c) {
    c.expect(near(r.cfg.number("params", "hurst"), 0.8) && near(r.cfg.number("params", "q_tilde"), 4.0) &&
                 near(r.cfg.number("params", "alpha"), 0.05),
             "H=0.8, q~=4, alpha=0.05");
    c.expect(h.at("best_upper").get<double>() >= 0.75, "upper fraction >= 3/4");
    c.expect(h.at("best_lower").get<double>() >= 0.75, "lower fraction >= 3/4");
    c.expect(h.at("mirror_residual").get<double>() == 0.0, "mirror symmetric");
    const double g0 = h.at("control_gap_first").get<double>(), g1 = h.at("control_gap_last").get<double>();
    c.expect(h.at("control_gap_slope").get<double>() >= 0.5 && g1 <= 0.05 * g0, "control gap -> 0");
    c.note("upper", h.at("best_upper").get<double>());
    c.note("lower", h.at("best_lower").get<double>());
    c.note("control_gap_last", g1);
    c.note("supercritical_gap_last", h.at("supercritical_gap_last").get<double>());
  });

  criterion(13, "mckean-vlasov", "mckean-vlasov", 600, [](const Run& r, const json& h, Checker& c) {
    c.expect(r.cfg.integer("params", "particles") == 512, "N = 512");
    c.expect(h.at("fitted_ratio").get<double>() < 1.0, "ratio < 1");
    c.expect(h.at("fit_r2").get<double>() >= 0.9, "R2 >= 0.9");
    c.expect(h.at("degenerate_iterations").get<int>() == 1 && h.at("degenerate_converged").get<bool>() &&
                 h.at("degenerate_first_distance").get<double>() == 0.0,
             "g = 0 converges in one iteration");
    c.note("ratio", h.at("fitted_ratio").get<double>());
    c.note("r2", h.at("fit_r2").get<double>());
  });

  criterion(14, "transport", "transport", 300, [](const Run&, const json& h, Checker& c) {
    c.expect(h.at("closed_form_max_error").get<double>() <= 1e-12, "b = 0 closed forms at nodes");
    c.expect(h.at("max_mass_drift").get<double>() < 1e-3, "mass within 1e-3 relative");
    c.expect(h.at("duality_order").get<double>() >= 1.0, "duality order >= 1");
    c.expect(h.at("mismatch_detected").get<bool>(), "mismatched pair detected");
    c.note("closed_form", h.at("closed_form_max_error").get<double>());
    c.note("mass", h.at("max_mass_drift").get<double>());
    c.note("duality_order", h.at("duality_order").get<double>());
  });

  // Determinism: every shipped config, including ones not tied to a line above.
  {
    Checker c;
    const auto start = std::chrono::steady_clock::now();
    int compared = 0;
    try {
      for (const auto& entry : fs::directory_iterator(kConfigs)) {
        if (entry.path().extension() != ".cfg") continue;
        const Run& r = run(entry.path().stem().string());
        const fbmlab::RunSummary again = fbmlab::run_experiment(r.cfg, root_b);
        c.expect(again.digest == r.first.digest, entry.path().stem().string() + " digest");
        ++compared;
      }
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    c.expect(compared == 15, "all configs compared");
    c.note("configs", compared);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    lines.push_back({15, "determinism", c.pass(), c.text(), seconds, 0.0});
    std::printf("AC15 %s  %-28s %8.2fs %s\n", c.pass() ? "PASS" : "FAIL", "determinism", seconds, c.text().c_str());
  }

  int failed = 0;
  for (const Line& l : lines) failed += l.pass ? 0 : 1;
  std::printf("%d of %zu criteria passed\n", static_cast<int>(lines.size()) - failed, lines.size());
  fs::remove_all(root_a);
  fs::remove_all(root_b);
  return failed == 0 ? 0 : 1;
}
