// Command line driver: run a config, a built-in case study, the gradient
// check, or a P-value sweep.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fibertopo/export.hpp"
#include "fibertopo/gradcheck.hpp"
#include "fibertopo/problem.hpp"

namespace fs = std::filesystem;
using namespace fibertopo;

namespace {

struct Common {
  std::string out;
  int max_iter = 0;
  bool quiet = false;
};

void apply_common(ProblemConfig& cfg, const Common& common) {
  if (!common.out.empty()) cfg.output_dir = common.out;
  if (common.max_iter > 0) cfg.max_iter = common.max_iter;
}

IterationObserver progress(bool quiet) {
  if (quiet) return {};
  return [](const IterationRecord& r) {
    if (r.iter % 10 != 1) return;
    std::printf("%5d  c=%.6e  vol=%.4f  g1=%+.3e  g2=%+.3e  s1=%.3e  s2=%.3e  dx=%.2e\n", r.iter,
                r.compliance, r.volume, r.g[0], r.g[1], r.max_sigma1, r.max_sigma2,
                r.max_change);
    std::fflush(stdout);
  };
}

int run_config(const ProblemConfig& cfg, const Common& common) {
  const FeModel model = build_model(cfg);
  const OptimizationResult result =
      run_optimization(model, optimization_settings(cfg), progress(common.quiet));
  const fs::path dir = cfg.output_dir;
  export_fields(result, model.mesh(), dir, cfg.name);
  save_config(cfg, dir / "config.json");
  const bool converged = result.status == TerminationStatus::Converged;
  std::printf("%s: %s after %d iterations, compliance %.6g N*m, volume %.4f, max|s1| %.4g Pa, "
              "max|s2| %.4g Pa -> %s\n",
              cfg.name.c_str(), converged ? "converged" : "stopped at max_iter",
              result.iterations, result.compliance, result.volume, result.report.max_sigma1,
              result.report.max_sigma2, dir.string().c_str());
  return converged ? 0 : 2;
}

std::pair<int, int> parse_mesh(const std::string& s) {
  int w = 0, h = 0;
  char x = 0;
  std::istringstream is(s);
  if (!(is >> w >> x >> h) || (x != 'x' && x != 'X') || !is.eof()) {
    throw ConfigError("mesh: expected WxH, got '" + s + "'");
  }
  return {w, h};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Density and fibre-angle topology optimization with P-norm stress constraints"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--out", common.out, "Output directory");
  app.add_option("--max-iter", common.max_iter, "Override the iteration cap");
  app.add_flag("--quiet", common.quiet, "Only print the final summary");

  auto* run = app.add_subcommand("run", "Optimize the problem described by a JSON config");
  std::string config_path;
  run->add_option("config", config_path)->required();

  auto* cas = app.add_subcommand("case", "Run a built-in case study (1..4)");
  int case_id = 0;
  std::string variant;
  cas->add_option("id", case_id)->required();
  cas->add_option("--variant", variant, "Case variant");
  bool dump_only = false;
  cas->add_flag("--dump-config", dump_only, "Print the preset config and exit");

  auto* grad = app.add_subcommand("gradcheck", "Compare analytic sensitivities with finite differences");
  std::string mesh = "4x3";
  GradcheckOptions gopt;
  grad->add_option("--mesh", mesh, "Mesh WxH (at most 10x10)");
  grad->add_option("--seed", gopt.seed);
  grad->add_option("--step", gopt.h, "Finite difference step");

  auto* sweep = app.add_subcommand("sweep-p", "Repeat a config for several P values");
  std::string sweep_config;
  std::vector<int> p_values{4, 6, 8, 10};
  sweep->add_option("config", sweep_config)->required();
  sweep->add_option("--values", p_values)->delimiter(',');

  for (auto* sub : {run, cas, grad, sweep}) {
    sub->add_option("--out", common.out, "Output directory");
    sub->add_option("--max-iter", common.max_iter, "Override the iteration cap");
    sub->add_flag("--quiet", common.quiet, "Only print the final summary");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*run) {
      ProblemConfig cfg = load_config(config_path);
      apply_common(cfg, common);
      return run_config(cfg, common);
    }
    if (*cas) {
      ProblemConfig cfg = build_case_study(case_id, variant);
      apply_common(cfg, common);
      if (dump_only) {
        std::cout << serialize_config(cfg);
        return 0;
      }
      return run_config(cfg, common);
    }
    if (*grad) {
      std::tie(gopt.nelx, gopt.nely) = parse_mesh(mesh);
      const GradReport report = run_gradcheck(gopt);
      std::cout << report.table();
      return report.passed ? 0 : 1;
    }
    if (*sweep) {
      const ProblemConfig base = load_config(sweep_config);
      const fs::path root = common.out.empty() ? fs::path(base.output_dir) : fs::path(common.out);
      std::vector<std::string> rows;
      bool all_converged = true;
      for (int p : p_values) {
        ProblemConfig cfg = base;
        cfg.pnorm = p;
        cfg.name = base.name + "-p" + std::to_string(p);
        if (common.max_iter > 0) cfg.max_iter = common.max_iter;
        cfg.output_dir = (root / ("p" + std::to_string(p))).string();
        validate_config(cfg);
        const FeModel model = build_model(cfg);
        const OptimizationResult r =
            run_optimization(model, optimization_settings(cfg), progress(common.quiet));
        export_fields(r, model.mesh(), cfg.output_dir, cfg.name);
        save_config(cfg, fs::path(cfg.output_dir) / "config.json");
        all_converged = all_converged && r.status == TerminationStatus::Converged;
        char line[160];
        std::snprintf(line, sizeof line, "%4d %10d %14.6g %14.6g %14.6g %10s\n", p, r.iterations,
                      r.compliance, r.report.max_sigma1, r.report.max_sigma2,
                      r.status == TerminationStatus::Converged ? "yes" : "no");
        rows.emplace_back(line);
      }
      std::ostringstream table;
      table << "   P iterations     compliance     max|s1|_Pa     max|s2|_Pa  converged\n";
      for (const auto& r : rows) table << r;
      fs::create_directories(root);
      std::ofstream(root / "summary.txt") << table.str();
      std::cout << table.str();
      return all_converged ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
