// qstrat: strategy distinguishability from the command line.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <qstrat/channel_spec.hpp>
#include <qstrat/errors.hpp>
#include <qstrat/json_io.hpp>
#include <qstrat/programs.hpp>
#include <qstrat/svg_plot.hpp>
#include <qstrat/sweep.hpp>

namespace {

using namespace qstrat;

struct QuantityArgs {
  std::string a;
  std::string b;
  int n = 1;
  double epsilon = 0.05;
  std::string mode = "adaptive";
  bool json = false;
};

void add_quantity_command(CLI::App& app, const std::string& name, const std::string& help, QuantityArgs& args) {
  auto* cmd = app.add_subcommand(name, help);
  cmd->add_option("--a", args.a, "channel spec of the first strategy")->required();
  cmd->add_option("--b", args.b, "channel spec of the second strategy")->required();
  cmd->add_option("--n", args.n, "number of channel uses")->check(CLI::PositiveNumber)->capture_default_str();
  if (name != "distance") {
    cmd->add_option("--epsilon", args.epsilon, "smoothing parameter")->capture_default_str();
  }
  cmd->add_option("--mode", args.mode, "adaptive or parallel")
      ->check(CLI::IsMember({"adaptive", "parallel"}))
      ->capture_default_str();
  cmd->add_flag("--json", args.json, "print the full result as JSON");
}

int run_quantity(const std::string& name, const QuantityArgs& args) {
  const Quantity q = quantity_from_string(name);
  const auto n = static_cast<std::size_t>(args.n);
  const auto sa = n_fold_sequential_choi(parse_channel_spec(args.a).build(), n);
  const auto sb = n_fold_sequential_choi(parse_channel_spec(args.b).build(), n);
  const double eps = q == Quantity::distance ? 0.0 : args.epsilon;
  QuantityResult r;
  int code = 0;
  try {
    r = evaluate(q, sa, sb, eps, mode_from_string(args.mode));
  } catch (const SolveError& e) {
    std::cerr << "qstrat: " << e.what() << "\n";
    r = e.partial();
    code = 2;
  }
  if (args.json) {
    std::cout << dump_json(result_to_json(r), 2) << "\n";
  } else {
    std::printf("%s = %.12g  (primal %.12g, dual %.12g, gap %.3g, %d iterations)\n", name.c_str(), r.value,
                r.primal_value, r.dual_value, r.gap, r.total_iterations());
  }
  return code;
}

struct SweepArgs {
  std::string config;
  std::string preset;
  std::string out;
  int jobs = 1;
  bool resume = false;
  bool quiet = false;
};

std::string preset_path(const std::string& name) {
  namespace fs = std::filesystem;
  if (const char* dir = std::getenv("QSTRAT_PRESET_DIR")) return (fs::path(dir) / (name + ".json")).string();
  for (const char* dir : {QSTRAT_SOURCE_PRESET_DIR, QSTRAT_INSTALL_PRESET_DIR}) {
    const auto p = fs::path(dir) / (name + ".json");
    if (fs::exists(p)) return p.string();
  }
  throw Error("unknown preset '" + name + "'");
}

int run_sweep_command(const SweepArgs& args) {
  const std::string path = args.preset.empty() ? args.config : preset_path(args.preset);
  SweepConfig c = sweep_config_from_json(read_json_file(path));
  if (!args.out.empty()) c.output_path = args.out;
  SweepOptions o;
  o.jobs = args.jobs;
  o.resume = args.resume;
  if (!args.quiet) {
    o.progress = [](const ResultRow& r, std::size_t done, std::size_t total) {
      std::fprintf(stderr, "[%zu/%zu] %s n=%d %s noise1=%g noise2=%g gamma1=%g gamma2=%g -> %s %s\n", done, total,
                   r.quantity.c_str(), r.n, r.mode.c_str(), r.noise1, r.noise2, r.gamma1, r.gamma2,
                   format_csv_real(r.value).c_str(), r.status.c_str());
    };
  }
  const auto rows = run_sweep(c, o);
  int failed = 0;
  for (const auto& r : rows) failed += r.status != "optimal";
  std::fprintf(stderr, "%zu cells evaluated, %d not optimal; results in %s\n", rows.size(), failed,
               c.output_path.c_str());
  return failed ? 2 : 0;
}

int run_verify(const std::string& path, double tol) {
  const auto s = strategy_from_json(read_json_file(path));
  const auto rep = verify_comb(s, tol);
  for (std::size_t k = 0; k < rep.residuals.size(); ++k) {
    std::printf("level %zu: residual %.3e, min eigenvalue %.3e\n", k + 1, rep.residuals[k],
                k < rep.min_eigenvalues.size() ? rep.min_eigenvalues[k] : 0.0);
  }
  std::printf("%s\n", rep.pass ? "pass" : "fail");
  return rep.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distinguishability of quantum strategies (strategy distance, dmin, dmax)"};
  app.require_subcommand(1);

  QuantityArgs qargs;
  add_quantity_command(app, "distance", "normalized strategy distance", qargs);
  add_quantity_command(app, "dmin", "smooth min-relative entropy (distillable distinguishability), bits", qargs);
  add_quantity_command(app, "dmax", "smooth max-relative entropy (distinguishability cost), bits", qargs);

  SweepArgs sargs;
  auto* sweep = app.add_subcommand("sweep", "evaluate a parameter grid into a CSV");
  auto* config = sweep->add_option("--config", sargs.config, "sweep config JSON");
  auto* preset = sweep->add_option("--preset", sargs.preset, "shipped preset: fig3, fig4 or fig5");
  config->excludes(preset);
  sweep->add_option("--out", sargs.out, "override output_path");
  sweep->add_option("--jobs", sargs.jobs, "concurrent cells")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_flag("--resume", sargs.resume, "skip cells already in the CSV");
  sweep->add_flag("--quiet", sargs.quiet, "no per-cell progress");

  std::string csv, plot_quantity, svg;
  auto* plot = app.add_subcommand("plot", "render adaptive minus parallel gaps as SVG");
  plot->add_option("--csv", csv, "sweep CSV")->required();
  plot->add_option("--quantity", plot_quantity, "distance, dmin or dmax")
      ->required()
      ->check(CLI::IsMember({"distance", "dmin", "dmax"}));
  plot->add_option("--out", svg, "output SVG path")->required();

  std::string comb_path;
  double tol = kCombTol;
  auto* verify = app.add_subcommand("verify", "check the comb constraints of a strategy JSON");
  verify->add_option("--comb", comb_path, "strategy JSON")->required();
  verify->add_option("--tol", tol, "tolerance")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    for (const char* name : {"distance", "dmin", "dmax"}) {
      if (app.got_subcommand(name)) return run_quantity(name, qargs);
    }
    if (app.got_subcommand(sweep)) {
      if (sargs.config.empty() && sargs.preset.empty()) {
        std::cerr << "qstrat sweep: one of --config or --preset is required\n";
        return 1;
      }
      return run_sweep_command(sargs);
    }
    if (app.got_subcommand(plot)) {
      render_plot(csv, plot_quantity, svg);
      return 0;
    }
    if (app.got_subcommand(verify)) return run_verify(comb_path, tol);
  } catch (const qstrat::Error& e) {
    std::cerr << "qstrat: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "qstrat: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
