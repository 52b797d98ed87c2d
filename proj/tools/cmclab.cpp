// Command-line front end: cmclab <analyze|torsion|decompose|sweep|capillarity> <config>
// Exit status 0 when every member succeeded, 2 when some member failed, 1 on
// configuration errors.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cmclab/errors.hpp"
#include "cmclab/format.hpp"
#include "cmclab/sweep.hpp"

using namespace cmclab;

namespace {

void print_row(const MemberResult& r) {
  std::cout << "  [" << r.index << "] param=" << num(r.param) << " h=" << num(r.h);
  if (r.rep) std::cout << " delta=" << num(r.rep->delta) << " Q=" << num(r.rep->Q);
  if (r.eta) std::cout << " eta=" << num(*r.eta);
  if (r.torsion) std::cout << " cg_iters=" << r.torsion->iterations;
  if (r.decomposition) {
    std::cout << " J=" << r.decomposition->balls.size() << " sym_diff=" << num(r.decomposition->metrics.sym_diff_rel);
    if (r.decomposition->clamped) std::cout << " (clamped)";
  }
  if (r.capillarity) std::cout << " lambda=" << num(r.capillarity->lambda.volume_form);
  if (!r.ok()) std::cout << " ERROR " << r.error;
  std::cout << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantitative stability laboratory for almost-CMC domains"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");

  std::string config_path;
  std::vector<std::string> dump_fields;
  bool dump_surface = false;
  std::string out_dir;
  double h_override = 0.0;
  app.add_option("--dump-field", dump_fields, "Write a field snapshot per member (phi, f, f_eps)")
      ->check(CLI::IsMember({"phi", "f", "f_eps"}))
      ->take_all();
  app.add_flag("--dump-surface", dump_surface, "Write the surface samples per member");
  app.add_option("--out", out_dir, "Output directory (overrides the config)");
  app.add_option("--h", h_override, "Grid spacing (overrides the config)")->check(CLI::PositiveNumber);

  const std::pair<const char*, Stage> commands[] = {
      {"analyze", Stage::Analyze},         {"torsion", Stage::Torsion}, {"decompose", Stage::Decompose},
      {"sweep", Stage::Sweep},             {"capillarity", Stage::Capillarity},
  };
  const char* help[] = {"Measures, deficits and identities", "Torsion solve and gradient checks",
                        "Ball decomposition and stability metrics", "Full pipeline with exponent fits and plots",
                        "Lagrange multiplier and stationarity checks"};
  Stage stage = Stage::Sweep;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    auto* sub = app.add_subcommand(commands[i].first, help[i]);
    sub->add_option("config", config_path, "Experiment config (INI)")->required();
    sub->callback([&stage, s = commands[i].second] { stage = s; });
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  if (h_override > 0) cfg.grid.h = h_override;
  if (!out_dir.empty()) cfg.out = out_dir;

  RunOptions opt;
  opt.stage = stage;
  opt.dump_fields = dump_fields;
  opt.dump_surface = dump_surface;
  if (!dump_fields.empty() || dump_surface) opt.dump_dir = cfg.out;

  std::cout << cfg.name << " (config " << cfg.hash() << ", " << cfg.members().size() << " member(s), h = " << num(cfg.grid.h)
            << ")\n";
  try {
    if (!opt.dump_dir.empty()) std::filesystem::create_directories(opt.dump_dir);
    const SweepResult result = run_experiment(cfg, opt);
    bool failed = false;
    for (const auto& r : result.rows) {
      print_row(r);
      failed = failed || !r.ok();
    }
    for (const auto& f : result.fits)
      std::cout << "  fit " << f.metric << ": slope " << num(f.slope) << " (theory " << num(f.theory) << ", R2 "
                << num(f.r2) << ") " << f.flag << '\n';
    const auto files = write_outputs(cfg.out, cfg, result, stage);
    std::cout << "wrote " << files.size() << " file(s) to " << cfg.out.string() << '\n';
    return failed ? 2 : 0;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
}
