#include <iostream>

#include "CLI11.hpp"
#include "pipeline.hpp"

using namespace holohj;
using namespace holohj::cli;

int main(int argc, char** argv) {
  CLI::App app{"Hamilton-Jacobi solver for holonomic Hamiltonians"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> precision;
  bool force = false;
  app.add_option("--config", config_path, "pipeline configuration (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "artifact directory");
  app.add_option("--seed", seed, "seed for verification sampling");
  app.add_option("--precision", precision, "numeric precision for verification")
      ->check(CLI::IsMember({"double", "extended"}));
  app.add_flag("--force", force, "recompute stages whose artifacts are up to date");
  app.fallthrough();
  for (const auto& s : stage_order()) app.add_subcommand(s, "run the " + s + " stage");
  app.add_subcommand("run-all", "run every stage in order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kInputError;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  std::string stage = cmd;
  StageContext ctx;
  ctx.out = out_dir;
  ctx.force = force;
  try {
    stage = "config";
    ctx.cfg = load_config(config_path);
    if (seed) ctx.cfg.seed = *seed;
    if (precision) ctx.cfg.precision = *precision;
    const std::vector<std::string> stages = cmd == "run-all" ? stage_order() : std::vector<std::string>{cmd};
    for (const auto& s : stages) {
      stage = s;
      run_named_stage(ctx, s);
    }
    fs::remove(ctx.out / "error.json");
    return kOk;
  } catch (const Error& e) {
    const int rc = exit_code_for(e);
    const json err = error_json(stage, e.code(), e.what(), rc);
    std::cerr << err.dump() << "\n";
    try {
      write_text(ctx.out / "error.json", err.dump(2) + "\n");
    } catch (const std::exception&) {
    }
    return rc;
  } catch (const std::exception& e) {
    const json err = error_json(stage, "InternalError", e.what(), kInternal);
    std::cerr << err.dump() << "\n";
    return kInternal;
  }
}
