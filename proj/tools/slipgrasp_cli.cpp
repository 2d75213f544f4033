#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "slipgrasp/harness/pipeline.hpp"

using namespace slipgrasp;

namespace {

enum Exit : int { ok = 0, unexpected = 1, usage = 2, config_error = 3, io_error = 4, schema_error = 5, run_error = 6 };

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::config: return config_error;
    case ErrorCode::io: return io_error;
    case ErrorCode::schema: return schema_error;
    default: return run_error;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slip detection and regrasp planning experiments"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  app.add_option("--config", config_path, "YAML experiment config");
  app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--out", out, "Output directory (overrides the config)");

  app.add_subcommand("synth-slip", "Generate the slip detection dataset");
  app.add_subcommand("synth-regrasp", "Generate the regrasp dataset");
  app.add_subcommand("train-slip", "Cross-validate and train the slip detectors");
  app.add_subcommand("train-regrasp", "Train the regrasp planner ablations");
  app.add_subcommand("eval", "Evaluate slip detectors on held-out objects");
  app.add_subcommand("bench-policies", "Run the regrasp policy benchmark");
  app.add_subcommand("report", "Assemble summary.txt from the report CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : usage;
  }

  try {
    harness::ExperimentConfig cfg =
        config_path.empty() ? harness::parse_config(YAML::Node(), ".") : harness::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.output_dir = out;

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "synth-slip") harness::synth_slip(cfg);
    else if (cmd == "synth-regrasp") harness::synth_regrasp(cfg);
    else if (cmd == "train-slip") harness::train_slip(cfg);
    else if (cmd == "train-regrasp") harness::train_regrasp(cfg);
    else if (cmd == "eval") harness::evaluate_detectors(cfg);
    else if (cmd == "bench-policies") harness::bench_policies(cfg);
    else if (cmd == "report") harness::write_report(cfg);
    return ok;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return unexpected;
  }
}
