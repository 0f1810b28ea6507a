// qmap: batch driver for recovery runs, phase sweeps, information-dimension
// tables, validation suites and one-shot projections.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qmap/experiments.hpp"

namespace {

namespace cli = qmap::cli;

struct Args {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned jobs = qmap::default_jobs();
  bool timing = false;
  std::string trace_out;
};

std::unique_ptr<std::ostream> open_out(const std::string& path) {
  auto f = std::make_unique<std::ofstream>(path, std::ios::binary);
  if (!*f) throw qmap::InputError("cannot write " + path);
  return f;
}

int run(const std::string& cmd, const Args& a) {
  std::string text;
  try {
    text = qmap::read_file(a.config);
  } catch (const qmap::InputError& e) {
    throw cli::ConfigError(e.what());
  }
  qmap::json cfg = cli::parse_config(text, cmd);
  if (a.seed) {
    if (cmd == "infodim" || cmd == "project") throw cli::ConfigError("--seed: command '" + cmd + "' takes no seed");
    cfg["seed"] = *a.seed;
  }
  std::string out_path = a.out;
  if (out_path.empty() && cfg.contains("out")) out_path = cfg.at("out").get<std::string>();
  std::unique_ptr<std::ostream> file;
  if (!out_path.empty()) file = open_out(out_path);
  std::ostream& out = file ? *file : std::cout;

  const cli::RunOptions opt{std::max(1u, a.jobs), a.timing};
  int code = 0;
  if (cmd == "recover") {
    std::string trace_path = a.trace_out;
    if (trace_path.empty() && cfg.contains("trace_out")) trace_path = cfg.at("trace_out").get<std::string>();
    std::unique_ptr<std::ostream> trace;
    if (!trace_path.empty()) trace = open_out(trace_path);
    code = cli::cmd_recover(cfg, opt, out, trace.get());
  } else if (cmd == "phase") {
    code = cli::cmd_phase(cfg, opt, out);
  } else if (cmd == "infodim") {
    code = cli::cmd_infodim(cfg, out);
  } else if (cmd == "validate") {
    code = cli::cmd_validate(cfg, opt, out);
  } else {
    code = cli::cmd_project(cfg, out);
  }
  out.flush();
  if (!out) throw qmap::InputError("failed writing output");
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Q-MAP compressed sensing experiments"};
  app.require_subcommand(1);
  Args args;
  std::string schema_cmd;

  const char* commands[][2] = {
      {"recover", "PGD recovery trials; CSV with one row per trial"},
      {"phase", "success rate over an m/n grid; CSV with one row per cell"},
      {"infodim", "H([X]_b)/b table for a source model"},
      {"validate", "Monte Carlo checks of the concentration bounds; JSON report"},
      {"project", "project a vector read from CSV onto the feasible grid sequences"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", args.config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "output path (default: config \"out\", else stdout)");
    if (std::string(name) != "infodim" && std::string(name) != "project") {
      sub->add_option("--seed", args.seed, "overrides the config seed");
      sub->add_option("--jobs", args.jobs, "worker threads")->check(CLI::PositiveNumber);
    }
    if (std::string(name) == "recover") {
      sub->add_flag("--timing", args.timing, "record wall-clock time per trial (breaks byte-identical reruns)");
      sub->add_option("--trace-out", args.trace_out, "per-iteration trace CSV");
    }
  }
  auto* schema = app.add_subcommand("schema", "print the JSON schema of a command's config");
  schema->add_option("command", schema_cmd, "recover | phase | infodim | validate | project")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (schema->parsed()) {
      std::cout << cli::schema::for_command(schema_cmd).dump(2) << '\n';
      return 0;
    }
    for (const auto& [name, help] : commands) {
      if (app.got_subcommand(name)) return run(name, args);
    }
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
