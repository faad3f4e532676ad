#include "carnot/app.hpp"
#include "carnot/errors.hpp"
#include "carnot/kernels.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::string command_list() {
  std::string s;
  for (const auto& c : carnot::command_names()) s += (s.empty() ? "" : ", ") + c;
  return s;
}

/// Counts such as 1e6 are accepted when whole.
std::size_t parse_count(const std::string& flag, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(v >= 0.0) || v != std::floor(v) || v > 9e15) {
    throw carnot::Error(carnot::ErrorKind::ValidationError, flag + ": expected a nonnegative whole number, got '" + text + "'");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"carnot: coercivity, taming and functional-inequality checks on step-2 Carnot groups"};
  app.footer("Commands: " + command_list() + "\nExit codes: 0 ok, 1 runtime error, 2 usage.");

  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::optional<std::string> theorem;
  std::vector<double> radii;
  std::optional<std::string> samples;
  std::optional<std::string> steps;
  std::optional<std::string> burn_in;
  std::vector<int> grid;
  std::optional<int> k;
  std::optional<std::string> dump_matrix;

  app.add_option("command", command, "Command to run")->required();
  app.add_option("--config", config_path, "TOML configuration file");
  app.add_option("--seed", seed, "Seed (overrides the file)");
  app.add_option("--out", out_dir, "Output directory (overrides the file)");
  app.add_option("--threads", threads, "Worker threads, 0 = automatic")->check(CLI::NonNegativeNumber);
  app.add_option("--theorem", theorem, "Rule set for certify");
  app.add_option("--radii", radii, "Shell radii for certify and scan-v2")->delimiter(',');
  app.add_option("--samples", samples, "Sample count for scans and checks");
  app.add_option("--steps", steps, "Chain steps for sample");
  app.add_option("--burn-in", burn_in, "Chain burn-in for sample (default steps/10 when --steps is given)");
  app.add_option("--grid", grid, "Grid sizes per coordinate for spectrum")->delimiter(',');
  app.add_option("--k", k, "Number of eigenvalues for spectrum");
  app.add_option("--dump-matrix", dump_matrix, "Write the spectrum matrix as 0-based (row col value) triplets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  if (!carnot::is_command(command)) {
    std::cerr << "error: unknown command '" << command << "'\n\n" << app.help();
    return kExitUsage;
  }

  try {
    carnot::RunConfig cfg = config_path.empty() ? carnot::parse_config("") : carnot::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.out = *out_dir;
    if (threads) cfg.threads = *threads;
    if (theorem) {
      carnot::parse_theorem(*theorem);
      cfg.certify.theorem = *theorem;
    }
    if (!radii.empty()) cfg.scan.radii = radii;
    if (samples) {
      const std::size_t n = parse_count("--samples", *samples);
      cfg.scan.samples = cfg.check.samples = cfg.perturb.samples = n;
    }
    if (steps) {
      cfg.chain.steps = parse_count("--steps", *steps);
      cfg.chain.burn_in = cfg.chain.steps / 10;
    }
    if (burn_in) cfg.chain.burn_in = parse_count("--burn-in", *burn_in);
    cfg.chain_config().validate();
    if (!grid.empty()) {
      if (static_cast<int>(grid.size()) != cfg.model.group.dim()) {
        throw carnot::Error(carnot::ErrorKind::ValidationError, "--grid: needs one size per coordinate");
      }
      cfg.spectrum.grid = grid;
    }
    if (k) cfg.spectrum.k = *k;

    carnot::kernels::set_threads(cfg.threads);
    carnot::CommandOptions options;
    options.dump_matrix = dump_matrix;
    const auto output = carnot::run_command(command, cfg, options);
    const auto report = carnot::make_report(command, cfg, output.result);
    const std::string path = carnot::write_outputs(cfg.out, command, report, output);
    std::cout << command << ": " << output.summary << "\nreport: " << path << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
