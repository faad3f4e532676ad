#pragma once

#include "carnot/certify.hpp"
#include "carnot/chain.hpp"
#include "carnot/spectrum.hpp"
#include "carnot/taming.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace carnot {

struct ScanSection {
  std::vector<double> radii = {1, 2, 4, 8, 16, 32};
  std::size_t samples = 4096;
};

struct CertifySection {
  std::string theorem = "heis_add";
  std::size_t geometry_budget = 20000;
};

struct ChainSection {
  std::size_t steps = 100000;
  std::size_t burn_in = 10000;
  double step = 0.05;
  std::size_t thin = 10;
  bool auto_tune = true;
  double target_acceptance = 0.574;
  std::optional<GroupPoint> start;
  int bins = 20;
};

struct SpectrumSection {
  /// Horizontal half-width; the center half-widths follow w^2/sqrt(a) unless set.
  double width = 3.0;
  std::vector<double> half_widths;
  std::vector<int> grid = {32, 32, 32};
  int k = 5;
  double tol = 1e-6;
  double clamp = 1e6;
  int max_iter = 300;
  double memory_budget_mb = 4096.0;
};

struct PerturbSection {
  double q = 1.0;
  double alpha = 1.0;
  /// sup |grad K - grad K0|; measured against `base` when absent.
  std::optional<double> epsilon;
  double c = 2.0;
  std::optional<double> C;
  std::optional<double> D;
  std::optional<NormSpec> base;
  std::size_t samples = 4096;
};

struct CheckSection {
  std::size_t samples = 1000;
  /// "config" checks the configured model, "standard" the full fixture matrix.
  std::string cells = "config";
};

/// Everything a command needs, with every default resolved.
struct RunConfig {
  EnergyModel model{Step2Group::heisenberg(), NormSpec::type_two_smooth(16.0), TamingSpec::none(),
                    OuterFunction::power(2.0)};
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out = "out";
  ScanSection scan;
  CertifySection certify;
  ChainSection chain;
  SpectrumSection spectrum;
  PerturbSection perturb;
  CheckSection check;

  /// The full resolved configuration, in the same key layout as the file.
  nlohmann::json to_json() const;
  SpectrumConfig spectrum_config() const;
  ChainConfig chain_config() const;
};

/// Parses TOML text. Throws ParseError for malformed text and ValidationError
/// naming the key path for unknown keys, wrong types and invalid combinations.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Commands drawing random numbers require a seed.
bool command_is_stochastic(const std::string& command);

/// ValidationError when `command` needs a seed and none is set.
void require_seed(const RunConfig& cfg, const std::string& command);

}  // namespace carnot
