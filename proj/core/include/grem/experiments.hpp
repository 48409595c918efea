#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grem/config.hpp"

namespace grem {

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct OutputFile {
  std::string name;  // stem; extension follows the output format
  std::string csv;
};

struct ExperimentResult {
  std::string name;
  std::vector<Assertion> assertions;
  std::vector<OutputFile> files;
  double seconds = 0;

  bool pass() const;
};

const std::vector<std::string>& experiment_names();
bool is_experiment(const std::string& name);

// parse and validate the experiment's section without running anything
void validate_experiment(const std::string& name, const Config& cfg);
ExperimentResult run_experiment(const std::string& name, const Config& cfg, std::uint64_t seed);

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides [general] seed
  std::optional<int> workers;
  std::string outDir = "out";
  std::string format = "csv";  // csv | json
};

struct RunManifest {
  std::uint64_t configHash = 0;
  std::string version;
  double wallClock = 0;
  std::vector<ExperimentResult> results;
  std::vector<std::string> files;
  bool pass = false;

  std::string json() const;
};

std::uint64_t resolve_seed(const Config& cfg, const RunOptions& opt);
RunManifest run(const Config& cfg, const std::vector<std::string>& experiments, const RunOptions& opt);

std::string csv_to_json(const std::string& csv);

}  // namespace grem
