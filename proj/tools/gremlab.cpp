#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "grem/config.hpp"
#include "grem/experiments.hpp"
#include "grem/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"gremlab: 2-level GREM random hopping dynamics lab"};
  app.set_version_flag("--version", grem::kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::string configPath = GREM_DEFAULT_CONFIG;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out = "out";
  std::string format = "csv";
  app.add_option("--config", configPath, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed, overrides [general] seed");
  app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "output directory");
  app.add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "json"}));

  std::vector<std::string> selected;
  for (const auto& name : grem::experiment_names())
    app.add_subcommand(name, "run the " + name + " experiment")->callback([&selected, name] { selected = {name}; });
  app.add_subcommand("all", "run every experiment")->callback([&selected] { selected = grem::experiment_names(); });
  app.add_subcommand("list", "print experiment names")->callback([] {
    for (const auto& n : grem::experiment_names()) std::cout << n << '\n';
    std::exit(0);
  });

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = grem::Config::load(configPath);
    grem::RunOptions opt;
    opt.seed = seed;
    opt.workers = workers;
    opt.outDir = out;
    opt.format = format;
    const auto m = grem::run(cfg, selected, opt);
    for (const auto& r : m.results) {
      std::cout << (r.pass() ? "PASS " : "FAIL ") << r.name << " (" << r.seconds << " s)\n";
      for (const auto& a : r.assertions)
        std::cout << "  " << (a.pass ? "ok   " : "FAIL ") << a.name << ": " << a.detail << '\n';
    }
    std::cout << "manifest: " << out << "/manifest.json\n";
    return m.pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "gremlab: " << e.what() << '\n';
    return 2;
  }
}
