#include <iostream>
#include <memory>
#include <vector>

#include "commands.hpp"
#include "config.hpp"

namespace {

using fks::cli::json;

int report(const std::string& module, const std::string& kind, const std::string& detail, int code) {
  const json err = {{"error", {{"module", module}, {"kind", kind}, {"detail", detail}, {"exit_code", code}}}};
  std::cerr << err.dump() << '\n';
  return code;
}

int exit_code(fks::ErrorCategory c) {
  switch (c) {
    case fks::ErrorCategory::Config: return 2;
    case fks::ErrorCategory::Data: return 3;
    default: return 4;
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fks::cli;
  CLI::App app{"Free-knot penalized B-spline smoothing and functional clustering"};
  app.require_subcommand(1);

  struct Entry {
    std::unique_ptr<Command> command;
    int (*run)(const json&);
  };
  std::vector<Entry> entries;
  auto add = [&](const char* name, const char* help, json defaults, int (*run)(const json&)) {
    entries.push_back({std::make_unique<Command>(app, name, help, std::move(defaults)), run});
  };
  add("simulate", "generate the four-group synthetic dataset", simulate_defaults(), run_simulate);
  add("fit", "fit penalized free-knot splines and report diagnostics", fit_command_defaults(), run_fit);
  add("gcv", "select (lambda1, lambda2) by GCV over a log grid", gcv_defaults(), run_gcv);
  add("cluster", "cluster fitted curves and score against reference labels", cluster_defaults(), run_cluster);
  add("replicate", "run the simulate/fit/cluster study over many seeds", replicate_defaults(), run_replicate);
  add("ingest", "load and standardize a multi-series CSV", ingest_defaults(), run_ingest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("cli", "InvalidConfig", e.what(), 2);
  }

  for (const auto& entry : entries) {
    if (!entry.command->app()->parsed()) continue;
    try {
      const json cfg = entry.command->resolve();
      std::cout << json{{"command", entry.command->name()}, {"config", cfg}}.dump() << '\n';
      return entry.run(cfg);
    } catch (const fks::Error& e) {
      return report(e.module(), std::string(fks::to_string(e.kind())), e.detail(), exit_code(fks::category_of(e.kind())));
    } catch (const json::exception& e) {
      return report("cli", "InvalidConfig", e.what(), 2);
    } catch (const std::exception& e) {
      return report("cli", "Internal", e.what(), 4);
    }
  }
  return report("cli", "InvalidConfig", "no subcommand given", 2);
}
