#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "czo/harness.hpp"
#include "czo/registry.hpp"

namespace {

struct Invocation {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string out;
  std::size_t threads = 0;
};

void print_keys() {
  for (const czo::ConfigKey& k : czo::config_keys())
    std::cout << k.name << "=" << k.default_value << "\n    " << k.description << "\n";
}

void print_registry() {
  std::cout << "curves:";
  for (const auto& name : czo::curve_names()) std::cout << " " << name;
  std::cout << "\nkernels:";
  for (const auto& name : czo::kernel_names()) std::cout << " " << name;
  std::cout << "\nexperiments:";
  for (const auto& name : czo::experiment_kinds()) std::cout << " " << name;
  std::cout << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Singular integrals with kernels singular on a hyper curve"};
  app.require_subcommand(1);
  app.set_version_flag("--version", czo::kVersion);

  std::vector<std::pair<CLI::App*, std::string>> runs;
  Invocation inv;
  for (const std::string& kind : czo::experiment_kinds()) {
    CLI::App* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
    sub->add_option("--config", inv.config_file, "key=value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", inv.out, "output directory (overrides the out key)");
    sub->add_option("--threads", inv.threads, "worker threads (overrides the threads key and CZO_THREADS)");
    sub->add_option("settings", inv.overrides, "key=value overrides");
    runs.emplace_back(sub, kind);
  }
  CLI::App* keys = app.add_subcommand("keys", "list configuration keys and defaults");
  CLI::App* list = app.add_subcommand("list", "list built-in curves, kernels and experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (keys->parsed()) {
    print_keys();
    return 0;
  }
  if (list->parsed()) {
    print_registry();
    return 0;
  }

  for (const auto& [sub, kind] : runs) {
    if (!sub->parsed()) continue;
    czo::ExperimentConfig config;
    try {
      const auto file = inv.config_file.empty() ? std::map<std::string, std::string>{}
                                                : czo::read_config_file(inv.config_file);
      std::vector<std::string> overrides = inv.overrides;
      if (!inv.out.empty()) overrides.push_back("out=" + inv.out);
      if (inv.threads > 0) overrides.push_back("threads=" + std::to_string(inv.threads));
      config = czo::make_config(kind, file, overrides);
    } catch (const czo::ConfigError& e) {
      std::cerr << "czo: configuration error: " << e.what() << "\n";
      return 2;
    }
    const czo::RunResult result = czo::run_experiment(config);
    if (result.exit_code == 2)
      std::cerr << "czo: configuration error: " << result.message << "\n";
    else if (result.exit_code == 1)
      std::cerr << "czo: assertion failed: " << result.message << "\n";
    std::cout << kind << ": " << (result.exit_code == 0 ? "pass" : "fail") << " (" << config.out << ")\n";
    return result.exit_code;
  }
  return 2;
}
