#include "commands.hpp"
#include "config.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

const std::map<std::string, std::string> kDescriptions = {
    {"gen-data", "generate a synthetic dataset"},
    {"solve-nl", "solve the network lasso at one gamma"},
    {"solve-ntl", "solve the network trimmed lasso at one (gamma, K)"},
    {"k-path", "trace the trimmed-lasso cluster path over decreasing K"},
    {"gamma-path", "trace the network lasso cluster path over increasing gamma"},
    {"thresholds", "compute recovery, exact-penalty and convergence thresholds"},
    {"recovery-check", "solve at the recovery-interval midpoint and compare to the labels"},
    {"metrics", "score an estimated partition or path against a reference"},
    {"piecewise", "piecewise-constant signal recovery, trimmed vs plain network lasso"},
};

}  // namespace

int main(int argc, char** argv) {
  using namespace netlasso::cli;
  CLI::App app{"Network lasso and network trimmed lasso solvers"};
  app.require_subcommand(1, 1);
  std::string config_file, out_dir;
  std::vector<std::string> overrides;
  bool print_config = false;
  for (const auto& name : task_names()) {
    auto* sub = app.add_subcommand(name, kDescriptions.at(name));
    sub->add_option("-c,--config", config_file, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("-s,--set", overrides, "override a config value, e.g. --set solver.gamma=0.5")
        ->allow_extra_args(false);
    sub->add_option("-o,--out", out_dir, "output directory (overrides output.dir)");
    sub->add_flag("--print-config", print_config, "print the resolved configuration and exit");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  const std::string task = app.get_subcommands().front()->get_name();

  try {
    nlohmann::json user = config_file.empty() ? nlohmann::json::object() : read_json_file(config_file);
    if (user.contains("task") && user["task"] != task)
      throw ConfigError("config file is for task " + user["task"].dump() + ", not '" + task + "'");
    user["task"] = task;
    nlohmann::json cfg = resolve_config(user, overrides);
    if (!out_dir.empty()) cfg["output"]["dir"] = out_dir;
    if (print_config) {
      std::cout << cfg.dump(2) << '\n';
      return 0;
    }
    return run_task(cfg, cfg["output"]["dir"].get<std::string>());
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const netlasso::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
}
