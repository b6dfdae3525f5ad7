#include "mmrelay/config.hpp"
#include "mmrelay/plot.hpp"
#include "mmrelay/scenario.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace mmrelay;

namespace {

// A path to a config file, or the name of a builtin scenario.
Scenario resolve(const std::string& arg) {
  if (fs::exists(arg)) return load_config(arg);
  const auto all = builtin_scenarios();
  if (const Scenario* s = find_builtin(all, arg)) return *s;
  throw ConfigError(arg + ": no such file or builtin scenario", "", 0);
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-efficient power allocation for full-duplex massive MIMO relaying"};
  app.require_subcommand(1);

  std::string config, out_dir = ".", show;
  bool paper = false;
  int trials = -1;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "run a scenario and write <name>.csv and <name>.svg");
  run->add_option("config", config, "config file or builtin scenario name")->required();
  run->add_flag("--paper-scale", paper, "N = 500, K = 5");
  run->add_option("--trials", trials, "Monte-Carlo trials per point");
  auto* seed_opt = run->add_option("--seed", seed, "master seed");
  run->add_option("--out", out_dir, "output directory");

  auto* list = app.add_subcommand("list", "list builtin scenarios");
  list->add_option("--show", show, "print the config of one builtin");

  auto* validate = app.add_subcommand("validate", "check a config file");
  validate->add_option("config", config, "config file or builtin scenario name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      const auto all = builtin_scenarios();
      if (!show.empty()) {
        const Scenario* s = find_builtin(all, show);
        if (!s) throw ConfigError("no builtin scenario '" + show + "'", "", 0);
        std::cout << to_config_text(*s);
        return 0;
      }
      for (const auto& s : all)
        std::cout << s.name << "  sweep " << sweep_var_name(s.sweep) << " ("
                  << s.grid.size() << " points)\n";
      return 0;
    }
    if (*validate) {
      const Scenario s = resolve(config);
      std::cout << "ok: " << s.name << "\n";
      return 0;
    }
    Scenario s = resolve(config);
    if (paper) s = paper_scale(s);
    if (trials >= 0) s.trials = trials;
    if (*seed_opt) s.seed = seed;
    const ResultTable t = run_scenario(s);
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / (s.name + ".csv"), to_csv(t));
    write_file(fs::path(out_dir) / (s.name + ".svg"), emit_plot(t, plot_spec_for(s)));
    std::cout << "wrote " << (fs::path(out_dir) / s.name).string() << ".{csv,svg} ("
              << t.rows.size() << " rows)\n";
    if (t.any_infeasible) {
      std::cerr << "some points are infeasible (flagged in the CSV)\n";
      return 2;
    }
    return 0;
  } catch (const Infeasible& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
