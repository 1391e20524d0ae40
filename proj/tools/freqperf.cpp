#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "freqperf/config.hpp"
#include "freqperf/errors.hpp"
#include "freqperf/experiments.hpp"

namespace {

using namespace freqperf;

struct CommonOptions {
  std::string config;
  std::string out;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool with_config) {
  if (with_config) cmd->add_option("--config", opts.config, "JSON experiment file")->check(CLI::ExistingFile);
  cmd->add_option("--out", opts.out, "write results here instead of stdout");
  cmd->add_option("--format", opts.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

ExperimentConfig config_or_default(const CommonOptions& opts) {
  return opts.config.empty() ? ExperimentConfig{} : load_config(opts.config);
}

// Runs `emit` against the --out file or stdout.
template <class Emit>
void with_output(const std::string& path, Emit&& emit) {
  if (path.empty()) {
    emit(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open output file '" + path + "'");
  emit(os);
  if (!os) throw ConfigError("failed writing '" + path + "'");
}

void emit_table(const ResultTable& t, const CommonOptions& opts) {
  with_output(opts.out, [&](std::ostream& os) {
    if (opts.format == "json") {
      os << t.to_json().dump(2) << '\n';
    } else {
      t.write_csv(os);
    }
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"H2 performance of secondary frequency controllers"};
  app.require_subcommand(1);

  CommonOptions analyze_opts, table_opts, sweep_opts, sim_opts;
  auto* analyze = app.add_subcommand("analyze", "numerical and closed-form H2 norms for the configured controllers");
  add_common(analyze, analyze_opts, true);

  auto* table1 = app.add_subcommand("table1", "squared H2 norms against the frequency penalty, five-bus benchmark");
  add_common(table1, table_opts, false);

  auto* sweep = app.add_subcommand("sweep", "H2 norms over a grid of n, gamma or alpha");
  add_common(sweep, sweep_opts, true);
  sweep->get_option("--config")->required();

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimate of the steady-state output variance");
  add_common(simulate, sim_opts, true);
  std::optional<std::uint64_t> seed;
  std::string trace_path, preset;
  std::size_t trace_samples = 5000;
  simulate->add_option("--seed", seed, "master seed (overrides run.seed)");
  simulate->add_option("--trace", trace_path, "write a long-format trace CSV of the first replicate");
  simulate->add_option("--trace-samples", trace_samples, "approximate number of trace samples")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--preset", preset, "built-in experiment")
      ->check(CLI::IsMember({"figure1"}))
      ->excludes(simulate->get_option("--config"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*analyze) {
      emit_table(cmd_analyze(config_or_default(analyze_opts)), analyze_opts);
    } else if (*table1) {
      const Table1Result r = cmd_table1();
      emit_table(r.table, table_opts);
      if (!r.within_tolerance) {
        std::cerr << "warning: a cell deviates from the reference by " << format_number(100.0 * r.max_rel_dev)
                  << "% (> " << format_number(100.0 * kTable1RelTolerance)
                  << "%); the reference network may not be a five-bus path with unit line weights\n";
      }
    } else if (*sweep) {
      emit_table(cmd_sweep(load_config(sweep_opts.config)), sweep_opts);
    } else if (*simulate) {
      ExperimentConfig cfg;
      std::uint64_t master = 1;
      if (preset == "figure1") {
        master = seed.value_or(1);
        cfg = figure1_preset(master);
      } else {
        cfg = config_or_default(sim_opts);
        if (!sim_opts.config.empty() && cfg.run.kind != RunSpec::Kind::simulate) {
          throw ConfigError("run.type must be 'simulate' for the simulate command");
        }
        master = seed.value_or(cfg.run.seed);
      }
      const auto reports = cmd_simulate(cfg, master);
      with_output(sim_opts.out, [&](std::ostream& os) {
        if (sim_opts.format == "json") {
          os << simulation_json(reports).dump(2) << '\n';
        } else {
          simulation_table(reports).write_csv(os);
        }
      });
      if (!trace_path.empty()) {
        with_output(trace_path, [&](std::ostream& os) { write_trace_csv(os, cfg, master, trace_samples); });
      }
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
