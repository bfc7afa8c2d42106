#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "hgrow/diagnostics.hpp"
#include "hgrow/experiment.hpp"
#include "hgrow/serialize.hpp"

namespace {

using namespace hgrow;

ExperimentSpec spec_from(const std::string& config, const std::vector<std::string>& sets) {
  ExperimentSpec spec = config.empty() ? ExperimentSpec{} : load_config(config);
  for (const auto& s : sets) apply_override(spec, s);
  spec.validate();
  return spec;
}

int cmd_run(const std::string& config, const std::vector<std::string>& sets, bool quiet) {
  const ExperimentSpec spec = spec_from(config, sets);
  const GrowthConfig g = spec.effective_growth();
  if (!g.kappa_has_guarantee()) {
    fmt::print(stderr, "note: kappa = {} lies outside ((sqrt 5 - 1)/2, 1); step-budget guarantees do not apply\n",
               g.kappa);
  }
  const ExperimentResult res = run_experiment(spec);
  if (!quiet) {
    for (const RunTrace& t : res.runs) {
      const TraceRow last = t.rows.empty() ? TraceRow{} : t.rows.back();
      fmt::print("{:<12} seed {:<4} width {:<4} params {:<6} error {:.4e} epochs {}\n", to_string(t.mode), t.seed,
                 t.width, last.params, last.error, t.total_epochs);
    }
    fmt::print("index: {}\n", res.index_file.string());
    for (const auto& a : res.aggregate_files) fmt::print("aggregate: {}\n", a.string());
  }
  return 0;
}

int cmd_rate(const std::vector<std::string>& files, int min_round) {
  for (const auto& f : files) {
    const RateFit fit = fit_rate_file(f, min_round);
    fmt::print("{}: slope {:.4f} intercept {:.4f} r2 {:.4f} points {}\n", f, fit.slope, fit.intercept,
               fit.r_squared, fit.points);
  }
  return 0;
}

int cmd_diag(const std::string& weights, const std::string& data, const std::vector<int>& star, int restarts,
             int steps, int group, std::uint64_t seed) {
  const StoredNetwork net = load_network(weights);
  const TrainingSet ts = read_training_csv(data);
  const LossContext ctx(ts, LossSpec::identity(), net.activation);
  GrowthConfig g;
  g.star_arch = Architecture(star.empty() ? std::vector<int>{ts.input_width(), 3, 1} : star);
  g.search_restarts = restarts;
  g.search_ascent_steps = steps;
  g.validate();

  const double loss = ctx.loss(net.weights);
  fmt::print("architecture  {}\n", fmt::join(net.weights.arch().widths(), ","));
  fmt::print("params        {}\n", net.weights.size());
  fmt::print("loss          {:.6e}\n", loss);
  fmt::print("error         {:.6e}\n", std::sqrt(loss));
  if (loss > 0.0) {
    const OptimalityReport rep = c_opt(net.weights, ctx, g, seed);
    fmt::print("c_opt         {:.6f} (objective {:.6e}, restart {}, ascent step {})\n", rep.c_opt,
               rep.objective_value, rep.restart_index, rep.ascent_iterations);
    for (const auto& b : rep.size_ratio_bounds) {
      fmt::print("  L = {:<4} no halving for #chi/#chi* <= {:.4e}\n", b.assumed_l, b.max_size_ratio);
    }
  }
  if (net.weights.arch().depth() >= 1) {
    const StabilityReport st = network_stability(net.weights, group, ctx);
    fmt::print("stability L   {:.6f} over {} parts{}\n", st.l_constant, st.part_count,
               st.size_condition ? "" : " (size condition w* #chi* <= L #chi not met)");
  }
  const LayerConstants lc = layer_constants(net.weights, ctx);
  fmt::print("C_W           {:.6e}\n", lc.c_w);
  fmt::print("C_stab        {:.6e}\n", lc.c_stab);
  return 0;
}

int cmd_dataset(const std::string& config, const std::vector<std::string>& sets, const std::string& out) {
  const ExperimentSpec spec = spec_from(config, sets);
  const TrainingSet ts = build_dataset(spec);
  write_training_csv(out, ts);
  fmt::print("{} samples written to {}\n", ts.size(), out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical training of leaky-ReLU networks"};
  app.require_subcommand(1);

  std::string config;
  std::vector<std::string> sets;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("config", config, "key=value config file")->check(CLI::ExistingFile);
  run->add_option("--set", sets, "override a config key (key=value)");
  run->add_flag("-q,--quiet", quiet, "suppress the per-run summary");

  std::vector<std::string> rate_files;
  int rate_min_round = 1;
  auto* rate = app.add_subcommand("rate", "fit log-log convergence slopes");
  rate->add_option("files", rate_files, "aggregate or trace CSV files")->required()->check(CLI::ExistingFile);
  rate->add_option("--min-round", rate_min_round, "first round included in the fit")->capture_default_str();

  std::string weights, data;
  std::vector<int> star;
  int restarts = 64, steps = 200, group = 1;
  std::uint64_t seed = 0;
  auto* diag = app.add_subcommand("diag", "diagnostics of a stored network on a dataset");
  diag->add_option("--weights", weights, "weight file")->required()->check(CLI::ExistingFile);
  diag->add_option("--data", data, "dataset CSV")->required()->check(CLI::ExistingFile);
  diag->add_option("--star", star, "extension architecture, e.g. 2,3,1")->delimiter(',');
  diag->add_option("--restarts", restarts, "search restarts");
  diag->add_option("--steps", steps, "ascent steps per restart");
  diag->add_option("--group", group, "neurons per part for the stability split");
  diag->add_option("--seed", seed, "search seed");

  std::string ds_config, ds_out;
  std::vector<std::string> ds_sets;
  auto* dataset = app.add_subcommand("dataset", "write a dataset CSV");
  dataset->add_option("--config", ds_config, "config file")->check(CLI::ExistingFile);
  dataset->add_option("--set", ds_sets, "override a config key (key=value)");
  dataset->add_option("-o,--out", ds_out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(config, sets, quiet);
    if (*rate) return cmd_rate(rate_files, rate_min_round);
    if (*diag) return cmd_diag(weights, data, star, restarts, steps, group, seed);
    if (*dataset) return cmd_dataset(ds_config, ds_sets, ds_out);
  } catch (const hgrow::NumericError& e) {
    fmt::print(stderr, "numeric failure: {}\n", e.what());
    return 2;
  } catch (const hgrow::DegenerateError& e) {
    fmt::print(stderr, "numeric failure: {}\n", e.what());
    return 2;
  } catch (const hgrow::SingularSystemError& e) {
    fmt::print(stderr, "numeric failure: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 1;
}
