#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hgrow/diagnostics.hpp"
#include "hgrow/growth.hpp"

namespace hgrow {

enum class TargetId { sq2d, sq3d, pow23_2d, sq10d, planted, csv };
enum class Sampling { grid, uniform };
enum class RunMode { hierarchical, direct };

std::string to_string(TargetId t);
std::string to_string(Sampling s);
std::string to_string(RunMode m);
std::string to_string(StepRule r);
TargetId parse_target(const std::string& s);
Sampling parse_sampling(const std::string& s);
RunMode parse_mode(const std::string& s);
StepRule parse_step_rule(const std::string& s);

struct ExperimentSpec {
  TargetId target = TargetId::sq2d;
  // 0 and unset pick the defaults: a 32 x 32 grid for up to three inputs,
  // 2048 uniform points otherwise.
  int samples = 0;
  std::optional<Sampling> sampling;
  std::uint64_t dataset_seed = 0;
  std::string csv_path;
  std::vector<int> planted_widths{2, 3, 1};
  std::uint64_t planted_seed = 0;

  std::vector<std::uint64_t> seeds{0};
  std::vector<RunMode> modes{RunMode::hierarchical, RunMode::direct};
  double delta_relu = 0.01;

  GrowthConfig growth;  // star_arch is replaced by effective_growth()
  // Empty: (w, 3, ..., 3, 1) matching the grown part's input width w and depth.
  std::vector<int> star_widths;
  OptimConfig optim;  // max_epochs is the per-round budget
  int rounds = 100;
  std::size_t max_params = 0;
  double target_loss = 0.0;
  // Empty: (w_0, 2, 1), or (10, 2, 2, 1) for sq10d.
  std::vector<int> start_widths;
  // d' > 0 grows only the last d' + 1 layers. -1: 1 for sq10d, 0 otherwise.
  int final_layers = -1;

  // Direct runs use the start architecture with its last hidden width replaced.
  std::vector<int> direct_widths{10, 20, 40};
  // 0: 200 x the per-round budget. -1: the median total epochs of this
  // experiment's hierarchical runs.
  long long direct_epochs = 0;

  std::size_t gen_samples = 10000;
  std::filesystem::path output_dir = "runs";
  int threads = 0;  // 0: hardware concurrency

  int input_width() const;
  int effective_samples() const;
  Sampling effective_sampling() const;
  Architecture start_arch() const;
  Architecture direct_arch(int width) const;
  int effective_final_layers() const;
  GrowthConfig effective_growth() const;
  void validate() const;
};

// Closed-form response of a built-in target at x. Throws for csv.
double target_value(const ExperimentSpec& spec, std::span<const double> x);
// The planted network used by the `planted` target.
WeightSet planted_network(const ExperimentSpec& spec);

TrainingSet build_dataset(const ExperimentSpec& spec);
std::string dataset_id(const ExperimentSpec& spec);

// Flat key=value configuration. Blank lines and lines starting with '#' are
// ignored; unknown keys raise ConfigError.
ExperimentSpec parse_config(const std::string& text);
ExperimentSpec load_config(const std::filesystem::path& path);
void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value);
// "key=value" form of apply_setting.
void apply_override(ExperimentSpec& spec, const std::string& assignment);
// Canonical key=value text of every field that affects results.
std::string canonical_config(const ExperimentSpec& spec);
std::string config_hash(const ExperimentSpec& spec);

struct TraceRow {
  int round = 0;
  double wall_ms = 0.0;
  std::size_t params = 0;
  double loss = 0.0;
  double error = 0.0;
  double c_opt = 0.0;
  double stability_l = 0.0;
  double gen_estimate = 0.0;
  int extensions = 0;
  long long epochs = 0;
};

struct RunTrace {
  std::uint64_t seed = 0;
  RunMode mode = RunMode::hierarchical;
  int width = 0;  // direct runs only
  std::string config_hash;
  std::string dataset_id;
  std::vector<TraceRow> rows;
  long long total_epochs = 0;
  std::filesystem::path file;
  std::string failure;  // empty on success
};

std::string trace_header();
std::string format_row(const TraceRow& row);
std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);

struct AggregateRow {
  int round = 0;
  int runs = 0;
  double params = 0.0;
  double loss = 0.0;
  double error = 0.0;
  double c_opt = 0.0;
  double stability_l = 0.0;
  double gen_estimate = 0.0;
};

// Per-round medians over runs; rows are the distinct round indices.
std::vector<AggregateRow> aggregate(const std::vector<RunTrace>& runs);
void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateRow>& rows);

struct ExperimentResult {
  std::vector<RunTrace> runs;
  std::vector<std::filesystem::path> aggregate_files;
  std::filesystem::path index_file;
};

// Runs every (seed, mode[, width]) cell. Each run's CSV is written as it
// progresses; the index and aggregates are written once all cells finish.
// The first failure is rethrown after the index is written.
ExperimentResult run_experiment(const ExperimentSpec& spec);

// Individual cells, usable without touching the disk when `csv` is empty.
RunTrace run_hierarchical(const ExperimentSpec& spec, const TrainingSet& ts, std::uint64_t seed,
                          const std::filesystem::path& csv = {});
RunTrace run_direct(const ExperimentSpec& spec, const TrainingSet& ts, std::uint64_t seed, int width,
                    long long epochs, const std::filesystem::path& csv = {});

// Random weights with every entry drawn from N(0, fan_in^{-1/2}).
WeightSet variance_scaled_init(const Architecture& arch, std::uint64_t seed);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

// Least squares of log(error) on log(params). Pairs with non-positive
// values are skipped; duplicate param counts keep the last pair. Needs at
// least 4 usable distinct points.
RateFit fit_rate(std::span<const double> params, std::span<const double> errors);
// Reads the params and error columns of an aggregate (or trace) CSV, keeping
// rows whose round is at least min_round. Round 0 is the untrained start.
RateFit fit_rate_file(const std::filesystem::path& path, int min_round = 1);

// Log-log interpolation of a monotone-in-params curve at `at`; extrapolates
// from the nearest segment outside the range.
double loglog_interpolate(std::span<const double> params, std::span<const double> errors, double at);

double median(std::vector<double> values);

}  // namespace hgrow
