#include "hgrow/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>

namespace hgrow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{}", v);
}

double parse_double(const std::string& s) {
  if (s == "nan") return kNaN;
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument(s);
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

double median(std::vector<double> values) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

int ExperimentSpec::input_width() const {
  switch (target) {
    case TargetId::sq2d:
    case TargetId::pow23_2d:
      return 2;
    case TargetId::sq3d:
      return 3;
    case TargetId::sq10d:
      return 10;
    case TargetId::planted:
      return planted_widths.empty() ? 0 : planted_widths.front();
    case TargetId::csv:
      return read_training_csv(csv_path).input_width();
  }
  return 0;
}

int ExperimentSpec::effective_samples() const {
  if (samples > 0) return samples;
  return input_width() <= 3 ? 1024 : 2048;
}

Sampling ExperimentSpec::effective_sampling() const {
  if (sampling) return *sampling;
  return input_width() <= 3 ? Sampling::grid : Sampling::uniform;
}

Architecture ExperimentSpec::start_arch() const {
  if (!start_widths.empty()) return Architecture(start_widths);
  if (target == TargetId::sq10d) return Architecture({10, 2, 2, 1});
  return Architecture({input_width(), 2, 1});
}

Architecture ExperimentSpec::direct_arch(int width) const {
  std::vector<int> w = start_arch().widths();
  w[w.size() - 2] = width;
  return Architecture(std::move(w));
}

int ExperimentSpec::effective_final_layers() const {
  if (final_layers >= 0) return final_layers;
  return target == TargetId::sq10d ? 1 : 0;
}

GrowthConfig ExperimentSpec::effective_growth() const {
  GrowthConfig g = growth;
  if (!star_widths.empty()) {
    g.star_arch = Architecture(star_widths);
    return g;
  }
  const Architecture start = start_arch();
  const int fl = effective_final_layers();
  const int depth = fl > 0 ? fl : start.depth();
  std::vector<int> w{start.width(static_cast<std::size_t>(start.depth() - depth))};
  for (int i = 0; i < depth; ++i) w.push_back(3);
  w.push_back(1);
  g.star_arch = Architecture(std::move(w));
  return g;
}

void ExperimentSpec::validate() const {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (modes.empty()) throw ConfigError("at least one mode is required");
  if (rounds < 0) throw ConfigError("rounds must be non-negative");
  if (samples < 0) throw ConfigError("samples must be non-negative");
  if (target == TargetId::csv && csv_path.empty()) throw ConfigError("target csv needs csv_path");
  if (target == TargetId::planted) {
    Architecture a(planted_widths);
    if (a.widths().back() != 1) throw ConfigError("planted_widths must end in 1");
  }
  const GrowthConfig g = effective_growth();
  g.validate();
  optim.validate();
  Activation check(delta_relu);
  const Architecture start = start_arch();
  if (start.input_width() != input_width()) {
    throw ConfigError(fmt::format("start architecture takes {} inputs, target has {}", start.input_width(),
                                  input_width()));
  }
  const int fl = effective_final_layers();
  if (fl > 0 && fl >= start.depth()) {
    throw ConfigError(fmt::format("final_layers = {} needs a start depth above it, got {}", fl, start.depth()));
  }
  const std::size_t split = static_cast<std::size_t>(start.depth() - fl);
  if (g.star_arch.depth() != (fl > 0 ? fl : start.depth()) ||
      g.star_arch.input_width() != start.width(fl > 0 ? split : 0)) {
    throw ConfigError("star_widths must match the depth and input width of the grown part");
  }
  for (int w : direct_widths) {
    if (w < 1) throw ConfigError("direct widths must be positive");
  }
  if (direct_epochs < -1) throw ConfigError("direct_epochs must be >= -1");
}

WeightSet variance_scaled_init(const Architecture& arch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < arch.layer_count(); ++i) {
    const int fan_in = arch.width(i);
    std::normal_distribution<double> nd(0.0, std::pow(static_cast<double>(fan_in), -0.25));
    Layer l{Matrix(arch.width(i + 1), fan_in), Vector(arch.width(i + 1))};
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = nd(rng);
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = nd(rng);
    layers.push_back(std::move(l));
  }
  return WeightSet(arch, std::move(layers));
}

WeightSet planted_network(const ExperimentSpec& spec) {
  return variance_scaled_init(Architecture(spec.planted_widths), spec.planted_seed);
}

double target_value(const ExperimentSpec& spec, std::span<const double> x) {
  const double s = std::accumulate(x.begin(), x.end(), 0.0);
  switch (spec.target) {
    case TargetId::sq2d:
      return s * s / 2.0;
    case TargetId::sq3d:
      return s * s / 3.0;
    case TargetId::pow23_2d:
      return std::cbrt(s * s);
    case TargetId::sq10d:
      return s * s / 10.0;
    case TargetId::planted:
      return realize(planted_network(spec), Activation(spec.delta_relu), x);
    case TargetId::csv:
      break;
  }
  throw DomainError("the csv target has no closed form");
}

std::string dataset_id(const ExperimentSpec& spec) {
  if (spec.target == TargetId::csv) return fmt::format("csv:{}", spec.csv_path);
  std::string id = fmt::format("{}-{}{}", to_string(spec.target), to_string(spec.effective_sampling()),
                               spec.effective_samples());
  if (spec.effective_sampling() == Sampling::uniform) id += fmt::format("-s{}", spec.dataset_seed);
  if (spec.target == TargetId::planted) id += fmt::format("-p{}", spec.planted_seed);
  return id;
}

TrainingSet build_dataset(const ExperimentSpec& spec) {
  if (spec.target == TargetId::csv) return read_training_csv(spec.csv_path);
  const int dim = spec.input_width();
  const int n_req = spec.effective_samples();
  Matrix pts;
  if (spec.effective_sampling() == Sampling::grid) {
    const int per_axis = std::max(2, static_cast<int>(std::lround(std::pow(n_req, 1.0 / dim))));
    std::size_t total = 1;
    for (int k = 0; k < dim; ++k) total *= static_cast<std::size_t>(per_axis);
    pts.resize(dim, static_cast<Eigen::Index>(total));
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rest = idx;
      for (int k = 0; k < dim; ++k) {
        pts(k, static_cast<Eigen::Index>(idx)) =
            static_cast<double>(rest % static_cast<std::size_t>(per_axis)) / (per_axis - 1);
        rest /= static_cast<std::size_t>(per_axis);
      }
    }
  } else {
    std::mt19937_64 rng(derive_seed(spec.dataset_seed, 0xda7a));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    pts.resize(dim, n_req);
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      for (Eigen::Index k = 0; k < dim; ++k) pts(k, j) = u(rng);
    }
  }
  Vector y(pts.cols());
  if (spec.target == TargetId::planted) {
    y = realize_batch(planted_network(spec), Activation(spec.delta_relu), pts);
  } else {
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      y[j] = target_value(spec, {pts.col(j).data(), static_cast<std::size_t>(dim)});
    }
  }
  return make_training_set(std::move(pts), std::move(y));
}

std::string trace_header() {
  return "round,wall_ms,params,loss,error,c_opt,stability_L,gen_estimate,extensions,epochs";
}

std::string format_row(const TraceRow& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{}", r.round, fmt_double(r.wall_ms), r.params,
                     fmt_double(r.loss), fmt_double(r.error), fmt_double(r.c_opt), fmt_double(r.stability_l),
                     fmt_double(r.gen_estimate), r.extensions, r.epochs);
}

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open {}", path.string()));
  std::string line;
  std::getline(in, line);
  if (line != trace_header()) throw ConfigError(fmt::format("{} is not a trace file", path.string()));
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 10) throw ConfigError(fmt::format("malformed trace row: {}", line));
    TraceRow r;
    r.round = std::stoi(c[0]);
    r.wall_ms = parse_double(c[1]);
    r.params = static_cast<std::size_t>(std::stoull(c[2]));
    r.loss = parse_double(c[3]);
    r.error = parse_double(c[4]);
    r.c_opt = parse_double(c[5]);
    r.stability_l = parse_double(c[6]);
    r.gen_estimate = parse_double(c[7]);
    r.extensions = std::stoi(c[8]);
    r.epochs = std::stoll(c[9]);
    rows.push_back(r);
  }
  return rows;
}

std::vector<AggregateRow> aggregate(const std::vector<RunTrace>& runs) {
  std::map<int, std::vector<const TraceRow*>> by_round;
  for (const RunTrace& run : runs) {
    for (const TraceRow& row : run.rows) by_round[row.round].push_back(&row);
  }
  std::vector<AggregateRow> out;
  for (const auto& [round, rows] : by_round) {
    auto med = [&](auto field) {
      std::vector<double> v;
      for (const TraceRow* r : rows) v.push_back(static_cast<double>(field(*r)));
      return median(std::move(v));
    };
    AggregateRow a;
    a.round = round;
    a.runs = static_cast<int>(rows.size());
    a.params = med([](const TraceRow& r) { return r.params; });
    a.loss = med([](const TraceRow& r) { return r.loss; });
    a.error = med([](const TraceRow& r) { return r.error; });
    a.c_opt = med([](const TraceRow& r) { return r.c_opt; });
    a.stability_l = med([](const TraceRow& r) { return r.stability_l; });
    a.gen_estimate = med([](const TraceRow& r) { return r.gen_estimate; });
    out.push_back(a);
  }
  return out;
}

void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateRow>& rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError(fmt::format("cannot write {}", path.string()));
  out << "round,runs,params,loss,error,c_opt,stability_L,gen_estimate\n";
  for (const AggregateRow& a : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{}\n", a.round, a.runs, fmt_double(a.params), fmt_double(a.loss),
                       fmt_double(a.error), fmt_double(a.c_opt), fmt_double(a.stability_l),
                       fmt_double(a.gen_estimate));
  }
}

namespace {

class TraceWriter {
 public:
  explicit TraceWriter(const std::filesystem::path& path) {
    if (path.empty()) return;
    out_.open(path);
    if (!out_) throw ConfigError(fmt::format("cannot write {}", path.string()));
    out_ << trace_header() << '\n' << std::flush;
  }
  void write(const TraceRow& row) {
    if (out_.is_open()) out_ << format_row(row) << '\n' << std::flush;
  }

 private:
  std::ofstream out_;
};

struct RowProbe {
  const ExperimentSpec& spec;
  const LossContext& ctx;
  std::uint64_t seed;

  void fill(TraceRow& row, const WeightSet& w) const {
    row.params = w.size();
    row.error = std::sqrt(row.loss);
    try {
      row.stability_l = network_stability(w, 1, ctx).l_constant;
    } catch (const Error&) {
      row.stability_l = kNaN;
    }
    row.gen_estimate = kNaN;
    if (spec.gen_samples > 0 && spec.target != TargetId::csv) {
      const ExperimentSpec& s = spec;
      TargetFn fn;
      if (s.target == TargetId::planted) {
        const WeightSet planted = planted_network(s);
        const Activation act(s.delta_relu);
        fn = [planted, act](std::span<const double> x) { return realize(planted, act, x); };
      } else {
        fn = [&s](std::span<const double> x) { return target_value(s, x); };
      }
      row.gen_estimate = generalization_estimate(w, ctx.activation(), fn, uniform_cube_sampler(0.0, 1.0),
                                                 spec.gen_samples,
                                                 derive_seed(seed, 0x9e9, static_cast<std::uint64_t>(row.round)));
    }
  }
};

}  // namespace

RunTrace run_hierarchical(const ExperimentSpec& spec, const TrainingSet& ts, std::uint64_t seed,
                          const std::filesystem::path& csv) {
  const Activation act(spec.delta_relu);
  const LossContext ctx(ts, LossSpec::identity(), act);
  RunTrace trace;
  trace.seed = seed;
  trace.mode = RunMode::hierarchical;
  trace.file = csv;
  TraceWriter writer(csv);
  const RowProbe probe{spec, ctx, seed};

  AdaptiveOptions options;
  options.rounds = spec.rounds;
  options.final_layers = spec.effective_final_layers();
  options.max_params = spec.max_params;
  options.target_loss = spec.target_loss;

  const WeightSet init = variance_scaled_init(spec.start_arch(), derive_seed(seed, 0x1a17));
  const AdaptiveResult res = adaptive_train(
      init, ctx, spec.effective_growth(), spec.optim, options, seed, [&](const RoundRecord& rec, const WeightSet& w) {
        TraceRow row;
        row.round = rec.round;
        row.wall_ms = rec.wall_ms;
        row.loss = rec.loss;
        row.c_opt = rec.c_opt;
        row.extensions = rec.extensions;
        row.epochs = rec.epochs;
        probe.fill(row, w);
        trace.rows.push_back(row);
        writer.write(row);
      });
  trace.total_epochs = res.total_epochs;
  return trace;
}

RunTrace run_direct(const ExperimentSpec& spec, const TrainingSet& ts, std::uint64_t seed, int width,
                    long long epochs, const std::filesystem::path& csv) {
  const Activation act(spec.delta_relu);
  const LossContext ctx(ts, LossSpec::identity(), act);
  RunTrace trace;
  trace.seed = seed;
  trace.mode = RunMode::direct;
  trace.width = width;
  trace.file = csv;
  TraceWriter writer(csv);

  const auto start = std::chrono::steady_clock::now();
  const WeightSet init = variance_scaled_init(spec.direct_arch(width), derive_seed(seed, 0xd1, static_cast<std::uint64_t>(width)));
  OptimConfig opt = spec.optim;
  opt.max_epochs = static_cast<int>(std::min<long long>(epochs, std::numeric_limits<int>::max() - 1));
  opt.stall_window = opt.max_epochs + 1;  // the direct baseline spends its whole budget
  opt.seed = derive_seed(seed, 0xd2, static_cast<std::uint64_t>(width));
  const TrainResult tr = train(init, ctx, FrozenMask::none(init.size()), opt);

  TraceRow row;
  row.round = 0;
  row.loss = ctx.loss(tr.weights);
  row.epochs = tr.trace.epochs;
  try {
    GrowthConfig g = spec.growth;
    g.star_arch = Architecture({ctx.input_width(), 3, 1});
    row.c_opt = row.loss > 0.0 ? c_opt(tr.weights, ctx, g, derive_seed(seed, 0xd3)).c_opt : 0.0;
  } catch (const Error&) {
    row.c_opt = kNaN;
  }
  RowProbe{spec, ctx, seed}.fill(row, tr.weights);
  row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  trace.rows.push_back(row);
  writer.write(row);
  trace.total_epochs = tr.trace.epochs;
  return trace;
}

namespace {

// Runs jobs[i]() for every i on a small pool; each job owns its output slot.
void run_pool(std::vector<std::function<void()>>& jobs, int threads) {
  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const int n = std::max(1, std::min(threads > 0 ? threads : hw, static_cast<int>(jobs.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) jobs[i]();
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const TrainingSet ts = build_dataset(spec);
  const std::string hash = config_hash(spec);
  const std::string id = dataset_id(spec);
  std::filesystem::create_directories(spec.output_dir);
  {
    std::ofstream cfg(spec.output_dir / fmt::format("{}_config.txt", hash));
    cfg << canonical_config(spec);
  }

  ExperimentResult result;
  std::vector<std::string> failures;
  std::mutex failure_mutex;
  auto guarded = [&](RunTrace& slot, const std::function<RunTrace()>& body) {
    return [&slot, body, &failures, &failure_mutex] {
      const std::filesystem::path file = slot.file;
      try {
        slot = body();
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        slot.failure = e.what();
        if (!file.empty() && std::filesystem::exists(file)) {
          try {
            slot.rows = read_trace_csv(file);
          } catch (const Error&) {
            slot.rows.clear();
          }
        }
        failures.push_back(e.what());
      }
      slot.file = file;
    };
  };

  const bool want_h = std::find(spec.modes.begin(), spec.modes.end(), RunMode::hierarchical) != spec.modes.end();
  const bool want_d = std::find(spec.modes.begin(), spec.modes.end(), RunMode::direct) != spec.modes.end();

  std::vector<RunTrace> hier(want_h ? spec.seeds.size() : 0);
  {
    std::vector<std::function<void()>> jobs;
    for (std::size_t k = 0; k < hier.size(); ++k) {
      const std::uint64_t seed = spec.seeds[k];
      hier[k].seed = seed;
      hier[k].file = spec.output_dir / fmt::format("{}_hierarchical_s{}.csv", hash, seed);
      const std::filesystem::path file = hier[k].file;
      jobs.push_back(guarded(hier[k], [&spec, &ts, seed, file] { return run_hierarchical(spec, ts, seed, file); }));
    }
    run_pool(jobs, spec.threads);
  }

  long long direct_budget = spec.direct_epochs;
  if (direct_budget == 0) direct_budget = 200LL * spec.optim.max_epochs;
  if (direct_budget == -1) {
    std::vector<double> totals;
    for (const RunTrace& t : hier) {
      if (t.failure.empty()) totals.push_back(static_cast<double>(t.total_epochs));
    }
    if (totals.empty()) throw ConfigError("direct_epochs = match needs a successful hierarchical run");
    direct_budget = std::llround(median(totals));
  }

  std::vector<RunTrace> direct(want_d ? spec.seeds.size() * spec.direct_widths.size() : 0);
  {
    std::vector<std::function<void()>> jobs;
    std::size_t k = 0;
    for (int width : want_d ? spec.direct_widths : std::vector<int>{}) {
      for (std::uint64_t seed : spec.seeds) {
        RunTrace& slot = direct[k++];
        slot.seed = seed;
        slot.mode = RunMode::direct;
        slot.width = width;
        slot.file = spec.output_dir / fmt::format("{}_direct_w{}_s{}.csv", hash, width, seed);
        const std::filesystem::path file = slot.file;
        jobs.push_back(guarded(slot, [&spec, &ts, seed, width, direct_budget, file] {
          return run_direct(spec, ts, seed, width, direct_budget, file);
        }));
      }
    }
    run_pool(jobs, spec.threads);
  }

  for (RunTrace& t : hier) t.mode = RunMode::hierarchical;
  for (auto* group : {&hier, &direct}) {
    for (RunTrace& t : *group) {
      t.config_hash = hash;
      t.dataset_id = id;
      result.runs.push_back(t);
    }
  }

  result.index_file = spec.output_dir / fmt::format("{}_index.csv", hash);
  {
    std::ofstream index(result.index_file);
    index << "file,mode,width,seed,config_hash,dataset_id,rows,final_params,final_error,total_epochs,status\n";
    for (const RunTrace& t : result.runs) {
      const TraceRow last = t.rows.empty() ? TraceRow{} : t.rows.back();
      index << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", t.file.filename().string(), to_string(t.mode),
                           t.width, t.seed, t.config_hash, t.dataset_id, t.rows.size(), last.params,
                           fmt_double(last.error), t.total_epochs, t.failure.empty() ? "ok" : "failed");
    }
  }

  if (!hier.empty()) {
    const auto path = spec.output_dir / fmt::format("{}_aggregate_hierarchical.csv", hash);
    write_aggregate_csv(path, aggregate(hier));
    result.aggregate_files.push_back(path);
  }
  for (int width : want_d ? spec.direct_widths : std::vector<int>{}) {
    std::vector<RunTrace> group;
    for (const RunTrace& t : direct) {
      if (t.width == width) group.push_back(t);
    }
    const auto path = spec.output_dir / fmt::format("{}_aggregate_direct_w{}.csv", hash, width);
    write_aggregate_csv(path, aggregate(group));
    result.aggregate_files.push_back(path);
  }

  if (!failures.empty()) throw NumericError(fmt::format("{} run(s) failed; first: {}", failures.size(), failures.front()));
  return result;
}

RateFit fit_rate(std::span<const double> params, std::span<const double> errors) {
  if (params.size() != errors.size()) throw ShapeError("params and errors differ in length");
  std::map<double, double> usable;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i] > 0.0 && errors[i] > 0.0 && std::isfinite(params[i]) && std::isfinite(errors[i])) {
      usable[params[i]] = errors[i];
    }
  }
  if (usable.size() < 4) {
    throw DomainError(fmt::format("rate fit needs 4 usable points, got {}", usable.size()));
  }
  const auto n = static_cast<double>(usable.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [p, e] : usable) {
    sx += std::log(p);
    sy += std::log(e);
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [p, e] : usable) {
    const double dx = std::log(p) - mx;
    const double dy = std::log(e) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  RateFit fit;
  fit.points = usable.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

RateFit fit_rate_file(const std::filesystem::path& path, int min_round) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open {}", path.string()));
  std::string line;
  std::getline(in, line);
  const auto header = split_csv_line(line);
  const auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError(fmt::format("{} has no '{}' column", path.string(), name));
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t rc = col("round");
  const std::size_t pc = col("params");
  const std::size_t ec = col("error");
  std::vector<double> p, e;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != header.size()) throw ConfigError(fmt::format("malformed row: {}", line));
    if (parse_double(c[rc]) < min_round) continue;
    p.push_back(parse_double(c[pc]));
    e.push_back(parse_double(c[ec]));
  }
  return fit_rate(p, e);
}

double loglog_interpolate(std::span<const double> params, std::span<const double> errors, double at) {
  std::map<double, double> pts;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i] > 0.0 && errors[i] > 0.0) pts[params[i]] = errors[i];
  }
  if (pts.size() < 2) throw DomainError("interpolation needs two positive points");
  auto hi = pts.lower_bound(at);
  if (hi != pts.end() && hi->first == at) return hi->second;
  if (hi == pts.begin()) ++hi;
  if (hi == pts.end()) --hi;
  auto lo = std::prev(hi);
  const double t = (std::log(at) - std::log(lo->first)) / (std::log(hi->first) - std::log(lo->first));
  return std::exp(std::log(lo->second) + t * (std::log(hi->second) - std::log(lo->second)));
}

}  // namespace hgrow
