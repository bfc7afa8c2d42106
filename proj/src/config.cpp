#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "hgrow/experiment.hpp"

namespace hgrow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(fmt::format("{}: '{}' is not a number", key, v));
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos == v.size()) return i;
  } catch (const std::exception&) {
  }
  throw ConfigError(fmt::format("{}: '{}' is not an integer", key, v));
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long i = std::stoull(v, &pos);
    if (pos == v.size() && v.front() != '-') return i;
  } catch (const std::exception&) {
  }
  throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, v));
}

std::vector<int> to_ints(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& item : split_list(v)) out.push_back(static_cast<int>(to_int(key, item)));
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, v));
}

}  // namespace

std::string to_string(TargetId t) {
  switch (t) {
    case TargetId::sq2d: return "sq2d";
    case TargetId::sq3d: return "sq3d";
    case TargetId::pow23_2d: return "pow23_2d";
    case TargetId::sq10d: return "sq10d";
    case TargetId::planted: return "planted";
    case TargetId::csv: return "csv";
  }
  return "?";
}

std::string to_string(Sampling s) { return s == Sampling::grid ? "grid" : "uniform"; }

std::string to_string(RunMode m) { return m == RunMode::hierarchical ? "hierarchical" : "direct"; }

std::string to_string(StepRule r) {
  switch (r) {
    case StepRule::exact_line_search: return "exact_line_search";
    case StepRule::theoretical_alpha: return "theoretical_alpha";
    case StepRule::joint_alpha_beta: return "joint_alpha_beta";
  }
  return "?";
}

TargetId parse_target(const std::string& s) {
  for (TargetId t : {TargetId::sq2d, TargetId::sq3d, TargetId::pow23_2d, TargetId::sq10d, TargetId::planted,
                     TargetId::csv}) {
    if (to_string(t) == s) return t;
  }
  throw ConfigError(fmt::format("unknown target '{}'", s));
}

Sampling parse_sampling(const std::string& s) {
  if (s == "grid") return Sampling::grid;
  if (s == "uniform") return Sampling::uniform;
  throw ConfigError(fmt::format("unknown sampling '{}'", s));
}

RunMode parse_mode(const std::string& s) {
  if (s == "hierarchical") return RunMode::hierarchical;
  if (s == "direct") return RunMode::direct;
  throw ConfigError(fmt::format("unknown mode '{}'", s));
}

StepRule parse_step_rule(const std::string& s) {
  for (StepRule r : {StepRule::exact_line_search, StepRule::theoretical_alpha, StepRule::joint_alpha_beta}) {
    if (to_string(r) == s) return r;
  }
  throw ConfigError(fmt::format("unknown step rule '{}'", s));
}

void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  GrowthConfig& g = spec.growth;
  OptimConfig& o = spec.optim;
  if (key == "target") spec.target = parse_target(v);
  else if (key == "samples") spec.samples = static_cast<int>(to_int(key, v));
  else if (key == "sampling") spec.sampling = parse_sampling(v);
  else if (key == "dataset_seed") spec.dataset_seed = to_u64(key, v);
  else if (key == "csv_path") spec.csv_path = v;
  else if (key == "planted_widths") spec.planted_widths = to_ints(key, v);
  else if (key == "planted_seed") spec.planted_seed = to_u64(key, v);
  else if (key == "seeds") {
    spec.seeds.clear();
    for (const auto& s : split_list(v)) spec.seeds.push_back(to_u64(key, s));
  } else if (key == "modes") {
    spec.modes.clear();
    for (const auto& s : split_list(v)) spec.modes.push_back(parse_mode(s));
  } else if (key == "delta_relu") spec.delta_relu = to_double(key, v);
  else if (key == "rounds") spec.rounds = static_cast<int>(to_int(key, v));
  else if (key == "max_params") spec.max_params = to_u64(key, v);
  else if (key == "target_loss") spec.target_loss = to_double(key, v);
  else if (key == "start_widths") spec.start_widths = to_ints(key, v);
  else if (key == "final_layers") spec.final_layers = static_cast<int>(to_int(key, v));
  else if (key == "direct_widths") spec.direct_widths = to_ints(key, v);
  else if (key == "direct_epochs") spec.direct_epochs = v == "match" ? -1 : to_int(key, v);
  else if (key == "gen_samples") spec.gen_samples = to_u64(key, v);
  else if (key == "output_dir") spec.output_dir = v;
  else if (key == "threads") spec.threads = static_cast<int>(to_int(key, v));
  else if (key == "star_widths") spec.star_widths = to_ints(key, v);
  else if (key == "kappa") g.kappa = to_double(key, v);
  else if (key == "l_max") g.l_max = static_cast<int>(to_int(key, v));
  else if (key == "search_restarts") g.search_restarts = static_cast<int>(to_int(key, v));
  else if (key == "search_ascent_steps") g.search_ascent_steps = static_cast<int>(to_int(key, v));
  else if (key == "search_learning_rate") g.search_learning_rate = to_double(key, v);
  else if (key == "step_rule") g.step_rule = parse_step_rule(v);
  else if (key == "c_opt_exit") g.c_opt_exit = to_double(key, v);
  else if (key == "assumed_l") g.assumed_l = to_double(key, v);
  else if (key == "assumed_size_ratio") g.assumed_size_ratio = to_double(key, v);
  else if (key == "train_after_last") g.train_after_last = to_bool(key, v);
  else if (key == "optimizer") {
    if (v == "adam") o.method = OptimMethod::adam;
    else if (v == "gradient_descent") o.method = OptimMethod::gradient_descent;
    else throw ConfigError(fmt::format("unknown optimizer '{}'", v));
  } else if (key == "epochs_per_round") o.max_epochs = static_cast<int>(to_int(key, v));
  else if (key == "learning_rate") o.learning_rate = to_double(key, v);
  else if (key == "adam_beta1") o.adam_beta1 = to_double(key, v);
  else if (key == "adam_beta2") o.adam_beta2 = to_double(key, v);
  else if (key == "epsilon") o.epsilon = to_double(key, v);
  else if (key == "stall_window") o.stall_window = static_cast<int>(to_int(key, v));
  else if (key == "stall_rel_tol") o.stall_rel_tol = to_double(key, v);
  else if (key == "grad_tol") o.grad_tol = to_double(key, v);
  else if (key == "batch_size") o.batch_size = static_cast<int>(to_int(key, v));
  else throw ConfigError(fmt::format("unknown key '{}'", key));
}

void apply_override(ExperimentSpec& spec, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(fmt::format("expected key=value, got '{}'", assignment));
  apply_setting(spec, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

ExperimentSpec parse_config(const std::string& text) {
  ExperimentSpec spec;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    try {
      apply_override(spec, t);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("line {}: {}", lineno, e.what()));
    }
  }
  return spec;
}

ExperimentSpec load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_config(const ExperimentSpec& spec) {
  const GrowthConfig g = spec.effective_growth();
  const OptimConfig& o = spec.optim;
  std::vector<std::string> modes;
  for (RunMode m : spec.modes) modes.push_back(to_string(m));
  std::string out;
  auto list = [](const auto& v) { return fmt::format("{}", fmt::join(v, ",")); };
  auto kv = [&out](const std::string& k, const auto& v) { out += fmt::format("{}={}\n", k, v); };
  kv("target", to_string(spec.target));
  kv("samples", spec.effective_samples());
  kv("sampling", to_string(spec.effective_sampling()));
  kv("dataset_seed", spec.dataset_seed);
  if (spec.target == TargetId::csv) kv("csv_path", spec.csv_path);
  if (spec.target == TargetId::planted) {
    kv("planted_widths", list(spec.planted_widths));
    kv("planted_seed", spec.planted_seed);
  }
  kv("seeds", list(spec.seeds));
  kv("modes", list(modes));
  kv("delta_relu", spec.delta_relu);
  kv("rounds", spec.rounds);
  kv("max_params", spec.max_params);
  kv("target_loss", spec.target_loss);
  kv("start_widths", list(spec.start_arch().widths()));
  kv("final_layers", spec.effective_final_layers());
  kv("direct_widths", list(spec.direct_widths));
  kv("direct_epochs", spec.direct_epochs == -1 ? std::string("match") : std::to_string(spec.direct_epochs));
  kv("gen_samples", spec.gen_samples);
  kv("star_widths", list(g.star_arch.widths()));
  kv("kappa", g.kappa);
  kv("l_max", g.l_max);
  kv("search_restarts", g.search_restarts);
  kv("search_ascent_steps", g.search_ascent_steps);
  kv("search_learning_rate", g.search_learning_rate);
  kv("step_rule", to_string(g.step_rule));
  kv("c_opt_exit", g.c_opt_exit);
  kv("assumed_l", g.assumed_l);
  kv("assumed_size_ratio", g.assumed_size_ratio);
  kv("train_after_last", g.train_after_last ? "true" : "false");
  kv("optimizer", o.method == OptimMethod::adam ? "adam" : "gradient_descent");
  kv("epochs_per_round", o.max_epochs);
  kv("learning_rate", o.learning_rate);
  kv("adam_beta1", o.adam_beta1);
  kv("adam_beta2", o.adam_beta2);
  kv("epsilon", o.epsilon);
  kv("stall_window", o.stall_window);
  kv("stall_rel_tol", o.stall_rel_tol);
  kv("grad_tol", o.grad_tol);
  kv("batch_size", o.batch_size);
  return out;
}

std::string config_hash(const ExperimentSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_config(spec)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace hgrow
