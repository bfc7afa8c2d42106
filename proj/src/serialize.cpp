#include "hgrow/serialize.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace hgrow {

namespace {

constexpr const char* kMagic = "hgrow-weights";
constexpr int kVersion = 1;

double parse_double(const std::string& token) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    throw ShapeError(fmt::format("not a number: '{}'", token));
  }
  if (used != token.size()) throw ShapeError(fmt::format("not a number: '{}'", token));
  return v;
}

}  // namespace

void write_network(std::ostream& os, const Activation& act, const WeightSet& w) {
  fmt::print(os, "{} {}\n", kMagic, kVersion);
  fmt::print(os, "delta_relu {}\n", act.delta_relu);
  os << "widths";
  for (int width : w.arch().widths()) os << ' ' << width;
  os << '\n';
  const Vector p = w.to_vector();
  for (Eigen::Index i = 0; i < p.size(); ++i) fmt::print(os, "{}\n", p[i]);
}

StoredNetwork read_network(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ShapeError("empty weight file");
  {
    std::istringstream head(line);
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != kMagic) throw ShapeError(fmt::format("bad weight file header '{}'", line));
    if (version != kVersion) {
      throw ShapeError(fmt::format("unsupported weight file version {}", version));
    }
  }

  double delta = 0.0;
  std::vector<int> widths;
  for (int field = 0; field < 2; ++field) {
    if (!std::getline(is, line)) throw ShapeError("truncated weight file header");
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "delta_relu") {
      std::string tok;
      ls >> tok;
      delta = parse_double(tok);
    } else if (key == "widths") {
      int v = 0;
      while (ls >> v) widths.push_back(v);
    } else {
      throw ShapeError(fmt::format("unexpected header field '{}'", key));
    }
  }

  Architecture arch(widths);
  std::vector<double> params;
  params.reserve(param_count(arch));
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    params.push_back(parse_double(line));
  }
  if (params.size() != param_count(arch)) {
    throw ShapeError(fmt::format("weight file holds {} parameters, architecture needs {}",
                                 params.size(), param_count(arch)));
  }
  return {Activation(delta), WeightSet::from_vector(arch, params)};
}

void save_network(const std::filesystem::path& path, const Activation& act, const WeightSet& w) {
  std::ofstream os(path);
  if (!os) throw Error(fmt::format("cannot open {} for writing", path.string()));
  write_network(os, act, w);
}

StoredNetwork load_network(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(fmt::format("cannot open {}", path.string()));
  return read_network(is);
}

}  // namespace hgrow
