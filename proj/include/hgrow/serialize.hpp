#pragma once

#include <filesystem>
#include <iosfwd>

#include "hgrow/net.hpp"

namespace hgrow {

// A network together with the activation it was trained with.
struct StoredNetwork {
  Activation activation;
  WeightSet weights;
};

// Text container, see docs/formats.md:
//
//   hgrow-weights 1
//   delta_relu <value>
//   widths <w_0> ... <w_{d+1}>
//   <one parameter per line, canonical order>
//
// Values are written in shortest round-trip form, so reading back is exact.
void write_network(std::ostream& os, const Activation& act, const WeightSet& w);
StoredNetwork read_network(std::istream& is);

void save_network(const std::filesystem::path& path, const Activation& act, const WeightSet& w);
StoredNetwork load_network(const std::filesystem::path& path);

}  // namespace hgrow
