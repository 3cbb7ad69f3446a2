#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "nmx/model.hpp"

namespace nmx {

struct LayerSpec {
  std::string name;               // node id prefix and semantic label
  int count = 0;
  std::vector<int> domain_sizes;  // drawn uniformly per node
};

// Layered random network. Every node in layer k > 0 gets one parent in layer
// k - 1, so its level equals k; remaining arcs go from any earlier layer.
struct GeneratorParams {
  std::vector<LayerSpec> layers;
  int arcs = 0;
  int max_parents = 6;
  double activation_min = 0.05;
  double activation_max = 0.95;
  double leak_min = 0.001;
  double leak_max = 0.05;
  std::uint64_t seed = 1;
  std::string title;

  // "cpcs-scale" (448 nodes, 908 arcs, 74 roots) or "tiny" (10 nodes).
  static GeneratorParams preset(const std::string& name, std::uint64_t seed);
};

// Throws ParameterError when the arc count cannot be met.
Network gen_random(const GeneratorParams& params);

// Frequency weight (0..5) -> activation probability.
struct FrequencyMap {
  std::map<int, double> probability;

  // Placeholder mapping, not ground truth.
  static FrequencyMap defaults();
  // Throws InputError unless monotone, within [0,1], with weight 0 -> 0.
  void check() const;
  double operator()(int weight) const;  // throws InputError
};

FrequencyMap load_frequency_map(std::string_view text);

// Builds a network from an nmx-structure document whose arcs carry integer
// frequency weights. Each weight p becomes the step curve [1-p, ..., 1-p, 1]
// at every parent state >= 1.
Network import_frequencies(std::string_view structure_doc, const FrequencyMap& fmap);

}  // namespace nmx
