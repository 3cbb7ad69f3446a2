#include "nmx/generator.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>

namespace nmx {

namespace {

// mt19937_64's output sequence is fixed by the standard; the distributions
// in <random> are not, so draws are derived from raw output here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

std::string node_id(const std::string& prefix, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", index);
  return prefix + "-" + buf;
}

// Decreasing weights w[0] = 1 > ... > w[s-1] = 0, shape of a curve 1 - p*w.
std::vector<double> curve_shape(Rng& rng, int s) {
  std::vector<double> w(static_cast<std::size_t>(s));
  for (auto& v : w) v = rng.uniform();
  std::sort(w.begin(), w.end(), std::greater<>());
  w.front() = 1.0;
  w.back() = 0.0;
  return w;
}

CumulativeVector curve(const std::vector<double>& shape, double strength) {
  Vector v(static_cast<Eigen::Index>(shape.size()));
  for (std::size_t x = 0; x < shape.size(); ++x) v[static_cast<Eigen::Index>(x)] = 1.0 - strength * shape[x];
  return CumulativeVector(std::move(v));
}

const std::vector<std::string> kOrganLabels{"biliary", "cardiac", "gastric", "liver", "pancreatic", "renal"};

}  // namespace

GeneratorParams GeneratorParams::preset(const std::string& name, std::uint64_t seed) {
  GeneratorParams p;
  p.seed = seed;
  p.title = name + " seed " + std::to_string(seed);
  if (name == "cpcs-scale") {
    p.layers = {{"predisposing", 74, {2, 3}}, {"disease", 120, {4}}, {"ips", 80, {4}}, {"finding", 174, {2, 3, 4}}};
    p.arcs = 908;
    p.max_parents = 6;
    return p;
  }
  if (name == "tiny") {
    p.layers = {{"predisposing", 3, {2}}, {"disease", 3, {2, 3}}, {"finding", 4, {2, 3}}};
    p.arcs = 12;
    p.max_parents = 3;
    return p;
  }
  throw ParameterError("unknown preset '" + name + "' (expected cpcs-scale or tiny)");
}

Network gen_random(const GeneratorParams& params) {
  if (params.arcs < 0 || params.max_parents < 1) throw ParameterError("arc count and max_parents must be positive");
  if (!(0.0 <= params.activation_min && params.activation_min <= params.activation_max && params.activation_max <= 1.0) ||
      !(0.0 <= params.leak_min && params.leak_min <= params.leak_max && params.leak_max < 1.0)) {
    throw ParameterError("activation and leak ranges must lie within [0,1]");
  }

  Rng rng(params.seed);
  std::vector<std::vector<NodeId>> layer_ids;
  std::map<NodeId, int> domain_size;
  std::map<NodeId, std::size_t> layer_of;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const LayerSpec& layer = params.layers[k];
    if (layer.count < 0) throw ParameterError("layer '" + layer.name + "' has a negative count");
    if (layer.count > 0 && layer.domain_sizes.empty()) throw ParameterError("layer '" + layer.name + "' has no domain sizes");
    for (int s : layer.domain_sizes) {
      if (s < 2) throw ParameterError("domain sizes must be at least 2");
    }
    if (k > 0 && layer.count > 0 && layer_ids[k - 1].empty()) {
      throw ParameterError("layer '" + layer.name + "' follows an empty layer");
    }
    layer_ids.emplace_back();
    for (int i = 0; i < layer.count; ++i) {
      NodeId id = node_id(layer.name, i);
      layer_ids.back().push_back(id);
      domain_size[id] = layer.domain_sizes[rng.below(layer.domain_sizes.size())];
      layer_of[id] = k;
    }
  }

  // Feasibility: one mandatory parent per non-root, capped total.
  long long mandatory = 0;
  long long possible = 0;
  long long earlier = 0;
  for (std::size_t k = 0; k < layer_ids.size(); ++k) {
    if (k > 0) {
      mandatory += static_cast<long long>(layer_ids[k].size());
      possible += static_cast<long long>(layer_ids[k].size()) * std::min<long long>(earlier, params.max_parents);
    }
    earlier += static_cast<long long>(layer_ids[k].size());
  }
  if (params.arcs < mandatory || params.arcs > possible) {
    throw ParameterError("arc count " + std::to_string(params.arcs) + " infeasible: need between " +
                         std::to_string(mandatory) + " and " + std::to_string(possible));
  }

  std::map<NodeId, std::set<NodeId>> parents;
  for (std::size_t k = 1; k < layer_ids.size(); ++k) {
    for (const auto& id : layer_ids[k]) parents[id].insert(layer_ids[k - 1][rng.below(layer_ids[k - 1].size())]);
  }
  std::vector<Arc> candidates;
  for (std::size_t k = 1; k < layer_ids.size(); ++k) {
    for (const auto& child : layer_ids[k]) {
      for (std::size_t j = 0; j < k; ++j) {
        for (const auto& parent : layer_ids[j]) {
          if (!parents[child].count(parent)) candidates.emplace_back(parent, child);
        }
      }
    }
  }
  rng.shuffle(candidates);
  long long remaining = params.arcs - mandatory;
  for (const auto& [parent, child] : candidates) {
    if (remaining == 0) break;
    if (static_cast<int>(parents[child].size()) >= params.max_parents) continue;
    parents[child].insert(parent);
    --remaining;
  }
  if (remaining > 0) throw ParameterError("could not place all arcs under the max_parents cap");

  NetworkBuilder builder;
  builder.title(params.title);
  for (std::size_t k = 0; k < layer_ids.size(); ++k) {
    for (const auto& id : layer_ids[k]) {
      const int s = domain_size[id];
      Node node{id, id.str(), OrderedDomain::with_size(s),
                {params.layers[k].name, kOrganLabels[rng.below(kOrganLabels.size())]}};
      if (k == 0) {
        Vector prior(s);
        prior[0] = rng.uniform(0.80, 0.99);
        Vector rest(s - 1);
        for (int x = 0; x < s - 1; ++x) rest[x] = rng.uniform(0.1, 1.0);
        prior.tail(s - 1) = rest * ((1.0 - prior[0]) / rest.sum());
        prior /= prior.sum();
        builder.add_root(std::move(node), std::move(prior));
        continue;
      }
      NoisyMaxFamily fam;
      fam.child = id;
      for (const auto& p : parents[id]) {
        fam.parents.push_back(p);
        const std::vector<double> shape = curve_shape(rng, s);
        std::vector<double> strength(static_cast<std::size_t>(domain_size[p] - 1));
        for (auto& v : strength) v = rng.uniform(params.activation_min, params.activation_max);
        std::sort(strength.begin(), strength.end());  // accumulating in parent state
        std::vector<CumulativeVector> curves;
        for (double v : strength) curves.push_back(curve(shape, v));
        fam.activation.push_back(std::move(curves));
      }
      fam.leak = curve(curve_shape(rng, s), rng.uniform(params.leak_min, params.leak_max));
      builder.add_child(std::move(node), std::move(fam));
    }
  }
  return builder.build_validated();
}

}  // namespace nmx
