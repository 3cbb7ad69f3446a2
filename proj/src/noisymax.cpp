#include "nmx/noisymax.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <string>

namespace nmx {

namespace {

std::atomic<std::uint64_t> g_clamps{0};

constexpr double kMarginalTolerance = 1e-9;

void check_states(const NoisyMaxFamily& family, std::span<const int> parent_states, int x) {
  if (parent_states.size() != family.parents.size()) {
    throw InputError("family of '" + family.child.str() + "' has " + std::to_string(family.parents.size()) +
                     " parents, got " + std::to_string(parent_states.size()) + " states");
  }
  for (std::size_t i = 0; i < parent_states.size(); ++i) {
    if (parent_states[i] < 0 || parent_states[i] >= family.parent_size(i)) {
      throw InputError("state " + std::to_string(parent_states[i]) + " out of range for parent '" +
                       family.parents[i].str() + "'");
    }
  }
  if (x < 0 || x >= family.child_size()) {
    throw InputError("child state " + std::to_string(x) + " out of range for '" + family.child.str() + "'");
  }
}

// Cumulative curve of the child for one parent configuration.
Eigen::ArrayXd cumulative_column(const NoisyMaxFamily& family, std::span<const int> parent_states) {
  Eigen::ArrayXd cum = family.leak.values.array();
  for (std::size_t i = 0; i < family.parents.size(); ++i) {
    const int d = parent_states[i];
    if (d != 0) cum *= family.activation[i][static_cast<std::size_t>(d - 1)].values.array();
  }
  for (Eigen::Index x = 0; x < cum.size(); ++x) cum[x] = detail::clamp_probability(cum[x]);
  return cum;
}

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) return std::numeric_limits<std::uint64_t>::max();
  return a * b;
}

}  // namespace

namespace detail {

double clamp_probability(double p) {
  if (p < 0.0) {
    g_clamps.fetch_add(1, std::memory_order_relaxed);
    return 0.0;
  }
  if (p > 1.0) {
    g_clamps.fetch_add(1, std::memory_order_relaxed);
    return 1.0;
  }
  return p;
}

void check_marginal(const Vector& marginal, int expected_size, const NodeId& node) {
  if (marginal.size() != expected_size) {
    throw InputError("marginal for '" + node.str() + "' has " + std::to_string(marginal.size()) +
                     " entries, expected " + std::to_string(expected_size));
  }
  if ((marginal.array() < 0.0).any() || !(std::abs(marginal.sum() - 1.0) <= kMarginalTolerance)) {
    throw InputError("marginal for '" + node.str() + "' is not normalized");
  }
}

}  // namespace detail

std::uint64_t clamp_events() { return g_clamps.load(std::memory_order_relaxed); }

std::size_t Cpt::columns() const {
  std::size_t n = 1;
  for (int s : parent_sizes) n *= static_cast<std::size_t>(s);
  return n;
}

std::size_t Cpt::column_of(std::span<const int> parent_states) const {
  std::size_t j = 0;
  for (std::size_t i = 0; i < parent_sizes.size(); ++i) {
    j = j * static_cast<std::size_t>(parent_sizes[i]) + static_cast<std::size_t>(parent_states[i]);
  }
  return j;
}

std::vector<int> Cpt::states_of(std::size_t column) const {
  std::vector<int> states(parent_sizes.size());
  for (std::size_t i = parent_sizes.size(); i-- > 0;) {
    const auto s = static_cast<std::size_t>(parent_sizes[i]);
    states[i] = static_cast<int>(column % s);
    column /= s;
  }
  return states;
}

double cumulative_prob(const NoisyMaxFamily& family, std::span<const int> parent_states, int x) {
  check_states(family, parent_states, x);
  double cum = family.leak[x];
  for (std::size_t i = 0; i < family.parents.size(); ++i) cum *= family.curve(i, parent_states[i], x);
  return detail::clamp_probability(cum);
}

double point_prob(const NoisyMaxFamily& family, std::span<const int> parent_states, int x) {
  const double upper = cumulative_prob(family, parent_states, x);
  if (x == 0) return upper;
  return detail::clamp_probability(upper - cumulative_prob(family, parent_states, x - 1));
}

double noisy_or_prob(std::span<const double> activations) {
  double none = 1.0;
  for (double p : activations) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("activation probability outside [0,1]");
    none *= 1.0 - p;
  }
  return 1.0 - none;
}

Cpt expand_cpt(const NoisyMaxFamily& family, std::size_t cap) {
  Cpt cpt;
  cpt.child_size = family.child_size();
  for (std::size_t i = 0; i < family.parents.size(); ++i) cpt.parent_sizes.push_back(family.parent_size(i));

  std::uint64_t entries = static_cast<std::uint64_t>(cpt.child_size);
  for (int s : cpt.parent_sizes) entries = saturating_mul(entries, static_cast<std::uint64_t>(s));
  if (entries > cap) {
    throw CapacityError("expanded table for node '" + family.child.str() + "' needs " + std::to_string(entries) +
                        " entries, cap is " + std::to_string(cap));
  }

  const std::size_t columns = cpt.columns();
  const auto s = static_cast<Eigen::Index>(cpt.child_size);
  cpt.table.resize(static_cast<Eigen::Index>(entries));
  std::vector<int> states(family.parents.size(), 0);
  for (std::size_t j = 0; j < columns; ++j) {
    const Eigen::ArrayXd cum = cumulative_column(family, states);
    const auto base = static_cast<Eigen::Index>(j) * s;
    cpt.table[base] = cum[0];
    for (Eigen::Index x = 1; x < s; ++x) cpt.table[base + x] = detail::clamp_probability(cum[x] - cum[x - 1]);

    // Advance the mixed-radix counter, last parent fastest.
    for (std::size_t i = states.size(); i-- > 0;) {
      if (++states[i] < cpt.parent_sizes[i]) break;
      states[i] = 0;
    }
  }
  return cpt;
}

Vector expected_curve(const NoisyMaxFamily& family, std::size_t parent, const Vector& marginal) {
  const int parent_size = family.parent_size(parent);
  detail::check_marginal(marginal, parent_size, family.parents[parent]);
  Vector curve = marginal[0] * Vector::Ones(family.child_size());
  for (int d = 1; d < parent_size; ++d) {
    curve += marginal[d] * family.activation[parent][static_cast<std::size_t>(d - 1)].values;
  }
  return curve;
}

CumulativeVector marginal_cumulative(const NoisyMaxFamily& family, const std::map<NodeId, Vector>& parent_marginals) {
  Eigen::ArrayXd cum = family.leak.values.array();
  for (std::size_t i = 0; i < family.parents.size(); ++i) {
    auto it = parent_marginals.find(family.parents[i]);
    if (it == parent_marginals.end()) {
      throw InputError("missing marginal for parent '" + family.parents[i].str() + "'");
    }
    cum *= expected_curve(family, i, it->second).array();
  }
  for (Eigen::Index x = 0; x < cum.size(); ++x) cum[x] = detail::clamp_probability(cum[x]);
  return CumulativeVector(cum.matrix());
}

AssessmentCounts assessment_counts(const NoisyMaxFamily& family) {
  const auto free_per_column = static_cast<std::uint64_t>(family.child_size() > 0 ? family.child_size() - 1 : 0);
  AssessmentCounts counts;
  counts.leak_count = free_per_column;
  counts.full_count = free_per_column;
  for (std::size_t i = 0; i < family.parents.size(); ++i) {
    const auto s = static_cast<std::uint64_t>(family.parent_size(i));
    counts.full_count = saturating_mul(counts.full_count, s);
    counts.noisy_count += free_per_column * s;
  }
  return counts;
}

}  // namespace nmx
