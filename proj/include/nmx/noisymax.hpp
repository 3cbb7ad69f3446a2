#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "nmx/model.hpp"

namespace nmx {

inline constexpr std::size_t kDefaultExpansionCap = std::size_t{1} << 24;
inline constexpr std::size_t kOracleCap = 10'000'000;

// Full conditional table. Column j holds P(X | parents = joint state j);
// joint states are mixed-radix with the first parent most significant.
struct Cpt {
  int child_size = 0;
  std::vector<int> parent_sizes;
  Eigen::ArrayXd table;  // table[j * child_size + x]

  std::size_t columns() const;
  double operator()(std::size_t column, int x) const {
    return table[static_cast<Eigen::Index>(column * static_cast<std::size_t>(child_size) + static_cast<std::size_t>(x))];
  }
  std::size_t column_of(std::span<const int> parent_states) const;
  std::vector<int> states_of(std::size_t column) const;
};

struct AssessmentCounts {
  std::uint64_t noisy_count = 0;  // sum_i (s_m - 1) * s_i
  std::uint64_t full_count = 0;   // (s_m - 1) * prod_i s_i
  std::uint64_t leak_count = 0;   // s_m - 1, assessed separately

  friend bool operator==(const AssessmentCounts&, const AssessmentCounts&) = default;
};

// P(X <= x | parent states) = leak[x] * prod_i c[i][d_i][x].
double cumulative_prob(const NoisyMaxFamily& family, std::span<const int> parent_states, int x);

// P(X = x | parent states), by differencing the cumulative product.
double point_prob(const NoisyMaxFamily& family, std::span<const int> parent_states, int x);

// Binary noisy-OR: 1 - prod(1 - p_i) over the active causes.
double noisy_or_prob(std::span<const double> activations);

Cpt expand_cpt(const NoisyMaxFamily& family, std::size_t cap = kDefaultExpansionCap);

// Reference CPT by enumerating every latent per-cause contribution and taking
// the maximum. Shares no arithmetic with expand_cpt.
Cpt oracle_cpt(const NoisyMaxFamily& family, std::size_t cap = kOracleCap);

// sum_d P(D = d) * c[i][d], the parent's expected cumulative contribution.
Vector expected_curve(const NoisyMaxFamily& family, std::size_t parent, const Vector& marginal);

// Unconditional P(X <= x) for mutually independent parents with the given
// marginals: leak[x] * prod_i sum_d P(D_i = d) c[i][d][x].
CumulativeVector marginal_cumulative(const NoisyMaxFamily& family, const std::map<NodeId, Vector>& parent_marginals);

AssessmentCounts assessment_counts(const NoisyMaxFamily& family);

// Number of products clamped back into [0,1] since process start.
std::uint64_t clamp_events();

namespace detail {
double clamp_probability(double p);
void check_marginal(const Vector& marginal, int expected_size, const NodeId& node);
}  // namespace detail

}  // namespace nmx
