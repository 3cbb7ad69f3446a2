// Brute-force noisy-MAX: every cause (and the leak) draws an independent
// latent contribution, the child takes the largest.

#include <string>

#include "nmx/noisymax.hpp"

namespace nmx {

namespace {

// P(contribution = z) from a stored cumulative curve.
std::vector<double> contribution_pmf(const Vector& cumulative) {
  std::vector<double> pmf(static_cast<std::size_t>(cumulative.size()));
  double below = 0.0;
  for (Eigen::Index z = 0; z < cumulative.size(); ++z) {
    pmf[static_cast<std::size_t>(z)] = cumulative[z] - below;
    below = cumulative[z];
  }
  return pmf;
}

}  // namespace

Cpt oracle_cpt(const NoisyMaxFamily& family, std::size_t cap) {
  const int s = family.child_size();
  const std::size_t n = family.parents.size();

  Cpt cpt;
  cpt.child_size = s;
  std::size_t columns = 1;
  for (std::size_t i = 0; i < n; ++i) {
    cpt.parent_sizes.push_back(static_cast<int>(family.activation[i].size()) + 1);
    columns *= static_cast<std::size_t>(cpt.parent_sizes.back());
  }

  // Work = columns * s^(n+1) latent outcomes.
  double work = static_cast<double>(columns);
  for (std::size_t i = 0; i <= n; ++i) work *= s;
  if (work > static_cast<double>(cap)) {
    throw CapacityError("oracle enumeration for node '" + family.child.str() + "' needs " +
                        std::to_string(static_cast<unsigned long long>(work)) + " outcomes, cap is " +
                        std::to_string(cap));
  }

  const std::vector<double> leak_pmf = contribution_pmf(family.leak.values);
  std::vector<double> absent_pmf(static_cast<std::size_t>(s), 0.0);
  absent_pmf[0] = 1.0;

  cpt.table = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(columns) * s);
  std::vector<int> parent_state(n, 0);
  for (std::size_t column = 0; column < columns; ++column) {
    // Decode the column, first parent most significant.
    std::size_t rest = column;
    for (std::size_t i = n; i-- > 0;) {
      parent_state[i] = static_cast<int>(rest % static_cast<std::size_t>(cpt.parent_sizes[i]));
      rest /= static_cast<std::size_t>(cpt.parent_sizes[i]);
    }
    std::vector<std::vector<double>> pmfs;
    for (std::size_t i = 0; i < n; ++i) {
      pmfs.push_back(parent_state[i] == 0
                         ? absent_pmf
                         : contribution_pmf(family.activation[i][static_cast<std::size_t>(parent_state[i] - 1)].values));
    }
    pmfs.push_back(leak_pmf);

    // Enumerate the latent outcome vector z over s^(n+1) cells.
    std::vector<int> z(n + 1, 0);
    while (true) {
      double p = 1.0;
      int top = 0;
      for (std::size_t k = 0; k <= n; ++k) {
        p *= pmfs[k][static_cast<std::size_t>(z[k])];
        if (z[k] > top) top = z[k];
      }
      cpt.table[static_cast<Eigen::Index>(column) * s + top] += p;

      std::size_t k = 0;
      while (k <= n && ++z[k] == s) z[k++] = 0;
      if (k > n) break;
    }
  }
  return cpt;
}

}  // namespace nmx
