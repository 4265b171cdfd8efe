#include "ncelab/alias_table.hpp"

#include <cmath>
#include <numeric>

#include "ncelab/types.hpp"

namespace ncelab {

AliasTable::AliasTable(std::span<const double> weights)
    : threshold_(weights.size(), 1.0), alias_(weights.size()) {
  const std::size_t n = weights.size();
  if (n == 0) throw Error("alias table needs at least one weight");
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw Error("alias table weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw Error("alias table weights sum to zero");

  std::vector<double> scaled(n);
  std::vector<std::size_t> small;
  std::vector<std::size_t> large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    alias_[i] = static_cast<std::uint32_t>(i);
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    threshold_[s] = scaled[s];
    alias_[s] = static_cast<std::uint32_t>(l);
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are 1 up to rounding.
  for (std::size_t i : small) threshold_[i] = 1.0;
  for (std::size_t i : large) threshold_[i] = 1.0;
}

}  // namespace ncelab
