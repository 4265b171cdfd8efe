#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ncelab/rng.hpp"

namespace ncelab {

/// Walker/Vose alias table: O(n) construction, O(1) draws.
class AliasTable {
 public:
  AliasTable() = default;
  /// Weights need not be normalized; all must be finite and nonnegative with a positive sum.
  explicit AliasTable(std::span<const double> weights);

  std::size_t size() const { return threshold_.size(); }

  /// Draw from one uniform variate u in [0,1): slot = floor(u*n), then keep or alias.
  std::size_t sample(double u) const {
    const double scaled = u * static_cast<double>(threshold_.size());
    auto slot = static_cast<std::size_t>(scaled);
    if (slot >= threshold_.size()) slot = threshold_.size() - 1;
    return (scaled - static_cast<double>(slot)) < threshold_[slot] ? slot : alias_[slot];
  }

  std::size_t sample(Rng& rng) const { return sample(rng.uniform()); }

 private:
  std::vector<double> threshold_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace ncelab
