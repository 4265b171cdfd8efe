#pragma once

#include <cstdint>
#include <span>

#include "ncelab/model.hpp"
#include "ncelab/nce.hpp"

namespace ncelab {

/// Negative-sampling posterior p(D=1|c,w) = u/(u+1) = σ(s(w,c)). Ignores z_mode.
double ns_posterior_true(const ModelParams& params, WordId w, ContextId c);

/// Σ [log σ(s(w,c)) + Σ_i log σ(-s(w̄_i,c))] over the proxy examples.
double ns_loss(const ModelParams& params, std::span<const ProxyExample> examples);
/// Gradient of ns_loss. The log_zc block is always zero.
Gradient ns_grad(const ModelParams& params, std::span<const ProxyExample> examples);
double accumulate_ns(const ModelParams& params, std::span<const ProxyExample> examples, Gradient& grad);

}  // namespace ncelab

namespace ncelab {

struct EquivalenceReport {
  double max_loss_diff = 0.0;
  double max_grad_diff = 0.0;
  std::size_t draws = 0;
};

/// Compares ns_loss/ns_grad with mc_loss/mc_grad (FIXED_ONE, uniform q, k noise
/// words per example) over `draws` random (model, batch) pairs. With k equal to
/// the vocabulary size the two agree to rounding.
EquivalenceReport compare_ns_with_nce(std::size_t vocab_size, std::size_t k, std::uint64_t seed,
                                      std::size_t draws = 20, std::size_t dim = 4, std::size_t batch = 16);

}  // namespace ncelab
