#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ncelab/model.hpp"

namespace ncelab {

using LossFn = std::function<double(const ModelParams&)>;

/// Central differences (f(θ+h e_i) - f(θ-h e_i)) / 2h for every coordinate.
Gradient finite_difference_gradient(const ModelParams& params, const LossFn& loss, double step = 1e-5);

/// |a - n| / max(|a|, |n|, floor). The floor keeps coordinates whose true
/// derivative is ~0 from reporting roundoff as relative error.
double relative_error(double analytic, double numeric, double floor = 1e-3);

struct BlockError {
  std::string_view block;
  double worst = 0.0;
  std::size_t worst_coord = 0;  // flat coordinate index
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::string name;
  std::array<BlockError, 4> blocks;

  double max_error() const;
  const BlockError& worst_block() const;
};

GradCheckReport compare_gradients(std::string name, const Gradient& analytic, const Gradient& numeric);

/// The objectives the CLI and acceptance suite can check.
enum class GradCheckTarget { MLE, NCE_MC_LEARNED, NCE_MC_FIXED, NCE_EXACT, NS };

std::string_view to_string(GradCheckTarget t);

struct GradCheckSetup {
  std::size_t vocab_size = 12;
  std::size_t dim = 4;
  std::size_t k = 3;
  std::size_t n_pairs = 24;
  double step = 1e-5;
  /// Negative-control hook: perturb one analytic coordinate by this amount.
  double corrupt = 0.0;
};

/// Builds a random model and batch from `seed`, then compares the analytic
/// gradient of `target` with central differences of its objective.
GradCheckReport run_gradcheck(GradCheckTarget target, std::uint64_t seed, const GradCheckSetup& setup = {});

}  // namespace ncelab
