#include "ncelab/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ncelab/negsampling.hpp"
#include "ncelab/nce.hpp"
#include "ncelab/rng.hpp"

namespace ncelab {

Gradient finite_difference_gradient(const ModelParams& params, const LossFn& loss, double step) {
  Gradient g(params.vocab_size(), params.dim());
  ModelParams probe = params;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe.coord(i);
    probe.coord(i) = orig + step;
    const double up = loss(probe);
    probe.coord(i) = orig - step;
    const double down = loss(probe);
    probe.coord(i) = orig;
    g.coord(i) = (up - down) / (2.0 * step);
  }
  return g;
}

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

double GradCheckReport::max_error() const { return worst_block().worst; }

const BlockError& GradCheckReport::worst_block() const {
  return *std::max_element(blocks.begin(), blocks.end(),
                           [](const BlockError& a, const BlockError& b) { return a.worst < b.worst; });
}

GradCheckReport compare_gradients(std::string name, const Gradient& analytic, const Gradient& numeric) {
  GradCheckReport report;
  report.name = std::move(name);
  for (std::size_t b = 0; b < 4; ++b) report.blocks[b].block = ParameterBlocks::kBlockNames[b];
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const auto block = analytic.block_of(i);
    auto& be = *std::find_if(report.blocks.begin(), report.blocks.end(),
                             [&](const BlockError& e) { return e.block == block; });
    const double err = relative_error(analytic.coord(i), numeric.coord(i));
    if (err >= be.worst) {
      be.worst = err;
      be.worst_coord = i;
      be.analytic = analytic.coord(i);
      be.numeric = numeric.coord(i);
    }
  }
  return report;
}

std::string_view to_string(GradCheckTarget t) {
  switch (t) {
    case GradCheckTarget::MLE: return "mle";
    case GradCheckTarget::NCE_MC_LEARNED: return "nce-mc-learned";
    case GradCheckTarget::NCE_MC_FIXED: return "nce-mc-fixed";
    case GradCheckTarget::NCE_EXACT: return "nce-exact";
    case GradCheckTarget::NS: return "ns";
  }
  return "?";
}

GradCheckReport run_gradcheck(GradCheckTarget target, std::uint64_t seed, const GradCheckSetup& setup) {
  const std::size_t v = setup.vocab_size;
  const ZMode mode = target == GradCheckTarget::NCE_MC_FIXED ? ZMode::FIXED_ONE
                     : target == GradCheckTarget::MLE || target == GradCheckTarget::NS ? ZMode::EXACT
                                                                                       : ZMode::LEARNED_ZC;
  ModelParams params = ModelParams::random(v, setup.dim, mode, seed, 0.5);
  Rng rng(derive_seed(seed, streams::kData, 7));
  for (double& b : params.bias) b = 2.0 * rng.uniform() - 1.0;
  if (mode == ZMode::LEARNED_ZC)
    for (double& z : params.log_zc) z = 2.0 * rng.uniform() - 1.0;

  std::vector<Pair> pairs(setup.n_pairs);
  for (auto& p : pairs) p = {static_cast<ContextId>(rng.below(v + 1)), static_cast<WordId>(rng.below(v))};
  std::vector<double> weights(v);
  for (double& w : weights) w = 0.2 + rng.uniform();
  const auto q = NoiseDistribution::from_weights(weights);
  const auto examples = gen_proxy(pairs, q, setup.k, seed);
  const ZMode nce_mode = mode == ZMode::EXACT ? ZMode::LEARNED_ZC : mode;
  const NceConfig cfg(setup.k, nce_mode, q);
  const CorpusStats stats(v, pairs);

  LossFn loss;
  Gradient analytic;
  switch (target) {
    case GradCheckTarget::MLE:
      loss = [&](const ModelParams& p) { return log_likelihood(p, pairs); };
      analytic = grad_log_likelihood(params, pairs);
      break;
    case GradCheckTarget::NCE_MC_LEARNED:
    case GradCheckTarget::NCE_MC_FIXED:
      loss = [&](const ModelParams& p) { return mc_loss(p, examples, cfg); };
      analytic = mc_grad(params, examples, cfg);
      break;
    case GradCheckTarget::NCE_EXACT:
      loss = [&](const ModelParams& p) { return exact_loss(p, stats, cfg); };
      analytic = exact_grad_analysis(params, stats, cfg);
      break;
    case GradCheckTarget::NS:
      loss = [&](const ModelParams& p) { return ns_loss(p, examples); };
      analytic = ns_grad(params, examples);
      break;
  }
  if (setup.corrupt != 0.0) analytic.bias[0] += setup.corrupt;
  const Gradient numeric = finite_difference_gradient(params, loss, setup.step);
  return compare_gradients(std::string(to_string(target)), analytic, numeric);
}

}  // namespace ncelab
