#include "ncelab/negsampling.hpp"

#include <algorithm>
#include <cmath>

#include "ncelab/rng.hpp"

namespace ncelab {

double ns_posterior_true(const ModelParams& params, WordId w, ContextId c) { return sigmoid(score(params, w, c)); }

double ns_loss(const ModelParams& params, std::span<const ProxyExample> examples) {
  if (examples.empty()) throw Error("ns_loss needs at least one example");
  double total = 0.0;
  for (const auto& ex : examples) {
    total += log_sigmoid(score(params, ex.w_true, ex.context));
    for (WordId wn : ex.w_noise) total += log_sigmoid(-score(params, wn, ex.context));
  }
  return total;
}

namespace {

void add_dscore(const ModelParams& params, WordId w, ContextId c, double coef, Gradient& grad) {
  const auto e = params.target_emb.row(w);
  const auto h = params.context_emb.row(c);
  auto ge = grad.target_emb.row(w);
  auto gh = grad.context_emb.row(c);
  for (std::size_t j = 0; j < e.size(); ++j) {
    ge[j] += coef * h[j];
    gh[j] += coef * e[j];
  }
  grad.bias[w] += coef;
}

}  // namespace

double accumulate_ns(const ModelParams& params, std::span<const ProxyExample> examples, Gradient& grad) {
  if (examples.empty()) throw Error("ns_grad needs at least one example");
  double total = 0.0;
  for (const auto& ex : examples) {
    const double s = score(params, ex.w_true, ex.context);
    total += log_sigmoid(s);
    add_dscore(params, ex.w_true, ex.context, sigmoid(-s), grad);
    for (WordId wn : ex.w_noise) {
      const double sn = score(params, wn, ex.context);
      total += log_sigmoid(-sn);
      add_dscore(params, wn, ex.context, -sigmoid(sn), grad);
    }
  }
  return total;
}

Gradient ns_grad(const ModelParams& params, std::span<const ProxyExample> examples) {
  Gradient g(params.vocab_size(), params.dim());
  accumulate_ns(params, examples, g);
  return g;
}

}  // namespace ncelab

namespace ncelab {

EquivalenceReport compare_ns_with_nce(std::size_t vocab_size, std::size_t k, std::uint64_t seed,
                                      std::size_t draws, std::size_t dim, std::size_t batch) {
  const auto q = NoiseDistribution::uniform(vocab_size);
  const NceConfig cfg(k, ZMode::FIXED_ONE, q);
  EquivalenceReport report;
  report.draws = draws;
  for (std::size_t d = 0; d < draws; ++d) {
    const std::uint64_t draw_seed = derive_seed(seed, streams::kData, 100 + d);
    ModelParams params = ModelParams::random(vocab_size, dim, ZMode::FIXED_ONE, draw_seed, 0.5);
    Rng rng(draw_seed);
    for (double& b : params.bias) b = 2.0 * rng.uniform() - 1.0;
    std::vector<Pair> pairs(batch);
    for (auto& p : pairs)
      p = {static_cast<ContextId>(rng.below(vocab_size + 1)), static_cast<WordId>(rng.below(vocab_size))};
    const auto examples = gen_proxy(pairs, q, k, draw_seed);

    report.max_loss_diff = std::max(report.max_loss_diff, std::abs(ns_loss(params, examples) - mc_loss(params, examples, cfg)));
    const Gradient gn = ns_grad(params, examples);
    const Gradient gm = mc_grad(params, examples, cfg);
    for (std::size_t i = 0; i < gn.size(); ++i)
      report.max_grad_diff = std::max(report.max_grad_diff, std::abs(gn.coord(i) - gm.coord(i)));
  }
  return report;
}

}  // namespace ncelab
