#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ncelab/corpus.hpp"
#include "ncelab/model.hpp"
#include "ncelab/noise.hpp"

namespace ncelab {

/// One record of the two-class proxy corpus: a context, its observed word
/// (label D=1) and k words drawn from q (label D=0).
struct ProxyExample {
  ContextId context;
  WordId w_true;
  std::vector<WordId> w_noise;
};

/// k, normalizer treatment and noise distribution for the NCE objectives.
/// Caches log(k q(w)) for the posterior logits.
class NceConfig {
 public:
  NceConfig(std::size_t k, ZMode z_mode, NoiseDistribution q);

  std::size_t k() const { return k_; }
  ZMode z_mode() const { return z_mode_; }
  const NoiseDistribution& q() const { return q_; }
  double log_kq(WordId w) const { return log_kq_[w]; }

 private:
  std::size_t k_;
  ZMode z_mode_;
  NoiseDistribution q_;
  std::vector<double> log_kq_;
};

/// Stable log σ(x) = -log(1 + e^{-x}).
double log_sigmoid(double x);
double sigmoid(double x);

/// Joint p(d, w | c) of the two-class mixture built from the empirical distribution.
double mixture_joint(const CorpusStats& stats, const NoiseDistribution& q, int d, WordId w, ContextId c,
                     std::size_t k);

/// p(D=1 | c, w) = p̃(w|c) / (p̃(w|c) + k q(w)).
double posterior_true_empirical(const CorpusStats& stats, WordId w, ContextId c, std::size_t k,
                                const NoiseDistribution& q);

/// Logit of the model-form posterior: log u' - log(k q(w)), with u' the
/// normalizer-adjusted unnormalized score under LEARNED_ZC and u itself otherwise.
double posterior_logit(const ModelParams& params, WordId w, ContextId c, const NceConfig& cfg);
/// p(D=1 | c, w) = u' / (u' + k q(w))
double posterior_true_model(const ModelParams& params, WordId w, ContextId c, const NceConfig& cfg);
/// p(D=0 | c, w), the complement of posterior_true_model.
double posterior_noise_model(const ModelParams& params, WordId w, ContextId c, const NceConfig& cfg);

/// Monte Carlo NCE objective: Σ [log p(D=1|c,w) + Σ_i log p(D=0|c,w̄_i)].
/// Throws "k mismatch" when an example does not carry exactly cfg.k() noise words.
double mc_loss(const ModelParams& params, std::span<const ProxyExample> examples, const NceConfig& cfg);
Gradient mc_grad(const ModelParams& params, std::span<const ProxyExample> examples, const NceConfig& cfg);
/// Adds the mc_loss gradient to `grad`, returns mc_loss. log_zc is only touched under LEARNED_ZC.
double accumulate_mc(const ModelParams& params, std::span<const ProxyExample> examples, const NceConfig& cfg,
                     Gradient& grad);

/// Exact NCE objective with the noise expectation summed over the whole vocabulary:
/// Σ_pairs [log p(D=1|c,w) + k Σ_w̄ q(w̄) log p(D=0|c,w̄)].
double exact_loss(const ModelParams& params, std::span<const Pair> pairs, const NceConfig& cfg);
/// Same objective for the pair multiset summarized by `stats`.
double exact_loss(const ModelParams& params, const CorpusStats& stats, const NceConfig& cfg);

/// Gradient of the exact objective in the asymptotic-analysis form
///   Σ_c n_c Σ_w [k q(w) / (u'(w,c) + k q(w))] (p̃(w|c) - u'(w,c)) ∂ log u'(w,c)
/// where n_c is the count of context c. Under FIXED_ONE u' = u.
Gradient exact_grad_analysis(const ModelParams& params, const CorpusStats& stats, const NceConfig& cfg);

/// Epoch mode: one example per pair, in order, noise i.i.d. from q.
std::vector<ProxyExample> gen_proxy(std::span<const Pair> pairs, const NoiseDistribution& q, std::size_t k,
                                    std::uint64_t seed);

/// Sampling mode: n examples with c ~ p̃(c), w ~ p̃(w|c), noise i.i.d. from q.
std::vector<ProxyExample> gen_proxy_sampled(const CorpusStats& stats, const NoiseDistribution& q, std::size_t k,
                                            std::size_t n, std::uint64_t seed);

}  // namespace ncelab
