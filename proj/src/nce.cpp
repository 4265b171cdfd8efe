#include "ncelab/nce.hpp"

#include <cmath>

#include <fmt/format.h>

#include "ncelab/alias_table.hpp"
#include "ncelab/rng.hpp"

namespace ncelab {

NceConfig::NceConfig(std::size_t k, ZMode z_mode, NoiseDistribution q)
    : k_(k), z_mode_(z_mode), q_(std::move(q)), log_kq_(q_.size()) {
  if (k_ < 1) throw Error("NCE needs k >= 1");
  if (z_mode_ == ZMode::EXACT) throw Error("NCE needs a learned or fixed normalizer, not exact");
  for (std::size_t w = 0; w < log_kq_.size(); ++w)
    log_kq_[w] = std::log(static_cast<double>(k_) * q_.prob(static_cast<WordId>(w)));
}

double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double mixture_joint(const CorpusStats& stats, const NoiseDistribution& q, int d, WordId w, ContextId c,
                     std::size_t k) {
  const double kk = static_cast<double>(k);
  const double p_emp = empirical_conditional(stats, c, w);
  if (d == 0) return kk / (1.0 + kk) * q.prob(w);
  if (d == 1) return p_emp / (1.0 + kk);
  throw Error("mixture label must be 0 or 1");
}

double posterior_true_empirical(const CorpusStats& stats, WordId w, ContextId c, std::size_t k,
                                const NoiseDistribution& q) {
  const double p_emp = empirical_conditional(stats, c, w);
  return p_emp / (p_emp + static_cast<double>(k) * q.prob(w));
}

namespace {

double log_u(const ModelParams& params, WordId w, ContextId c, ZMode mode) {
  const auto e = params.target_emb.row(w);
  const auto h = params.context_emb.row(c);
  double s = params.bias[w];
  for (std::size_t j = 0; j < e.size(); ++j) s += e[j] * h[j];
  return mode == ZMode::LEARNED_ZC ? s - params.log_zc[c] : s;
}

// Adds coef * ∂ log u'(w,c) to grad.
void add_dlogu(const ModelParams& params, WordId w, ContextId c, ZMode mode, double coef, Gradient& grad) {
  const auto e = params.target_emb.row(w);
  const auto h = params.context_emb.row(c);
  auto ge = grad.target_emb.row(w);
  auto gh = grad.context_emb.row(c);
  for (std::size_t j = 0; j < e.size(); ++j) {
    ge[j] += coef * h[j];
    gh[j] += coef * e[j];
  }
  grad.bias[w] += coef;
  if (mode == ZMode::LEARNED_ZC) grad.log_zc[c] -= coef;
}

void check_k(const ProxyExample& ex, const NceConfig& cfg) {
  if (ex.w_noise.size() != cfg.k())
    throw Error(fmt::format("k mismatch: example has {} noise words, config has k={}", ex.w_noise.size(), cfg.k()));
}

}  // namespace

double posterior_logit(const ModelParams& params, WordId w, ContextId c, const NceConfig& cfg) {
  return log_u(params, w, c, cfg.z_mode()) - cfg.log_kq(w);
}

double posterior_true_model(const ModelParams& params, WordId w, ContextId c, const NceConfig& cfg) {
  return sigmoid(posterior_logit(params, w, c, cfg));
}

double posterior_noise_model(const ModelParams& params, WordId w, ContextId c, const NceConfig& cfg) {
  return 1.0 - posterior_true_model(params, w, c, cfg);
}

double mc_loss(const ModelParams& params, std::span<const ProxyExample> examples, const NceConfig& cfg) {
  double total = 0.0;
  for (const auto& ex : examples) {
    check_k(ex, cfg);
    total += log_sigmoid(posterior_logit(params, ex.w_true, ex.context, cfg));
    for (WordId wn : ex.w_noise) total += log_sigmoid(-posterior_logit(params, wn, ex.context, cfg));
  }
  return total;
}

double accumulate_mc(const ModelParams& params, std::span<const ProxyExample> examples, const NceConfig& cfg,
                     Gradient& grad) {
  const ZMode mode = cfg.z_mode();
  double total = 0.0;
  for (const auto& ex : examples) {
    check_k(ex, cfg);
    const double x = log_u(params, ex.w_true, ex.context, mode) - cfg.log_kq(ex.w_true);
    total += log_sigmoid(x);
    add_dlogu(params, ex.w_true, ex.context, mode, sigmoid(-x), grad);
    for (WordId wn : ex.w_noise) {
      const double xn = log_u(params, wn, ex.context, mode) - cfg.log_kq(wn);
      total += log_sigmoid(-xn);
      add_dlogu(params, wn, ex.context, mode, -sigmoid(xn), grad);
    }
  }
  return total;
}

Gradient mc_grad(const ModelParams& params, std::span<const ProxyExample> examples, const NceConfig& cfg) {
  Gradient g(params.vocab_size(), params.dim());
  accumulate_mc(params, examples, cfg, g);
  return g;
}

namespace {

// Σ_w̄ q(w̄) log p(D=0 | c, w̄)
double expected_noise_term(const ModelParams& params, ContextId c, const NceConfig& cfg) {
  double s = 0.0;
  for (std::size_t w = 0; w < params.vocab_size(); ++w) {
    const auto wid = static_cast<WordId>(w);
    s += cfg.q().prob(wid) * log_sigmoid(-posterior_logit(params, wid, c, cfg));
  }
  return s;
}

}  // namespace

double exact_loss(const ModelParams& params, std::span<const Pair> pairs, const NceConfig& cfg) {
  if (pairs.empty()) throw Error("exact_loss needs at least one pair");
  const double k = static_cast<double>(cfg.k());
  double total = 0.0;
  for (const Pair& p : pairs)
    total += log_sigmoid(posterior_logit(params, p.word, p.context, cfg)) + k * expected_noise_term(params, p.context, cfg);
  return total;
}

double exact_loss(const ModelParams& params, const CorpusStats& stats, const NceConfig& cfg) {
  const double k = static_cast<double>(cfg.k());
  double total = 0.0;
  for (ContextId c : stats.seen_contexts()) {
    const auto n_c = static_cast<double>(stats.context_count(c));
    double true_term = 0.0;
    for (std::size_t w = 0; w < stats.vocab_size(); ++w) {
      const auto count = stats.bigram_count(c, static_cast<WordId>(w));
      if (count > 0)
        true_term += static_cast<double>(count) * log_sigmoid(posterior_logit(params, static_cast<WordId>(w), c, cfg));
    }
    total += true_term + n_c * k * expected_noise_term(params, c, cfg);
  }
  return total;
}

Gradient exact_grad_analysis(const ModelParams& params, const CorpusStats& stats, const NceConfig& cfg) {
  const ZMode mode = cfg.z_mode();
  const double k = static_cast<double>(cfg.k());
  Gradient g(params.vocab_size(), params.dim());
  for (ContextId c : stats.seen_contexts()) {
    const auto n_c = static_cast<double>(stats.context_count(c));
    for (std::size_t wi = 0; wi < stats.vocab_size(); ++wi) {
      const auto w = static_cast<WordId>(wi);
      const double u = std::exp(log_u(params, w, c, mode));
      const double kq = k * cfg.q().prob(w);
      const double weight = kq / (u + kq);
      const double p_emp = empirical_conditional(stats, c, w);
      add_dlogu(params, w, c, mode, n_c * weight * (p_emp - u), g);
    }
  }
  return g;
}

std::vector<ProxyExample> gen_proxy(std::span<const Pair> pairs, const NoiseDistribution& q, std::size_t k,
                                    std::uint64_t seed) {
  if (k < 1) throw Error("proxy generation needs k >= 1");
  Rng rng(derive_seed(seed, streams::kNoise, 0));
  std::vector<ProxyExample> out;
  out.reserve(pairs.size());
  for (const Pair& p : pairs) out.push_back({p.context, p.word, q.sample_k(k, rng)});
  return out;
}

std::vector<ProxyExample> gen_proxy_sampled(const CorpusStats& stats, const NoiseDistribution& q, std::size_t k,
                                            std::size_t n, std::uint64_t seed) {
  if (k < 1) throw Error("proxy generation needs k >= 1");
  const std::size_t nc = stats.num_contexts();
  std::vector<double> marginal(nc);
  for (std::size_t c = 0; c < nc; ++c) marginal[c] = static_cast<double>(stats.context_count(static_cast<ContextId>(c)));
  AliasTable contexts(marginal);
  std::vector<AliasTable> rows(nc);
  std::vector<double> row(stats.vocab_size());
  for (std::size_t c = 0; c < nc; ++c) {
    if (stats.context_count(static_cast<ContextId>(c)) == 0) continue;
    for (std::size_t w = 0; w < row.size(); ++w)
      row[w] = static_cast<double>(stats.bigram_count(static_cast<ContextId>(c), static_cast<WordId>(w)));
    rows[c] = AliasTable(row);
  }
  Rng rng(derive_seed(seed, streams::kNoise, 1));
  std::vector<ProxyExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<ContextId>(contexts.sample(rng));
    const auto w = static_cast<WordId>(rows[c].sample(rng));
    out.push_back({c, w, q.sample_k(k, rng)});
  }
  return out;
}

}  // namespace ncelab
