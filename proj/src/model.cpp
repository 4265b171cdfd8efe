#include "ncelab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ncelab/rng.hpp"

namespace ncelab {

std::string_view to_string(ZMode mode) {
  switch (mode) {
    case ZMode::EXACT: return "exact";
    case ZMode::LEARNED_ZC: return "learned";
    case ZMode::FIXED_ONE: return "fixed";
  }
  return "?";
}

ZMode parse_zmode(std::string_view text) {
  if (text == "exact") return ZMode::EXACT;
  if (text == "learned") return ZMode::LEARNED_ZC;
  if (text == "fixed") return ZMode::FIXED_ONE;
  throw ParseError(fmt::format("unknown z-mode '{}' (expected exact, learned or fixed)", text));
}

ParameterBlocks::ParameterBlocks(std::size_t vocab_size, std::size_t dim)
    : target_emb(vocab_size, dim),
      context_emb(vocab_size + 1, dim),
      bias(vocab_size, 0.0),
      log_zc(vocab_size + 1, 0.0) {}

std::size_t ParameterBlocks::size() const {
  return target_emb.values.size() + context_emb.values.size() + bias.size() + log_zc.size();
}

double& ParameterBlocks::coord(std::size_t i) {
  if (i < target_emb.values.size()) return target_emb.values[i];
  i -= target_emb.values.size();
  if (i < context_emb.values.size()) return context_emb.values[i];
  i -= context_emb.values.size();
  if (i < bias.size()) return bias[i];
  i -= bias.size();
  return log_zc.at(i);
}

double ParameterBlocks::coord(std::size_t i) const { return const_cast<ParameterBlocks&>(*this).coord(i); }

std::string_view ParameterBlocks::block_of(std::size_t i) const {
  if (i < target_emb.values.size()) return kBlockNames[0];
  i -= target_emb.values.size();
  if (i < context_emb.values.size()) return kBlockNames[1];
  i -= context_emb.values.size();
  if (i < bias.size()) return kBlockNames[2];
  return kBlockNames[3];
}

bool ParameterBlocks::all_finite() const {
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  return finite(target_emb.values) && finite(context_emb.values) && finite(bias) && finite(log_zc);
}

void ParameterBlocks::set_zero() {
  std::fill(target_emb.values.begin(), target_emb.values.end(), 0.0);
  std::fill(context_emb.values.begin(), context_emb.values.end(), 0.0);
  std::fill(bias.begin(), bias.end(), 0.0);
  std::fill(log_zc.begin(), log_zc.end(), 0.0);
}

namespace {

void axpy_vec(double scale, const std::vector<double>& x, std::vector<double>& y) {
  if (x.size() != y.size()) throw Error("parameter shape mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += scale * x[i];
}

double dot_vec(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error("parameter shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double dot_row(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

void ParameterBlocks::axpy(double scale, const ParameterBlocks& other) {
  axpy_vec(scale, other.target_emb.values, target_emb.values);
  axpy_vec(scale, other.context_emb.values, context_emb.values);
  axpy_vec(scale, other.bias, bias);
  axpy_vec(scale, other.log_zc, log_zc);
}

double dot(const ParameterBlocks& a, const ParameterBlocks& b) {
  return dot_vec(a.target_emb.values, b.target_emb.values) + dot_vec(a.context_emb.values, b.context_emb.values) +
         dot_vec(a.bias, b.bias) + dot_vec(a.log_zc, b.log_zc);
}

double norm(const ParameterBlocks& a) { return std::sqrt(dot(a, a)); }

double cosine_similarity(const ParameterBlocks& a, const ParameterBlocks& b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

ModelParams ModelParams::random(std::size_t vocab_size, std::size_t dim, ZMode mode, std::uint64_t seed,
                                double scale) {
  ModelParams p(vocab_size, dim, mode);
  Rng rng(derive_seed(seed, streams::kInit, 0));
  for (double& x : p.target_emb.values) x = scale * (2.0 * rng.uniform() - 1.0);
  for (double& x : p.context_emb.values) x = scale * (2.0 * rng.uniform() - 1.0);
  return p;
}

double score(const ModelParams& p, WordId w, ContextId c) {
  return dot_row(p.target_emb.row(w), p.context_emb.row(c)) + p.bias[w];
}

double unnorm(const ModelParams& p, WordId w, ContextId c) { return std::exp(score(p, w, c)); }

double log_unnorm_adjusted(const ModelParams& p, WordId w, ContextId c) {
  const double s = score(p, w, c);
  return p.z_mode == ZMode::LEARNED_ZC ? s - p.log_zc[c] : s;
}

double unnorm_adjusted(const ModelParams& p, WordId w, ContextId c) {
  return std::exp(log_unnorm_adjusted(p, w, c));
}

std::vector<double> scores(const ModelParams& p, ContextId c) {
  std::vector<double> s(p.vocab_size());
  for (std::size_t w = 0; w < s.size(); ++w) s[w] = score(p, static_cast<WordId>(w), c);
  return s;
}

double log_sum_exp(std::span<const double> values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  return m + std::log(sum);
}

double log_partition(const ModelParams& p, ContextId c) { return log_sum_exp(scores(p, c)); }

double partition(const ModelParams& p, ContextId c) { return std::exp(log_partition(p, c)); }

double softmax_prob(const ModelParams& p, WordId w, ContextId c) {
  const auto s = scores(p, c);
  return std::exp(s[w] - log_sum_exp(s));
}

std::vector<double> softmax_row(const ModelParams& p, ContextId c) {
  auto s = scores(p, c);
  const double lz = log_sum_exp(s);
  for (double& x : s) x = std::exp(x - lz);
  return s;
}

double log_likelihood(const ModelParams& p, std::span<const Pair> pairs) {
  double total = 0.0;
  for (const Pair& pr : pairs) {
    const auto s = scores(p, pr.context);
    total += s[pr.word] - log_sum_exp(s);
  }
  return total;
}

double accumulate_log_likelihood(const ModelParams& p, std::span<const Pair> pairs, Gradient& grad) {
  const std::size_t v = p.vocab_size();
  const std::size_t d = p.dim();
  std::vector<double> prob(v);
  double total = 0.0;
  for (const Pair& pr : pairs) {
    const auto ctx = p.context_emb.row(pr.context);
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t w = 0; w < v; ++w) {
      prob[w] = dot_row(p.target_emb.row(w), ctx) + p.bias[w];
      m = std::max(m, prob[w]);
    }
    const double s_true = prob[pr.word];
    double z = 0.0;
    for (double& x : prob) {
      x = std::exp(x - m);
      z += x;
    }
    total += s_true - m - std::log(z);
    auto gctx = grad.context_emb.row(pr.context);
    for (std::size_t w = 0; w < v; ++w) {
      const double g = (w == pr.word ? 1.0 : 0.0) - prob[w] / z;
      const auto e = p.target_emb.row(w);
      auto ge = grad.target_emb.row(w);
      for (std::size_t j = 0; j < d; ++j) {
        ge[j] += g * ctx[j];
        gctx[j] += g * e[j];
      }
      grad.bias[w] += g;
    }
  }
  return total;
}

Gradient grad_log_likelihood(const ModelParams& p, std::span<const Pair> pairs) {
  Gradient g(p.vocab_size(), p.dim());
  accumulate_log_likelihood(p, pairs, g);
  return g;
}

NormalizationStats normalization_stats(const ModelParams& p, std::span<const ContextId> contexts) {
  if (contexts.empty()) throw Error("normalization_stats needs at least one context");
  std::vector<double> lz;
  lz.reserve(contexts.size());
  for (ContextId c : contexts) lz.push_back(log_partition(p, c));
  std::sort(lz.begin(), lz.end());
  const std::size_t n = lz.size();
  const double median = n % 2 == 1 ? lz[n / 2] : 0.5 * (lz[n / 2 - 1] + lz[n / 2]);
  return {lz.front(), median, lz.back()};
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(kl, 0.0);
}

}  // namespace ncelab
