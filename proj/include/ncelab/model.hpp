#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "ncelab/types.hpp"

namespace ncelab {

/// How the per-context normalizer is treated.
///   EXACT      - softmax training; log_zc unused.
///   LEARNED_ZC - one free log-normalizer per context (classic NCE).
///   FIXED_ONE  - z_c = 1 for every context; log_zc stays 0.
enum class ZMode { EXACT, LEARNED_ZC, FIXED_ONE };

std::string_view to_string(ZMode mode);
/// Accepts `exact`, `learned`, `fixed`.
ZMode parse_zmode(std::string_view text);

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

/// The four parameter tensors of the log-bilinear model. Also used as the
/// gradient carrier, which has exactly the same shape.
struct ParameterBlocks {
  Matrix target_emb;   // |V| x d
  Matrix context_emb;  // (|V|+1) x d; last row is `<s>`
  std::vector<double> bias;    // |V|
  std::vector<double> log_zc;  // |V|+1

  ParameterBlocks() = default;
  ParameterBlocks(std::size_t vocab_size, std::size_t dim);

  std::size_t vocab_size() const { return bias.size(); }
  std::size_t dim() const { return target_emb.cols; }
  std::size_t num_contexts() const { return log_zc.size(); }

  /// Total number of scalar coordinates.
  std::size_t size() const;
  /// Flat coordinate access in block order target_emb, context_emb, bias, log_zc.
  double& coord(std::size_t i);
  double coord(std::size_t i) const;
  /// Name of the block holding flat coordinate i.
  std::string_view block_of(std::size_t i) const;

  bool all_finite() const;
  void set_zero();
  /// this += scale * other
  void axpy(double scale, const ParameterBlocks& other);

  static constexpr std::array<std::string_view, 4> kBlockNames = {"target_emb", "context_emb", "bias",
                                                                   "log_zc"};
};

using Gradient = ParameterBlocks;

double dot(const ParameterBlocks& a, const ParameterBlocks& b);
double norm(const ParameterBlocks& a);
double cosine_similarity(const ParameterBlocks& a, const ParameterBlocks& b);

struct ModelParams : ParameterBlocks {
  ZMode z_mode = ZMode::EXACT;

  ModelParams() = default;
  ModelParams(std::size_t vocab_size, std::size_t dim, ZMode mode)
      : ParameterBlocks(vocab_size, dim), z_mode(mode) {}

  /// Embeddings i.i.d. uniform in [-0.1, 0.1]; bias and log_zc zero.
  static ModelParams random(std::size_t vocab_size, std::size_t dim, ZMode mode, std::uint64_t seed,
                            double scale = 0.1);
};

/// s(w,c) = target_emb[w] . context_emb[c] + bias[w]
double score(const ModelParams& p, WordId w, ContextId c);
/// exp(s)
double unnorm(const ModelParams& p, WordId w, ContextId c);
/// s - log_zc[c] under LEARNED_ZC, s otherwise.
double log_unnorm_adjusted(const ModelParams& p, WordId w, ContextId c);
double unnorm_adjusted(const ModelParams& p, WordId w, ContextId c);

/// Scores of every word in context c.
std::vector<double> scores(const ModelParams& p, ContextId c);

/// Max-shifted log-sum-exp of the given values.
double log_sum_exp(std::span<const double> values);

/// log Z(c) over the full vocabulary.
double log_partition(const ModelParams& p, ContextId c);
double partition(const ModelParams& p, ContextId c);
double softmax_prob(const ModelParams& p, WordId w, ContextId c);
/// Normalized model distribution p(.|c).
std::vector<double> softmax_row(const ModelParams& p, ContextId c);

/// Σ log p(w|c)
double log_likelihood(const ModelParams& p, std::span<const Pair> pairs);
/// Exact gradient of log_likelihood.
Gradient grad_log_likelihood(const ModelParams& p, std::span<const Pair> pairs);
/// Adds the log-likelihood gradient to `grad` and returns the log-likelihood.
double accumulate_log_likelihood(const ModelParams& p, std::span<const Pair> pairs, Gradient& grad);

struct NormalizationStats {
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
};

/// Order statistics of log Z(c) over `contexts` (nonempty). The median of an
/// even-sized set is the mean of the two central values.
NormalizationStats normalization_stats(const ModelParams& p, std::span<const ContextId> contexts);

/// KL(p || q) in nats; +inf if q has a zero where p does not.
double kl_divergence(std::span<const double> p, std::span<const double> q);

}  // namespace ncelab
