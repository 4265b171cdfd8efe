#include "ncelab/noise.hpp"

#include <charconv>
#include <cmath>
#include <algorithm>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace ncelab {

std::string NoiseSpec::to_string() const {
  switch (kind) {
    case NoiseKind::UNIFORM: return "uniform";
    case NoiseKind::UNIGRAM: return "unigram";
    case NoiseKind::FLATTENED: return fmt::format("flattened:{}", alpha);
    case NoiseKind::CUSTOM: return "custom";
  }
  return "?";
}

NoiseSpec NoiseSpec::parse(std::string_view text) {
  if (text == "uniform") return {NoiseKind::UNIFORM, 0.0};
  if (text == "unigram") return {NoiseKind::UNIGRAM, 0.0};
  constexpr std::string_view prefix = "flattened:";
  if (text.starts_with(prefix)) {
    const std::string value(text.substr(prefix.size()));
    char* end = nullptr;
    const double alpha = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size())
      throw ParseError(fmt::format("bad flattening exponent in noise spec '{}'", text));
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParseError("flattening exponent out of range (0,1)");
    return {NoiseKind::FLATTENED, alpha};
  }
  throw ParseError(fmt::format("unknown noise spec '{}' (expected uniform, unigram or flattened:<alpha>)", text));
}

NoiseDistribution::NoiseDistribution(NoiseKind kind, double alpha, std::vector<double> probs)
    : kind_(kind), alpha_(alpha), probs_(std::move(probs)), table_(probs_) {}

NoiseDistribution NoiseDistribution::uniform(std::size_t vocab_size) {
  if (vocab_size < 2) throw Error("degenerate vocabulary: fewer than 2 distinct tokens");
  return {NoiseKind::UNIFORM, 0.0, std::vector<double>(vocab_size, 1.0 / static_cast<double>(vocab_size))};
}

namespace {

void require_full_support(const CorpusStats& stats) {
  for (std::size_t w = 0; w < stats.vocab_size(); ++w)
    if (stats.unigram_count(static_cast<WordId>(w)) <= 0)
      throw Error(fmt::format("unsupported word in noise distribution: word {} has zero count", w));
}

}  // namespace

NoiseDistribution NoiseDistribution::unigram(const CorpusStats& stats) {
  require_full_support(stats);
  std::vector<double> p(stats.vocab_size());
  const auto total = static_cast<double>(stats.total_tokens());
  for (std::size_t w = 0; w < p.size(); ++w) p[w] = static_cast<double>(stats.unigram_count(static_cast<WordId>(w))) / total;
  return {NoiseKind::UNIGRAM, 0.0, std::move(p)};
}

NoiseDistribution NoiseDistribution::flattened(const CorpusStats& stats, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("flattening exponent out of range (0,1)");
  require_full_support(stats);
  std::vector<double> p(stats.vocab_size());
  const auto total = static_cast<double>(stats.total_tokens());
  // Work in logs so tiny alpha does not underflow.
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t w = 0; w < p.size(); ++w) {
    p[w] = alpha * std::log(static_cast<double>(stats.unigram_count(static_cast<WordId>(w))) / total);
    m = std::max(m, p[w]);
  }
  double z = 0.0;
  for (double& x : p) {
    x = std::exp(x - m);
    z += x;
  }
  for (double& x : p) x /= z;
  return {NoiseKind::FLATTENED, alpha, std::move(p)};
}

NoiseDistribution NoiseDistribution::from_weights(std::span<const double> weights) {
  if (weights.size() < 2) throw Error("degenerate vocabulary: fewer than 2 distinct tokens");
  double z = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw Error("unsupported word in noise distribution: weight must be positive");
    z += w;
  }
  std::vector<double> p(weights.begin(), weights.end());
  for (double& x : p) x /= z;
  return {NoiseKind::CUSTOM, 0.0, std::move(p)};
}

NoiseDistribution NoiseDistribution::from_spec(const NoiseSpec& spec, const CorpusStats& stats) {
  switch (spec.kind) {
    case NoiseKind::UNIFORM: return uniform(stats.vocab_size());
    case NoiseKind::UNIGRAM: return unigram(stats);
    case NoiseKind::FLATTENED: return flattened(stats, spec.alpha);
    case NoiseKind::CUSTOM: break;
  }
  throw Error("custom noise distributions have no spec form");
}

std::vector<WordId> NoiseDistribution::sample_k(std::size_t k, Rng& rng) const {
  std::vector<WordId> out(k);
  for (auto& w : out) w = sample(rng);
  return out;
}

}  // namespace ncelab
