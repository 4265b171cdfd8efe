#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ncelab/alias_table.hpp"
#include "ncelab/corpus.hpp"
#include "ncelab/rng.hpp"
#include "ncelab/types.hpp"

namespace ncelab {

enum class NoiseKind { UNIFORM, UNIGRAM, FLATTENED, CUSTOM };

/// Parsed form of the CLI noise string: `uniform`, `unigram` or `flattened:<alpha>`.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::UNIGRAM;
  double alpha = 0.0;  // FLATTENED only

  std::string to_string() const;
  static NoiseSpec parse(std::string_view text);
};

/// Categorical noise distribution q over the vocabulary with full support.
class NoiseDistribution {
 public:
  static NoiseDistribution uniform(std::size_t vocab_size);
  /// Throws if any word has a zero count.
  static NoiseDistribution unigram(const CorpusStats& stats);
  /// q(w) ∝ (count(w)/N)^alpha, 0 < alpha < 1.
  static NoiseDistribution flattened(const CorpusStats& stats, double alpha);
  /// Arbitrary strictly positive weights, normalized.
  static NoiseDistribution from_weights(std::span<const double> weights);
  static NoiseDistribution from_spec(const NoiseSpec& spec, const CorpusStats& stats);

  NoiseKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  std::size_t size() const { return probs_.size(); }
  double prob(WordId w) const { return probs_[w]; }
  std::span<const double> probs() const { return probs_; }

  WordId sample(Rng& rng) const { return static_cast<WordId>(table_.sample(rng)); }
  std::vector<WordId> sample_k(std::size_t k, Rng& rng) const;

 private:
  NoiseDistribution(NoiseKind kind, double alpha, std::vector<double> probs);

  NoiseKind kind_;
  double alpha_;
  std::vector<double> probs_;
  AliasTable table_;
};

}  // namespace ncelab
