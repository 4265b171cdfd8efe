#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ncelab/types.hpp"

namespace ncelab {

inline constexpr std::string_view kBosToken = "<s>";

/// Dense bidirectional token <-> id map. Ids are assigned in first-occurrence order.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// Takes an already-ordered list of distinct tokens; throws on duplicates,
  /// the reserved `<s>` token, or fewer than two entries.
  explicit Vocabulary(std::vector<std::string> words);

  std::size_t size() const { return words_.size(); }
  const std::string& word_of(WordId id) const { return words_.at(id); }
  bool contains(std::string_view token) const;
  /// Throws Error for unknown tokens.
  WordId lookup(std::string_view token) const;
  const std::vector<std::string>& words() const { return words_; }

  /// Token used when printing a context id; the bos context prints as `<s>`.
  std::string context_token(ContextId c) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> index_;
};

Vocabulary build_vocab(std::span<const std::string> tokens);

/// Exact integer bigram statistics. Contexts are 0..|V| (|V| is `<s>`),
/// predicted words are 0..|V|-1.
class CorpusStats {
 public:
  CorpusStats(std::size_t vocab_size, std::span<const Pair> pairs);

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t num_contexts() const { return vocab_size_ + 1; }
  std::int64_t bigram_count(ContextId c, WordId w) const { return bigrams_[c * vocab_size_ + w]; }
  std::int64_t context_count(ContextId c) const { return context_counts_[c]; }
  std::int64_t unigram_count(WordId w) const { return unigram_counts_[w]; }
  std::int64_t total_tokens() const { return total_; }
  /// Contexts with a positive count, ascending.
  std::vector<ContextId> seen_contexts() const;

 private:
  std::size_t vocab_size_;
  std::vector<std::int64_t> bigrams_;
  std::vector<std::int64_t> context_counts_;
  std::vector<std::int64_t> unigram_counts_;
  std::int64_t total_ = 0;
};

/// Whitespace tokenization; no case folding.
std::vector<std::string> tokenize(std::string_view text);

/// Maps a token stream to (previous token, token) pairs; the first token gets the `<s>` context.
std::vector<Pair> to_pairs(std::span<const std::string> tokens, const Vocabulary& vocab);

CorpusStats extract_stats(std::span<const std::string> tokens, const Vocabulary& vocab);

/// p̃(w|c); throws for a context never observed.
double empirical_conditional(const CorpusStats& stats, ContextId c, WordId w);
/// p̃(c); 0 for unseen contexts.
double empirical_context_marginal(const CorpusStats& stats, ContextId c);

/// Known generating distribution for synthetic experiments. Contexts 0..|V|-1.
struct GroundTruthTable {
  std::vector<double> cond;  // row-major |V|x|V|, row c = p*(.|c)
  std::vector<double> context_marginal;
  std::vector<std::string> words;

  std::size_t vocab_size() const { return context_marginal.size(); }
  double p(ContextId c, WordId w) const { return cond[c * vocab_size() + w]; }
  std::span<const double> row(ContextId c) const {
    return {cond.data() + c * vocab_size(), vocab_size()};
  }
  /// Throws Error if any row or the marginal is not a distribution to 1e-12.
  void validate() const;
};

struct ZipfTruthOptions {
  std::size_t vocab_size = 16;
  double exponent = 1.2;
  /// Half-width of the uniform jitter added to each word's shared rank before
  /// the per-context sort. Large values give independent random permutations.
  double rank_jitter = 6.0;
  std::uint64_t seed = 1;
};

/// Rows are Zipf(exponent) over a per-context permutation of the vocabulary;
/// the marginal is the stationary distribution of the resulting Markov chain.
GroundTruthTable make_zipf_truth(const ZipfTruthOptions& opts);

/// n i.i.d. pairs, c ~ context_marginal, w ~ cond(.|c).
std::vector<Pair> generate_synthetic_corpus(const GroundTruthTable& truth, std::size_t n_tokens,
                                            std::uint64_t seed);

/// A token stream from the Markov chain: first word ~ marginal, then w_t ~ cond(.|w_{t-1}).
std::vector<WordId> generate_markov_tokens(const GroundTruthTable& truth, std::size_t n_tokens,
                                           std::uint64_t seed);

}  // namespace ncelab
