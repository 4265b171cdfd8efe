#include "ncelab/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "ncelab/alias_table.hpp"
#include "ncelab/rng.hpp"

namespace ncelab {

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i] == kBosToken) throw Error(fmt::format("token '{}' is reserved", kBosToken));
    if (words_[i].empty()) throw Error("empty token in vocabulary");
    if (!index_.emplace(words_[i], static_cast<WordId>(i)).second)
      throw Error(fmt::format("duplicate token '{}' in vocabulary", words_[i]));
  }
  if (words_.size() < 2) throw Error("degenerate vocabulary: fewer than 2 distinct tokens");
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.find(std::string(token)) != index_.end();
}

WordId Vocabulary::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) throw Error(fmt::format("unknown token '{}'", token));
  return it->second;
}

std::string Vocabulary::context_token(ContextId c) const {
  if (c == bos_context(size())) return std::string(kBosToken);
  return words_.at(c);
}

Vocabulary build_vocab(std::span<const std::string> tokens) {
  std::vector<std::string> words;
  std::unordered_map<std::string_view, bool> seen;
  for (const auto& t : tokens) {
    if (seen.emplace(t, true).second) words.push_back(t);
  }
  if (words.size() < 2) throw Error("degenerate vocabulary: fewer than 2 distinct tokens");
  return Vocabulary(std::move(words));
}

CorpusStats::CorpusStats(std::size_t vocab_size, std::span<const Pair> pairs)
    : vocab_size_(vocab_size),
      bigrams_((vocab_size + 1) * vocab_size, 0),
      context_counts_(vocab_size + 1, 0),
      unigram_counts_(vocab_size, 0) {
  if (vocab_size < 2) throw Error("degenerate vocabulary: fewer than 2 distinct tokens");
  if (pairs.empty()) throw Error("empty corpus");
  for (const Pair& p : pairs) {
    if (p.context > vocab_size || p.word >= vocab_size)
      throw Error(fmt::format("pair ({}, {}) out of range for |V|={}", p.context, p.word, vocab_size));
    ++bigrams_[p.context * vocab_size + p.word];
    ++context_counts_[p.context];
    ++unigram_counts_[p.word];
    ++total_;
  }
}

std::vector<ContextId> CorpusStats::seen_contexts() const {
  std::vector<ContextId> out;
  for (std::size_t c = 0; c < context_counts_.size(); ++c)
    if (context_counts_[c] > 0) out.push_back(static_cast<ContextId>(c));
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto is_space = [](char ch) {
    return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v';
  };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<Pair> to_pairs(std::span<const std::string> tokens, const Vocabulary& vocab) {
  if (tokens.empty()) throw Error("empty corpus");
  std::vector<Pair> pairs;
  pairs.reserve(tokens.size());
  ContextId prev = bos_context(vocab.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!vocab.contains(tokens[i]))
      throw Error(fmt::format("unknown token '{}' at position {}", tokens[i], i));
    const WordId w = vocab.lookup(tokens[i]);
    pairs.push_back({prev, w});
    prev = w;
  }
  return pairs;
}

CorpusStats extract_stats(std::span<const std::string> tokens, const Vocabulary& vocab) {
  const auto pairs = to_pairs(tokens, vocab);
  return CorpusStats(vocab.size(), pairs);
}

double empirical_conditional(const CorpusStats& stats, ContextId c, WordId w) {
  if (c >= stats.num_contexts() || stats.context_count(c) == 0)
    throw Error(fmt::format("unseen context {}", c));
  return static_cast<double>(stats.bigram_count(c, w)) / static_cast<double>(stats.context_count(c));
}

double empirical_context_marginal(const CorpusStats& stats, ContextId c) {
  if (c >= stats.num_contexts()) return 0.0;
  return static_cast<double>(stats.context_count(c)) / static_cast<double>(stats.total_tokens());
}

void GroundTruthTable::validate() const {
  const std::size_t v = vocab_size();
  if (v < 2) throw Error("degenerate vocabulary: fewer than 2 distinct tokens");
  if (cond.size() != v * v) throw Error("ground truth table has wrong shape");
  if (!words.empty() && words.size() != v) throw Error("ground truth vocabulary size mismatch");
  auto check = [](std::span<const double> p, const std::string& what) {
    double sum = 0.0;
    for (double x : p) {
      if (!std::isfinite(x) || x < 0.0) throw Error(what + " has a negative or non-finite entry");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw Error(fmt::format("{} sums to {:.17g}, not 1", what, sum));
  };
  check(context_marginal, "context marginal");
  for (std::size_t c = 0; c < v; ++c) check(row(static_cast<ContextId>(c)), fmt::format("row {}", c));
}

namespace {

void normalize(std::span<double> p) {
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= sum;
}

std::vector<double> stationary_distribution(const std::vector<double>& cond, std::size_t v) {
  std::vector<double> pi(v, 1.0 / static_cast<double>(v));
  std::vector<double> next(v);
  for (int iter = 0; iter < 100000; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t c = 0; c < v; ++c)
      for (std::size_t w = 0; w < v; ++w) next[w] += pi[c] * cond[c * v + w];
    normalize(next);
    double delta = 0.0;
    for (std::size_t i = 0; i < v; ++i) delta += std::abs(next[i] - pi[i]);
    pi.swap(next);
    if (delta < 1e-15) break;
  }
  return pi;
}

}  // namespace

GroundTruthTable make_zipf_truth(const ZipfTruthOptions& opts) {
  const std::size_t v = opts.vocab_size;
  if (v < 2) throw Error("degenerate vocabulary: fewer than 2 distinct tokens");
  if (!(opts.exponent >= 0.0) || !std::isfinite(opts.exponent)) throw Error("zipf exponent must be >= 0");
  Rng rng(derive_seed(opts.seed, streams::kTruth, 0));

  std::vector<double> zipf(v);
  for (std::size_t r = 0; r < v; ++r) zipf[r] = std::pow(static_cast<double>(r + 1), -opts.exponent);
  normalize(zipf);

  // Shared base ranking, then a jittered re-sort per context.
  std::vector<std::size_t> base(v);
  std::iota(base.begin(), base.end(), 0);
  for (std::size_t i = v - 1; i > 0; --i) std::swap(base[i], base[rng.below(i + 1)]);

  GroundTruthTable truth;
  truth.cond.assign(v * v, 0.0);
  std::vector<double> key(v);
  std::vector<std::size_t> order(v);
  for (std::size_t c = 0; c < v; ++c) {
    for (std::size_t r = 0; r < v; ++r)
      key[base[r]] = static_cast<double>(r) + opts.rank_jitter * (2.0 * rng.uniform() - 1.0);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
    for (std::size_t r = 0; r < v; ++r) truth.cond[c * v + order[r]] = zipf[r];
  }
  truth.context_marginal = stationary_distribution(truth.cond, v);
  truth.words.reserve(v);
  for (std::size_t i = 0; i < v; ++i) truth.words.push_back(fmt::format("w{}", i));
  truth.validate();
  return truth;
}

std::vector<Pair> generate_synthetic_corpus(const GroundTruthTable& truth, std::size_t n_tokens,
                                            std::uint64_t seed) {
  const std::size_t v = truth.vocab_size();
  AliasTable contexts(truth.context_marginal);
  std::vector<AliasTable> rows;
  rows.reserve(v);
  for (std::size_t c = 0; c < v; ++c) rows.emplace_back(truth.row(static_cast<ContextId>(c)));
  Rng rng(derive_seed(seed, streams::kData, 0));
  std::vector<Pair> out;
  out.reserve(n_tokens);
  for (std::size_t i = 0; i < n_tokens; ++i) {
    const auto c = static_cast<ContextId>(contexts.sample(rng));
    const auto w = static_cast<WordId>(rows[c].sample(rng));
    out.push_back({c, w});
  }
  return out;
}

std::vector<WordId> generate_markov_tokens(const GroundTruthTable& truth, std::size_t n_tokens,
                                           std::uint64_t seed) {
  const std::size_t v = truth.vocab_size();
  AliasTable start(truth.context_marginal);
  std::vector<AliasTable> rows;
  rows.reserve(v);
  for (std::size_t c = 0; c < v; ++c) rows.emplace_back(truth.row(static_cast<ContextId>(c)));
  Rng rng(derive_seed(seed, streams::kData, 1));
  std::vector<WordId> out;
  out.reserve(n_tokens);
  if (n_tokens == 0) return out;
  out.push_back(static_cast<WordId>(start.sample(rng)));
  while (out.size() < n_tokens) out.push_back(static_cast<WordId>(rows[out.back()].sample(rng)));
  return out;
}

}  // namespace ncelab
