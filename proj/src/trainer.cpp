#include "ncelab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "ncelab/nce.hpp"
#include "ncelab/negsampling.hpp"
#include "ncelab/rng.hpp"

namespace ncelab {

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::MLE_EXACT: return "mle";
    case Objective::NCE: return "nce";
    case Objective::NS: return "ns";
  }
  return "?";
}

Objective parse_objective(std::string_view text) {
  if (text == "mle" || text == "MLE" || text == "MLE_EXACT") return Objective::MLE_EXACT;
  if (text == "nce" || text == "NCE") return Objective::NCE;
  if (text == "ns" || text == "NS") return Objective::NS;
  throw ParseError(fmt::format("unknown objective '{}' (expected mle, nce or ns)", text));
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw Error("learning_rate must be > 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw Error("lr_decay must be in (0, 1]");
  if (epochs < 1) throw Error("epochs must be >= 1");
  if (batch_size < 1) throw Error("batch_size must be >= 1");
  if (eval_every < 1) throw Error("eval_every must be >= 1");
  if (dim < 1) throw Error("dim must be >= 1");
  if (threads < 1) throw Error("threads must be >= 1");
  if (objective != Objective::MLE_EXACT && k < 1) throw Error("k must be >= 1");
  if (objective == Objective::NCE && z_mode == ZMode::EXACT)
    throw Error("NCE needs z-mode learned or fixed");
}

double cross_entropy(const ModelParams& params, const CorpusStats& stats) {
  double total = 0.0;
  for (ContextId c : stats.seen_contexts()) {
    const auto s = scores(params, c);
    const double lz = log_sum_exp(s);
    for (std::size_t w = 0; w < s.size(); ++w) {
      const auto n = stats.bigram_count(c, static_cast<WordId>(w));
      if (n > 0) total -= static_cast<double>(n) * (s[w] - lz);
    }
  }
  return total / static_cast<double>(stats.total_tokens());
}

double mean_kl_to_truth(const ModelParams& params, const GroundTruthTable& truth) {
  if (truth.vocab_size() != params.vocab_size()) throw Error("truth and model vocabulary sizes differ");
  double total = 0.0;
  for (std::size_t c = 0; c < truth.vocab_size(); ++c) {
    const auto model = softmax_row(params, static_cast<ContextId>(c));
    total += kl_divergence(truth.row(static_cast<ContextId>(c)), model);
  }
  return total / static_cast<double>(truth.vocab_size());
}

double median_abs_log_z(const ModelParams& params, const CorpusStats& stats) {
  std::vector<double> a;
  for (ContextId c : stats.seen_contexts()) a.push_back(std::abs(log_partition(params, c)));
  std::sort(a.begin(), a.end());
  const std::size_t n = a.size();
  return n % 2 == 1 ? a[n / 2] : 0.5 * (a[n / 2 - 1] + a[n / 2]);
}

void sgd_step(ModelParams& params, const Gradient& grad, double step) {
  const std::vector<double> saved = params.z_mode == ZMode::LEARNED_ZC ? std::vector<double>{} : params.log_zc;
  params.axpy(step, grad);
  if (params.z_mode != ZMode::LEARNED_ZC) params.log_zc = saved;
}

namespace {

class BatchEvaluator {
 public:
  BatchEvaluator(const TrainConfig& config, const ModelParams& params, const NceConfig* nce)
      : config_(config), params_(params), nce_(nce) {}

  // Each returns the batch objective and adds its gradient to grad.
  double pairs(std::span<const Pair> batch, Gradient& grad) const {
    return accumulate_log_likelihood(params_, batch, grad);
  }

  double proxy(std::span<const ProxyExample> batch, Gradient& grad) const {
    if (config_.objective == Objective::NCE) return accumulate_mc(params_, batch, *nce_, grad);
    return accumulate_ns(params_, batch, grad);
  }

 private:
  const TrainConfig& config_;
  const ModelParams& params_;
  const NceConfig* nce_;
};

template <typename T, typename Fn>
double sharded(std::span<const T> batch, std::size_t threads, Gradient& grad, std::vector<Gradient>& scratch,
               Fn&& fn) {
  const std::size_t shards = std::min(threads, batch.size());
  if (shards <= 1) return fn(batch, grad);
  std::vector<double> partial(shards, 0.0);
  std::vector<std::thread> workers;
  const std::size_t chunk = (batch.size() + shards - 1) / shards;
  for (std::size_t s = 0; s < shards; ++s) {
    scratch[s].set_zero();
    const std::size_t lo = s * chunk;
    const std::size_t hi = std::min(batch.size(), lo + chunk);
    if (lo >= hi) continue;
    workers.emplace_back([&, s, lo, hi] { partial[s] = fn(batch.subspan(lo, hi - lo), scratch[s]); });
  }
  for (auto& t : workers) t.join();
  double total = 0.0;
  for (std::size_t s = 0; s < shards; ++s) {
    grad.axpy(1.0, scratch[s]);
    total += partial[s];
  }
  return total;
}

}  // namespace

TrainResult train(const TrainConfig& config, std::size_t vocab_size, std::span<const Pair> corpus,
                  const GroundTruthTable* truth, const EpochHook& hook) {
  config.validate();
  if (corpus.empty()) throw Error("empty corpus");
  const CorpusStats stats(vocab_size, corpus);
  const auto start = std::chrono::steady_clock::now();

  const ZMode mode = config.objective == Objective::MLE_EXACT ? ZMode::EXACT : config.z_mode;
  TrainResult result{ModelParams::random(vocab_size, config.dim, mode, config.seed), {}};
  ModelParams& params = result.params;

  std::optional<NceConfig> nce;
  std::optional<NoiseDistribution> noise;
  if (config.objective != Objective::MLE_EXACT) {
    noise = NoiseDistribution::from_spec(config.noise, stats);
    if (config.objective == Objective::NCE) nce.emplace(config.k, config.z_mode, *noise);
  }

  const std::size_t n = corpus.size();
  std::vector<std::size_t> order(n);
  std::vector<Pair> shuffled(n);
  std::vector<ProxyExample> examples;
  if (noise) examples.assign(n, ProxyExample{0, 0, std::vector<WordId>(config.k)});

  Gradient grad(vocab_size, config.dim);
  std::vector<Gradient> scratch(config.threads, Gradient(vocab_size, config.dim));
  const BatchEvaluator eval(config, params, nce ? &*nce : nullptr);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = config.learning_rate * std::pow(config.lr_decay, static_cast<double>(epoch - 1));

    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(config.seed, streams::kShuffle, epoch));
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng.below(i + 1)]);
    for (std::size_t i = 0; i < n; ++i) shuffled[i] = corpus[order[i]];

    if (noise) {
      Rng noise_rng(derive_seed(config.seed, streams::kNoise, epoch));
      for (std::size_t i = 0; i < n; ++i) {
        examples[i].context = shuffled[i].context;
        examples[i].w_true = shuffled[i].word;
        for (auto& w : examples[i].w_noise) w = noise->sample(noise_rng);
      }
    }

    double objective_sum = 0.0;
    for (std::size_t lo = 0; lo < n; lo += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, n - lo);
      grad.set_zero();
      if (noise) {
        std::span<const ProxyExample> batch(examples.data() + lo, len);
        objective_sum += sharded(batch, config.threads, grad, scratch,
                                 [&](std::span<const ProxyExample> b, Gradient& g) { return eval.proxy(b, g); });
      } else {
        std::span<const Pair> batch(shuffled.data() + lo, len);
        objective_sum += sharded(batch, config.threads, grad, scratch,
                                 [&](std::span<const Pair> b, Gradient& g) { return eval.pairs(b, g); });
      }
      sgd_step(params, grad, lr / static_cast<double>(len));
      if (!params.all_finite())
        throw TrainingDiverged(epoch, fmt::format("training diverged at epoch {}: non-finite parameter", epoch));
    }

    if (epoch % config.eval_every == 0 || epoch == config.epochs) {
      MetricsRow row;
      row.epoch = epoch;
      row.cross_entropy = cross_entropy(params, stats);
      if (truth) row.kl_truth = mean_kl_to_truth(params, *truth);
      row.median_abs_log_z = median_abs_log_z(params, stats);
      row.objective = objective_sum / static_cast<double>(n);
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (!std::isfinite(row.cross_entropy))
        throw TrainingDiverged(epoch, fmt::format("training diverged at epoch {}: non-finite cross-entropy", epoch));
      result.metrics.push_back(row);
      if (hook) hook(epoch, params);
    }
  }
  return result;
}

std::vector<SweepRow> sweep_k(const TrainConfig& base, std::span<const std::size_t> ks, std::size_t vocab_size,
                              std::span<const Pair> corpus, const GroundTruthTable& truth) {
  if (ks.empty()) throw Error("sweep needs at least one k");
  if (!std::is_sorted(ks.begin(), ks.end())) throw Error("sweep ks must be sorted ascending");
  std::vector<SweepRow> rows;
  for (std::size_t k : ks) {
    TrainConfig cfg = base;
    cfg.k = k;
    try {
      const auto result = train(cfg, vocab_size, corpus, &truth);
      const auto& last = result.metrics.back();
      rows.push_back({k, *last.kl_truth, last.cross_entropy, last.median_abs_log_z});
    } catch (const TrainingDiverged& e) {
      throw TrainingDiverged(e.epoch(), fmt::format("k={}: {}", k, e.what()));
    } catch (const Error& e) {
      throw Error(fmt::format("k={}: {}", k, e.what()));
    }
  }
  return rows;
}

}  // namespace ncelab
