#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ncelab/corpus.hpp"
#include "ncelab/model.hpp"
#include "ncelab/noise.hpp"

namespace ncelab {

enum class Objective { MLE_EXACT, NCE, NS };

std::string_view to_string(Objective o);
/// Accepts `mle`, `nce`, `ns` (case-insensitive upper forms too).
Objective parse_objective(std::string_view text);

struct TrainConfig {
  Objective objective = Objective::NCE;
  std::size_t k = 10;
  ZMode z_mode = ZMode::LEARNED_ZC;
  NoiseSpec noise{NoiseKind::UNIGRAM, 0.0};
  std::size_t dim = 16;
  double learning_rate = 0.5;
  double lr_decay = 0.98;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  std::size_t eval_every = 1;
  std::size_t threads = 1;

  /// Throws Error when a field is out of range.
  void validate() const;
};

struct MetricsRow {
  std::size_t epoch = 0;
  double cross_entropy = 0.0;
  std::optional<double> kl_truth;
  double median_abs_log_z = 0.0;
  /// Mean per-example objective over the epoch, evaluated before each batch update.
  double objective = 0.0;
  double seconds = 0.0;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(std::size_t epoch, const std::string& what) : Error(what), epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

struct TrainResult {
  ModelParams params;
  std::vector<MetricsRow> metrics;
};

/// Called after each evaluated epoch with the current parameters.
using EpochHook = std::function<void(std::size_t epoch, const ModelParams&)>;

/// Mean cross-entropy (nats/token) of the exact softmax on the pairs counted in `stats`.
double cross_entropy(const ModelParams& params, const CorpusStats& stats);
/// Unweighted mean over truth contexts of KL(truth(.|c) || p_θ(.|c)).
double mean_kl_to_truth(const ModelParams& params, const GroundTruthTable& truth);
/// Median over seen contexts of |log Z(c)|.
double median_abs_log_z(const ModelParams& params, const CorpusStats& stats);

/// params += step * grad, leaving log_zc untouched unless the model learns it.
void sgd_step(ModelParams& params, const Gradient& grad, double step);

/// Seeded minibatch gradient ascent on the mean per-example objective.
/// Epoch e (1-based) uses learning rate lr * decay^(e-1), a Fisher-Yates
/// shuffle seeded by derive_seed(seed, shuffle, e) and fresh noise seeded by
/// derive_seed(seed, noise, e). Metrics are recorded every eval_every epochs
/// and after the last epoch.
TrainResult train(const TrainConfig& config, std::size_t vocab_size, std::span<const Pair> corpus,
                  const GroundTruthTable* truth = nullptr, const EpochHook& hook = {});

struct SweepRow {
  std::size_t k = 0;
  double final_kl = 0.0;
  double final_ce = 0.0;
  double median_abs_log_z = 0.0;
};

/// One training run per k with `base` otherwise unchanged. Errors are rethrown annotated with k.
std::vector<SweepRow> sweep_k(const TrainConfig& base, std::span<const std::size_t> ks, std::size_t vocab_size,
                              std::span<const Pair> corpus, const GroundTruthTable& truth);

}  // namespace ncelab
