// End-to-end acceptance experiments. Prints one PASS/FAIL line per criterion
// and exits nonzero if any fails.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

#include "../tools/cli.hpp"
#include "ncelab/gradcheck.hpp"
#include "ncelab/io.hpp"
#include "ncelab/nce.hpp"
#include "ncelab/negsampling.hpp"
#include "ncelab/trainer.hpp"

using namespace ncelab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r = {false, fmt::format("exception: {}", e.what())};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  fmt::print("[{}] {}. {}: {} ({:.1f}s)\n", r.pass ? "PASS" : "FAIL", id, title, r.detail, secs);
  std::fflush(stdout);
  if (!r.pass) ++failures;
}

// Standard fixture: |V|=16 Zipf truth, 1e5 i.i.d. pairs, seeds 1..5. The
// schedule is short on purpose: with equal update budgets the k-dependence
// of NCE's convergence shows up above seed noise.
struct Fixture {
  GroundTruthTable truth;
  std::vector<Pair> pairs;
  std::map<std::tuple<Objective, ZMode, std::size_t, std::uint64_t>, MetricsRow> cache;

  Fixture() {
    ZipfTruthOptions o;
    o.vocab_size = 16;
    o.exponent = 1.2;
    o.seed = 1;
    truth = make_zipf_truth(o);
    pairs = generate_synthetic_corpus(truth, 100000, 1);
  }

  static TrainConfig schedule() {
    TrainConfig c;
    c.dim = 16;
    c.learning_rate = 0.05;
    c.lr_decay = 0.9;
    c.epochs = 5;
    c.batch_size = 32;
    c.eval_every = c.epochs;
    c.noise = {NoiseKind::UNIGRAM, 0.0};
    return c;
  }

  const MetricsRow& final_row(Objective obj, ZMode mode, std::size_t k, std::uint64_t seed) {
    const auto key = std::make_tuple(obj, mode, obj == Objective::MLE_EXACT ? 0 : k, seed);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    TrainConfig c = schedule();
    c.objective = obj;
    c.z_mode = mode;
    c.k = k;
    c.seed = seed;
    return cache[key] = train(c, truth.vocab_size(), pairs, &truth).metrics.back();
  }

  double mean_kl(Objective obj, ZMode mode, std::size_t k) {
    double total = 0.0;
    for (std::uint64_t s = 1; s <= 5; ++s) total += *final_row(obj, mode, k, s).kl_truth;
    return total / 5.0;
  }
};

Outcome gradient_correctness() {
  double worst = 0.0;
  std::string where;
  for (auto t : {GradCheckTarget::MLE, GradCheckTarget::NCE_MC_LEARNED, GradCheckTarget::NCE_MC_FIXED,
                 GradCheckTarget::NCE_EXACT, GradCheckTarget::NS}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto r = run_gradcheck(t, seed);
      if (r.max_error() >= worst) {
        worst = r.max_error();
        where = fmt::format("{} seed {} {}", r.name, seed, r.worst_block().block);
      }
    }
  }
  return {worst <= 1e-5, fmt::format("max relative error {:.2e} ({}), tol 1e-5", worst, where)};
}

Outcome ns_nce_equivalence() {
  EquivalenceReport eq = compare_ns_with_nce(8, 8, 1, 20);
  const double dev = std::max(eq.max_loss_diff, eq.max_grad_diff);
  const auto ctl = compare_ns_with_nce(8, 7, 1, 20);
  const double ctl_dev = std::max(ctl.max_loss_diff, ctl.max_grad_diff);
  return {eq.draws == 20 && dev <= 1e-10 && ctl_dev > 1e-10,
          fmt::format("k=|V|=8 max deviation {:.2e} (tol 1e-10); control k=7 deviation {:.2e}", dev, ctl_dev)};
}

Outcome large_k_limit() {
  const std::size_t v = 12;
  bool monotone = true;
  double min_final = 1.0;
  std::string trace;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    // Self-normalized model: the learned log-normalizer equals log Z(c).
    ModelParams p = ModelParams::random(v, 4, ZMode::LEARNED_ZC, seed, 0.5);
    Rng rng(derive_seed(seed, streams::kData, 7));
    for (double& b : p.bias) b = 2.0 * rng.uniform() - 1.0;
    for (ContextId c = 0; c <= v; ++c) p.log_zc[c] = log_partition(p, c);
    std::vector<Pair> pairs(200);
    for (auto& pr : pairs) pr = {static_cast<ContextId>(rng.below(v + 1)), static_cast<WordId>(rng.below(v))};

    const CorpusStats stats(v, pairs);
    const auto target = grad_log_likelihood(p, pairs);
    double prev = -2.0;
    for (std::size_t k : {1u, 10u, 100u, 1000u}) {
      const NceConfig cfg(k, ZMode::LEARNED_ZC, NoiseDistribution::uniform(v));
      const double cos = cosine_similarity(exact_grad_analysis(p, stats, cfg), target);
      monotone = monotone && cos >= prev;
      prev = cos;
      if (seed == 1) trace += fmt::format(" {:.6f}", cos);
    }
    min_final = std::min(min_final, prev);
  }
  return {monotone && min_final >= 0.999,
          fmt::format("monotone {}, min cosine at k=1000 {:.6f} (need >= 0.999); seed 1:{}", monotone, min_final,
                      trace)};
}

Outcome consistency_sweep(Fixture& f) {
  const std::vector<std::size_t> ks = {1, 2, 5, 10, 25, 50};
  std::vector<double> kl;
  for (std::size_t k : ks) kl.push_back(f.mean_kl(Objective::NCE, ZMode::LEARNED_ZC, k));
  const double mle = f.mean_kl(Objective::MLE_EXACT, ZMode::EXACT, 0);
  int violations = 0;
  std::string trace;
  for (std::size_t i = 0; i < kl.size(); ++i) {
    trace += fmt::format(" k{}={:.5f}", ks[i], kl[i]);
    if (i > 0 && kl[i] > kl[i - 1]) ++violations;
  }
  const double gap = std::abs(kl.back() - mle);
  return {gap <= 0.05 && violations <= 1,
          fmt::format("|KL(k=50) - KL(mle)| = {:.5f} (tol 0.05), violations {} (max 1);{} mle={:.5f}", gap,
                      violations, trace, mle)};
}

Outcome self_normalization(Fixture& f) {
  double worst = 0.0;
  for (std::uint64_t s = 1; s <= 5; ++s)
    worst = std::max(worst, f.final_row(Objective::NCE, ZMode::FIXED_ONE, 10, s).median_abs_log_z);
  return {worst <= 0.5, fmt::format("median |log Z(c)| worst over 5 seeds {:.4f} (tol 0.5), k=10 unigram q", worst)};
}

Outcome ns_bias(Fixture& f) {
  const double ns = f.mean_kl(Objective::NS, ZMode::FIXED_ONE, 5);
  const double nce = f.mean_kl(Objective::NCE, ZMode::LEARNED_ZC, 5);
  const double mle = f.mean_kl(Objective::MLE_EXACT, ZMode::EXACT, 0);
  return {ns >= 2.0 * nce && ns - mle >= 0.1,
          fmt::format("KL ns {:.5f}, nce {:.5f}, mle {:.5f}: ratio {:.1f} (need >= 2), excess {:.4f} (need >= 0.1)",
                      ns, nce, mle, ns / nce, ns - mle)};
}

Outcome mc_unbiasedness() {
  const std::size_t v = 8, k = 2;
  const int m = 10000;
  ModelParams p = ModelParams::random(v, 3, ZMode::LEARNED_ZC, 5, 0.5);
  Rng rng(derive_seed(5, streams::kData, 9));
  for (double& b : p.bias) b = 2.0 * rng.uniform() - 1.0;
  for (double& z : p.log_zc) z = rng.uniform() - 0.5;
  std::vector<double> w(v);
  for (double& x : w) x = 0.5 + rng.uniform();
  const auto q = NoiseDistribution::from_weights(w);
  std::vector<Pair> pairs(12);
  for (auto& pr : pairs) pr = {static_cast<ContextId>(rng.below(v + 1)), static_cast<WordId>(rng.below(v))};
  const NceConfig cfg(k, ZMode::LEARNED_ZC, q);

  const auto reference = finite_difference_gradient(p, [&](const ModelParams& x) { return exact_loss(x, pairs, cfg); });
  const std::size_t n = p.size();
  std::vector<double> sum(n, 0.0), sum2(n, 0.0);
  for (int i = 0; i < m; ++i) {
    const auto g = mc_grad(p, gen_proxy(pairs, q, k, derive_seed(5, streams::kNoise, i)), cfg);
    for (std::size_t j = 0; j < n; ++j) {
      sum[j] += g.coord(j);
      sum2[j] += g.coord(j) * g.coord(j);
    }
  }
  double worst_z = 0.0;
  std::size_t bad = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double mean = sum[j] / m;
    const double var = std::max(0.0, sum2[j] / m - mean * mean);
    const double se = std::sqrt(var / (m - 1));
    const double diff = std::abs(mean - reference.coord(j));
    // Coordinates the noise never touches are deterministic; compare them at finite-difference accuracy.
    if (se == 0.0) {
      if (diff > 1e-8) ++bad;
      continue;
    }
    worst_z = std::max(worst_z, diff / se);
    if (diff > 4.0 * se) ++bad;
  }
  return {bad == 0, fmt::format("{} coordinates, {} outside 4 SE, worst |z| {:.2f}, m={}", n, bad, worst_z, m)};
}

std::string read_or_empty(const fs::path& p) { return fs::exists(p) ? io::read_file(p) : std::string{}; }

Outcome determinism() {
  const fs::path dir = fs::current_path() / "acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ostringstream sink;
  auto call = [&](std::vector<std::string> args) {
    const int code = cli::run(args, sink, sink);
    if (code != 0) throw Error(fmt::format("'{}' exited {}: {}", args.front(), code, sink.str()));
  };
  const std::string data = (dir / "d").string();
  call({"gen-data", "--vocab-size", "10", "--tokens", "20000", "--seed", "7", "--out-prefix", data});
  for (const char* run : {"a", "b"}) {
    call({"train", "--corpus", data + ".txt", "--truth", data + ".truth", "--objective", "nce", "--k", "5",
          "--epochs", "3", "--seed", "3", "--out", (dir / fmt::format("train_{}", run)).string()});
    call({"sweep", "--corpus", data + ".txt", "--truth", data + ".truth", "--ks", "1,5,10", "--seeds", "2",
          "--epochs", "2", "--out", (dir / fmt::format("sweep_{}.csv", run)).string()});
  }
  bool same = true;
  std::string detail;
  for (const char* suffix : {".metrics.csv", ".model"}) {
    const auto a = read_or_empty(dir / (std::string("train_a") + suffix));
    const auto b = read_or_empty(dir / (std::string("train_b") + suffix));
    same = same && !a.empty() && a == b;
    detail += fmt::format("train{} {} bytes {}; ", suffix, a.size(), a == b ? "identical" : "DIFFER");
  }
  const auto sa = read_or_empty(dir / "sweep_a.csv");
  const auto sb = read_or_empty(dir / "sweep_b.csv");
  same = same && !sa.empty() && sa == sb;
  detail += fmt::format("sweep csv {} bytes {}", sa.size(), sa == sb ? "identical" : "DIFFER");
  return {same, detail};
}

}  // namespace

int main() {
  criterion(1, "gradient correctness", gradient_correctness);
  criterion(2, "NS/NCE equivalence at k=|V|", ns_nce_equivalence);
  criterion(3, "large-k limit of the exact NCE gradient", large_k_limit);
  Fixture fixture;
  criterion(4, "consistency sweep", [&] { return consistency_sweep(fixture); });
  criterion(5, "self-normalization", [&] { return self_normalization(fixture); });
  criterion(6, "negative-sampling bias", [&] { return ns_bias(fixture); });
  criterion(7, "Monte Carlo unbiasedness", mc_unbiasedness);
  criterion(8, "CLI determinism", determinism);
  fmt::print("{} of 8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}
