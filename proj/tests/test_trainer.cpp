#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ncelab/nce.hpp"
#include "ncelab/trainer.hpp"
#include "test_support.hpp"

using namespace ncelab;

namespace {

struct Fixture {
  GroundTruthTable truth;
  std::vector<Pair> pairs;

  explicit Fixture(std::size_t v = 8, std::size_t n = 20000, std::uint64_t seed = 3) {
    ZipfTruthOptions o;
    o.vocab_size = v;
    o.seed = seed;
    truth = make_zipf_truth(o);
    pairs = generate_synthetic_corpus(truth, n, seed);
  }
};

TrainConfig small_config(Objective objective) {
  TrainConfig c;
  c.objective = objective;
  c.dim = 8;
  c.epochs = 15;
  c.learning_rate = 1.0;
  c.lr_decay = 0.9;
  c.batch_size = 16;
  return c;
}

// The library defaults: 200 epochs, lr 0.5, decay 0.98, batch 32.
TrainConfig full_config(Objective objective) {
  TrainConfig c;
  c.objective = objective;
  c.dim = 8;
  c.eval_every = c.epochs;
  return c;
}

bool same_params(const ModelParams& a, const ModelParams& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.coord(i) != b.coord(i)) return false;
  return true;
}

}  // namespace

TEST_CASE("objective names round trip") {
  for (Objective o : {Objective::MLE_EXACT, Objective::NCE, Objective::NS}) CHECK(parse_objective(to_string(o)) == o);
  CHECK_THROWS_AS(parse_objective("softmax"), ParseError);
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.k = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.z_mode = ZMode::EXACT;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.lr_decay = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("training is bit-for-bit deterministic") {
  Fixture f(8, 3000);
  for (Objective o : {Objective::MLE_EXACT, Objective::NCE, Objective::NS}) {
    auto c = small_config(o);
    c.epochs = 3;
    const auto a = train(c, 8, f.pairs, &f.truth);
    const auto b = train(c, 8, f.pairs, &f.truth);
    CHECK(same_params(a.params, b.params));
    REQUIRE(a.metrics.size() == b.metrics.size());
    for (std::size_t i = 0; i < a.metrics.size(); ++i) {
      CHECK(a.metrics[i].cross_entropy == b.metrics[i].cross_entropy);
      CHECK(a.metrics[i].objective == b.metrics[i].objective);
    }
    c.seed = 2;
    CHECK_FALSE(same_params(a.params, train(c, 8, f.pairs, &f.truth).params));
  }
}

TEST_CASE("MLE recovers the truth on a small fixture") {
  Fixture f;
  const auto r = train(full_config(Objective::MLE_EXACT), 8, f.pairs, &f.truth);
  CHECK(*r.metrics.back().kl_truth <= 1e-2);
  CHECK(r.params.z_mode == ZMode::EXACT);
}

TEST_CASE("NCE with large k lands close to MLE") {
  Fixture f;
  const auto mle = train(full_config(Objective::MLE_EXACT), 8, f.pairs, &f.truth);
  auto c = full_config(Objective::NCE);
  c.k = 25;
  const auto nce = train(c, 8, f.pairs, &f.truth);
  CHECK(*nce.metrics.back().kl_truth <= *mle.metrics.back().kl_truth + 0.05);
}

TEST_CASE("a small SGD step increases the objective") {
  const std::size_t v = 10;
  const auto pairs = ncelab::testing::random_pairs(v, 20, 4);
  const auto q = NoiseDistribution::uniform(v);
  for (ZMode mode : {ZMode::LEARNED_ZC, ZMode::FIXED_ONE}) {
    const NceConfig cfg(4, mode, q);
    const auto ex = gen_proxy(pairs, q, 4, 4);
    auto p = ncelab::testing::random_model(v, 4, mode, 4);
    const double before = mc_loss(p, ex, cfg);
    sgd_step(p, mc_grad(p, ex, cfg), 1e-4);
    CHECK(mc_loss(p, ex, cfg) > before);
  }
  auto p = ncelab::testing::random_model(v, 4, ZMode::EXACT, 5);
  const double before = log_likelihood(p, pairs);
  sgd_step(p, grad_log_likelihood(p, pairs), 1e-4);
  CHECK(log_likelihood(p, pairs) > before);
}

TEST_CASE("sgd_step keeps log_zc fixed unless it is learned") {
  auto p = ncelab::testing::random_model(4, 2, ZMode::FIXED_ONE, 1);
  Gradient g(4, 2);
  for (std::size_t i = 0; i < g.size(); ++i) g.coord(i) = 1.0;
  sgd_step(p, g, 0.1);
  for (double z : p.log_zc) CHECK(z == 0.0);
  auto l = ncelab::testing::random_model(4, 2, ZMode::LEARNED_ZC, 1);
  const double z0 = l.log_zc[0];
  sgd_step(l, g, 0.1);
  CHECK(l.log_zc[0] == doctest::Approx(z0 + 0.1));
}

TEST_CASE("metrics cadence") {
  Fixture f(6, 500);
  auto c = small_config(Objective::NCE);
  c.epochs = 7;
  c.eval_every = 3;
  std::vector<std::size_t> hooked;
  const auto r = train(c, 6, f.pairs, &f.truth, [&](std::size_t e, const ModelParams&) { hooked.push_back(e); });
  REQUIRE(r.metrics.size() == 3);
  CHECK(r.metrics[0].epoch == 3);
  CHECK(r.metrics[1].epoch == 6);
  CHECK(r.metrics[2].epoch == 7);
  CHECK(hooked == std::vector<std::size_t>{3, 6, 7});

  c.eval_every = 1;
  const auto no_truth = train(c, 6, f.pairs);
  CHECK(no_truth.metrics.size() == 7);
  CHECK_FALSE(no_truth.metrics.back().kl_truth.has_value());
}

TEST_CASE("metric helpers") {
  const std::vector<Pair> pairs = {{0, 1}, {1, 0}, {2, 2}, {3, 1}};
  const CorpusStats s(3, pairs);
  const ModelParams zero(3, 2, ZMode::FIXED_ONE);
  CHECK(cross_entropy(zero, s) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  CHECK(median_abs_log_z(zero, s) == doctest::Approx(std::log(3.0)).epsilon(1e-14));

  GroundTruthTable t;
  t.words = {"a", "b", "c"};
  t.context_marginal = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  t.cond.assign(9, 1.0 / 3);
  CHECK(std::abs(mean_kl_to_truth(zero, t)) <= 1e-15);
}

TEST_CASE("divergence is reported with its epoch") {
  Fixture f(6, 500);
  auto c = small_config(Objective::NCE);
  c.learning_rate = 1e200;
  try {
    train(c, 6, f.pairs, &f.truth);
    FAIL("expected divergence");
  } catch (const TrainingDiverged& e) {
    CHECK(e.epoch() == 1);
    CHECK(std::string(e.what()).find("diverged") != std::string::npos);
  }
}

TEST_CASE("threaded gradients match the single-threaded run") {
  Fixture f(8, 2000);
  for (Objective o : {Objective::MLE_EXACT, Objective::NCE, Objective::NS}) {
    auto c = small_config(o);
    c.epochs = 2;
    c.batch_size = 64;
    const auto one = train(c, 8, f.pairs);
    c.threads = 4;
    const auto four = train(c, 8, f.pairs);
    double worst = 0.0;
    for (std::size_t i = 0; i < one.params.size(); ++i)
      worst = std::max(worst, std::abs(one.params.coord(i) - four.params.coord(i)));
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("sweep_k") {
  Fixture f(6, 2000);
  auto c = small_config(Objective::NCE);
  c.epochs = 3;
  const std::vector<std::size_t> ks = {1, 5, 25};
  const auto rows = sweep_k(c, ks, 6, f.pairs, f.truth);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(rows[i].k == ks[i]);

  // A degenerate sweep is a single run.
  c.k = 5;
  const auto single = train(c, 6, f.pairs, &f.truth);
  const std::vector<std::size_t> one = {5};
  const auto row = sweep_k(c, one, 6, f.pairs, f.truth);
  CHECK(row[0].final_kl == *single.metrics.back().kl_truth);
  CHECK(row[0].final_ce == single.metrics.back().cross_entropy);

  const std::vector<std::size_t> unsorted = {5, 1};
  CHECK_THROWS_AS(sweep_k(c, unsorted, 6, f.pairs, f.truth), Error);
  c.learning_rate = 1e200;
  CHECK_THROWS_WITH_AS(sweep_k(c, one, 6, f.pairs, f.truth), doctest::Contains("k=5"), TrainingDiverged);
}
