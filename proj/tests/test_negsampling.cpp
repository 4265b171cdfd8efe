#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ncelab/gradcheck.hpp"
#include "ncelab/negsampling.hpp"
#include "test_support.hpp"

using namespace ncelab;
using ncelab::testing::random_model;
using ncelab::testing::random_pairs;

TEST_CASE("posterior is the logistic of the score") {
  ModelParams p(3, 2, ZMode::FIXED_ONE);
  CHECK(ns_posterior_true(p, 0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  p.bias[1] = std::log(3.0);
  CHECK(ns_posterior_true(p, 1, 0) == doctest::Approx(0.75).epsilon(1e-15));
  p.bias[2] = -800.0;
  CHECK(ns_posterior_true(p, 2, 0) >= 0.0);
  CHECK(std::isfinite(std::log(ns_posterior_true(p, 1, 0))));

  // z_mode and log_zc play no part.
  ModelParams l = p;
  l.z_mode = ZMode::LEARNED_ZC;
  l.log_zc[0] = 2.5;
  CHECK(ns_posterior_true(l, 1, 0) == ns_posterior_true(p, 1, 0));
}

TEST_CASE("ns_loss on a single example") {
  ModelParams p(4, 2, ZMode::FIXED_ONE);
  p.bias[0] = std::log(3.0);
  const std::vector<ProxyExample> ex = {{1, 0, {0, 2}}};
  const double expected = std::log(0.75) + std::log(0.25) + std::log(0.5);
  CHECK(ns_loss(p, ex) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("NS equals NCE with k = |V| and uniform noise") {
  for (std::size_t v : {4u, 9u, 20u}) {
    const NceConfig cfg(v, ZMode::FIXED_ONE, NoiseDistribution::uniform(v));
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto p = random_model(v, 3, ZMode::FIXED_ONE, seed);
      const auto ex = gen_proxy(random_pairs(v, 12, seed), NoiseDistribution::uniform(v), v, seed);
      CHECK(std::abs(ns_loss(p, ex) - mc_loss(p, ex, cfg)) <= 1e-12);
      const auto gn = ns_grad(p, ex);
      const auto gm = mc_grad(p, ex, cfg);
      double worst = 0.0;
      for (std::size_t i = 0; i < gn.size(); ++i) worst = std::max(worst, std::abs(gn.coord(i) - gm.coord(i)));
      CHECK(worst <= 1e-10);
    }
  }
  const auto r = compare_ns_with_nce(7, 7, 3);
  CHECK(r.draws == 20);
  CHECK(r.max_loss_diff <= 1e-10);
  CHECK(r.max_grad_diff <= 1e-10);
}

TEST_CASE("NS differs from NCE when k != |V|") {
  const auto r = compare_ns_with_nce(7, 6, 3);
  CHECK(r.max_loss_diff > 1e-6);
}

TEST_CASE("ns_grad matches finite differences and leaves log_zc alone") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto p = random_model(12, 4, ZMode::LEARNED_ZC, seed);
    const auto ex = gen_proxy(random_pairs(12, 20, seed), NoiseDistribution::uniform(12), 3, seed);
    const auto g = ns_grad(p, ex);
    const auto report =
        compare_gradients("ns", g, finite_difference_gradient(p, [&](const ModelParams& m) { return ns_loss(m, ex); }));
    CHECK(report.max_error() <= 1e-5);
    for (double z : g.log_zc) CHECK(z == 0.0);
  }
}

TEST_CASE("equal scores give equal posteriors regardless of noise frequency") {
  // NCE with non-uniform q separates two equal-score words; NS cannot.
  ModelParams p(4, 2, ZMode::FIXED_ONE);
  const auto q = NoiseDistribution::from_weights(std::vector<double>{8, 1, 1, 1});
  const NceConfig cfg(3, ZMode::FIXED_ONE, q);
  CHECK(ns_posterior_true(p, 0, 1) == ns_posterior_true(p, 1, 1));
  CHECK(posterior_true_model(p, 0, 1, cfg) < posterior_true_model(p, 1, 1, cfg));
}
