#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "pcd/action_dist.hpp"
#include "pcd/error.hpp"

using namespace pcd;

namespace {

// Direct evaluation of w_k = p_k * (p_k / max(q_k, floor))^alpha in linear space.
std::vector<double> brute_force_combine(const std::vector<double>& p, const std::vector<double>& q,
                                        double alpha, double floor) {
  std::vector<double> w(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    w[k] = p[k] * std::pow(p[k] / std::max(q[k], floor), alpha);
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  return w;
}

std::vector<double> random_simplex(std::mt19937_64& gen, std::size_t n, double zero_prob = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(n);
  for (double& x : w) x = u(gen) < zero_prob ? 0.0 : -std::log(1.0 - u(gen));
  if (std::accumulate(w.begin(), w.end(), 0.0) == 0.0) w[0] = 1.0;
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  return w;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("bin grid centers and lookup") {
  const BinGrid g(-1.0, 1.0, 4);
  CHECK(g.width() == doctest::Approx(0.5));
  CHECK(g.center(0) == doctest::Approx(-0.75));
  CHECK(g.center(3) == doctest::Approx(0.75));
  CHECK(g.index_of(-5.0) == 0);
  CHECK(g.index_of(0.1) == 2);
  CHECK(g.index_of(5.0) == 3);
  CHECK_THROWS_AS(BinGrid(1.0, 1.0, 4), Error);
  CHECK_THROWS_AS(BinGrid(0.0, 1.0, 1), Error);
}

TEST_CASE("categorical distributions validate their mass") {
  const BinGrid g(0.0, 1.0, 3);
  CHECK_NOTHROW(CategoricalDist(g, {0.2, 0.3, 0.5}));
  CHECK_THROWS_AS(CategoricalDist(g, {0.2, 0.3, 0.6}), Error);
  CHECK_THROWS_AS(CategoricalDist(g, {-0.1, 0.6, 0.5}), Error);
  CHECK_THROWS_AS(CategoricalDist(g, {0.5, 0.5}), Error);
  CHECK_THROWS_AS(CategoricalDist::from_weights(g, {0.0, 0.0, 0.0}), Error);
}

TEST_CASE("worked three-bin example") {
  const BinGrid g(0.0, 3.0, 3);
  const CategoricalDist p(g, {0.5, 0.3, 0.2});
  const CategoricalDist q(g, {0.6, 0.3, 0.1});
  const auto out = contrastive_combine(p, q, {1.0});
  // Unnormalized weights 0.41667, 0.3, 0.4.
  CHECK(out[0] == doctest::Approx(0.37313).epsilon(1e-5));
  CHECK(out[1] == doctest::Approx(0.26866).epsilon(1e-5));
  CHECK(out[2] == doctest::Approx(0.35821).epsilon(1e-5));
}

TEST_CASE("contrastive combine matches the brute-force oracle") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> alpha_dist(0.0, 4.0);
  std::uniform_int_distribution<int> size_dist(2, 40);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<std::size_t>(size_dist(gen));
    const BinGrid g(-1.0, 1.0, n);
    const auto pv = random_simplex(gen, n);
    const auto qv = random_simplex(gen, n, 0.2);  // zeros exercise the floor
    const double alpha = alpha_dist(gen);
    const DecodeConfig cfg{alpha};
    const auto out = contrastive_combine(CategoricalDist(g, pv), CategoricalDist(g, qv), cfg);
    const auto expect = brute_force_combine(pv, qv, alpha, cfg.prob_floor);
    worst = std::max(worst, max_abs_diff(out.probs(), expect));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("alpha zero and fixed point") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> alpha_dist(0.0, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    const BinGrid g(0.0, 1.0, 16);
    const CategoricalDist p(g, random_simplex(gen, 16, 0.1));
    const CategoricalDist q(g, random_simplex(gen, 16, 0.1));
    const auto same = contrastive_combine(p, q, {0.0});
    REQUIRE(std::equal(same.probs().begin(), same.probs().end(), p.probs().begin()));
    const auto fixed = contrastive_combine(p, p, {alpha_dist(gen)});
    CHECK(max_abs_diff(fixed.probs(), p.probs()) <= 1e-12);
  }
  const BinGrid g(0.0, 3.0, 3);
  const CategoricalDist p(g, {0.5, 0.3, 0.2});
  const auto out = contrastive_combine(p, p, {0.7});
  CHECK(max_abs_diff(out.probs(), p.probs()) <= 1e-12);
}

TEST_CASE("odds grow with alpha in the direction of the ratio") {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> alpha_dist(0.0, 4.0);
  std::size_t checked = 0;
  std::size_t violations = 0;
  const double floor = DecodeConfig{}.prob_floor;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 8;
    const BinGrid g(0.0, 1.0, n);
    const auto pv = random_simplex(gen, n);
    const auto qv = random_simplex(gen, n, 0.1);
    double a1 = alpha_dist(gen);
    double a2 = alpha_dist(gen);
    if (a1 > a2) std::swap(a1, a2);
    if (a2 - a1 < 1e-3) continue;
    const auto lo = contrastive_combine(CategoricalDist(g, pv), CategoricalDist(g, qv), {a1});
    const auto hi = contrastive_combine(CategoricalDist(g, pv), CategoricalDist(g, qv), {a2});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double ri = pv[i] / std::max(qv[i], floor);
        const double rj = pv[j] / std::max(qv[j], floor);
        if (!(std::log(ri) - std::log(rj) > 1e-9)) continue;
        ++checked;
        if (!(std::log(hi[i] / hi[j]) > std::log(lo[i] / lo[j]))) ++violations;
      }
    }
  }
  CHECK(checked > 10000);
  CHECK(violations == 0);
}

TEST_CASE("contrastive combine rejects bad inputs") {
  const CategoricalDist p(BinGrid(0.0, 1.0, 2), {0.5, 0.5});
  const CategoricalDist q(BinGrid(0.0, 2.0, 2), {0.5, 0.5});
  CHECK_THROWS_AS(contrastive_combine(p, q, {1.0}), Error);
  CHECK_THROWS_AS(contrastive_combine(p, p, {-0.5}), Error);
  DecodeConfig bad_floor;
  bad_floor.prob_floor = 0.01;
  CHECK_THROWS_AS(contrastive_combine(p, p, bad_floor), Error);
}

TEST_CASE("multi-dimensional combine") {
  std::mt19937_64 gen(3);
  std::vector<CategoricalDist> pd;
  std::vector<CategoricalDist> qd;
  for (int t = 0; t < 7; ++t) {
    const BinGrid g(-1.0, 1.0, 21);
    pd.emplace_back(g, random_simplex(gen, 21));
    qd.emplace_back(g, random_simplex(gen, 21));
  }
  const ActionDistribution p(pd);
  const ActionDistribution q(qd);
  const auto out = contrastive_combine_multi(p, q, {0.8});
  REQUIRE(out.dims() == 7);
  for (std::size_t t = 0; t < 7; ++t) {
    const auto single = contrastive_combine(p[t], q[t], {0.8});
    CHECK(std::equal(single.probs().begin(), single.probs().end(), out[t].probs().begin()));
  }
  const auto same = contrastive_combine_multi(p, q, {0.0});
  for (std::size_t t = 0; t < 7; ++t) {
    CHECK(std::equal(same[t].probs().begin(), same[t].probs().end(), p[t].probs().begin()));
  }
  // Joint argmax of a product equals the tuple of marginal argmaxes.
  const ActionDistribution small({out[0], out[1]});
  double best = -1.0;
  std::pair<std::size_t, std::size_t> arg;
  for (std::size_t i = 0; i < 21; ++i) {
    for (std::size_t j = 0; j < 21; ++j) {
      const double joint = small[0][i] * small[1][j];
      if (joint > best) {
        best = joint;
        arg = {i, j};
      }
    }
  }
  CHECK(arg.first == small[0].argmax());
  CHECK(arg.second == small[1].argmax());

  const ActionDistribution shorter({pd[0]});
  CHECK_THROWS_AS(contrastive_combine_multi(p, shorter, {1.0}), Error);
}

TEST_CASE("greedy selection breaks ties toward the lower bin") {
  Rng rng(1);
  const ActionDistribution d({CategoricalDist(BinGrid(0.0, 3.0, 3), {0.4, 0.4, 0.2})});
  const auto a = select_action(d, {1.0, 1e-8, Selection::kGreedy}, rng);
  CHECK(a[0] == doctest::Approx(0.5));

  // A single certain bin centered at 0.25.
  const ActionDistribution certain({CategoricalDist(BinGrid(0.0, 1.0, 2), {1.0, 0.0})});
  CHECK(select_action(certain, {}, rng)[0] == 0.25);
}

TEST_CASE("sampled selection frequencies match probabilities") {
  const std::vector<double> probs{0.1, 0.25, 0.05, 0.4, 0.2};
  const CategoricalDist d(BinGrid(0.0, 5.0, 5), probs);
  Rng rng(99);
  const int draws = 100000;
  std::vector<int> counts(5, 0);
  for (int i = 0; i < draws; ++i) ++counts[select_bin(d, Selection::kSample, rng)];
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double freq = counts[k] / static_cast<double>(draws);
    const double tol = 3.0 * std::sqrt(probs[k] * (1.0 - probs[k]) / draws);
    CHECK(std::abs(freq - probs[k]) <= tol);
  }
  Rng a(7);
  Rng b(7);
  for (int i = 0; i < 100; ++i) {
    REQUIRE(select_bin(d, Selection::kSample, a) == select_bin(d, Selection::kSample, b));
  }
}
