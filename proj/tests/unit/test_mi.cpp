#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "pcd/error.hpp"
#include "pcd/mi.hpp"

using namespace pcd;

namespace {

// I(X;Y) = H(X) + H(Y) - H(X,Y), entropies from counts.
double entropy_of(const std::map<std::uint64_t, double>& counts, double n) {
  double h = 0.0;
  for (const auto& [k, c] : counts) h -= (c / n) * std::log2(c / n);
  return h;
}

double mi_oracle(const std::vector<std::uint64_t>& x, const std::vector<std::uint64_t>& y) {
  std::map<std::uint64_t, double> cx, cy, cxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cx[x[i]] += 1.0;
    cy[y[i]] += 1.0;
    cxy[x[i] * 1000003ULL + y[i]] += 1.0;
  }
  const double n = static_cast<double>(x.size());
  return entropy_of(cx, n) + entropy_of(cy, n) - entropy_of(cxy, n);
}

}  // namespace

TEST_CASE("quadrant bits") {
  CHECK(quadrant({0.1, 0.1}) == 3);
  CHECK(quadrant({-0.1, 0.1}) == 2);
  CHECK(quadrant({0.1, -0.1}) == 1);
  CHECK(quadrant({-0.1, -0.1}) == 0);
  CHECK(quadrant({0.0, 0.0}) == 3);
}

TEST_CASE("plug-in estimator limits") {
  // A bijection of a uniform four-valued variable carries two bits.
  std::vector<std::uint64_t> x, y;
  for (int rep = 0; rep < 250; ++rep) {
    for (std::uint64_t q = 0; q < 4; ++q) {
      x.push_back(q);
      y.push_back(7 * q + 2);
    }
  }
  CHECK(plugin_mutual_information(x, y) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(plugin_entropy(x) == doctest::Approx(2.0).epsilon(1e-12));

  const std::vector<std::uint64_t> constant(x.size(), 5);
  CHECK(plugin_mutual_information(x, constant) == 0.0);
  CHECK(plugin_mutual_information(constant, x) == 0.0);
  CHECK(plugin_entropy(constant) == 0.0);

  CHECK_THROWS_AS(plugin_mutual_information(x, std::vector<std::uint64_t>(3, 0)), Error);
}

TEST_CASE("plug-in estimator against the entropy identity") {
  std::mt19937_64 gen(41);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 50 + gen() % 500;
    const std::uint64_t kx = 1 + gen() % 6;
    const std::uint64_t ky = 1 + gen() % 6;
    std::vector<std::uint64_t> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = gen() % kx;
      // Partial dependence on x.
      y[i] = (gen() % 3 == 0) ? x[i] % ky : gen() % ky;
    }
    const double mi = plugin_mutual_information(x, y);
    CHECK(mi == doctest::Approx(mi_oracle(x, y)).epsilon(1e-9));
    CHECK(mi >= -1e-12);
    CHECK(mi <= std::min(plugin_entropy(x), plugin_entropy(y)) + 1e-12);
    CHECK(plugin_mutual_information(y, x) == doctest::Approx(mi).epsilon(1e-12));
  }
}

TEST_CASE("shuffling removes dependence up to plug-in bias") {
  std::mt19937_64 gen(8);
  const std::size_t n = 20000;
  std::vector<std::uint64_t> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = gen() % 4;
    y[i] = (gen() % 4 == 0) ? gen() % 4 : x[i];
  }
  const double dependent = plugin_mutual_information(x, y);
  std::shuffle(y.begin(), y.end(), gen);
  const double shuffled = plugin_mutual_information(x, y);
  CHECK(dependent > 0.5);
  // Bias of the plug-in estimate is about (kx-1)(ky-1)/(2 n ln 2).
  CHECK(shuffled < 10.0 * 9.0 / (2.0 * n * std::log(2.0)));
}

TEST_CASE("estimate_mi on the autoregressive policy") {
  PolicySpec clean;
  clean.kind = PolicyKind::kAutoregressive;
  clean.mixture.lambda = 0.0;
  PolicySpec biased = clean;
  biased.mixture.lambda = 0.9;
  const auto task = make_task(TaskKind::kReach);
  const MIReport a = estimate_mi(clean, task, NoShift{}, 1000, 3);
  const MIReport b = estimate_mi(biased, task, NoShift{}, 1000, 3);
  CHECK(a.samples > 1000);
  CHECK(b.mi_action_vs_spurious > a.mi_action_vs_spurious);
  CHECK(a.mi_action_vs_target > a.mi_action_vs_spurious);
  CHECK(a.mi_action_vs_spurious <= std::min(a.entropy_action, a.entropy_spurious) + 1e-12);
  CHECK_THROWS_AS(estimate_mi(clean, task, NoShift{}, 10, 3), Error);
}
