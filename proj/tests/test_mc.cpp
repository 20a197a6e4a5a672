#include <doctest.h>

#include <cmath>
#include <random>

#include "relsens/config.hpp"
#include "relsens/errors.hpp"
#include "relsens/mc.hpp"
#include "relsens/normal.hpp"

using namespace relsens;

namespace {

ProblemConfig parse_cfg(const char* text) { return ProblemConfig::parse(text); }

const char* kSingleLinear = R"(
[variables]
U1 = normal(0, 1)
U2 = normal(0, 1)
[limit_states]
g = 2 - 0.70710678118654752*U1 - 0.70710678118654752*U2
[system]
mode = component
)";

}  // namespace

TEST_CASE("indicator evaluates cut sets") {
  CHECK(indicator(SystemDefinition::series(2), {0.5, -0.1}) == 1);
  CHECK(indicator(SystemDefinition::parallel(2), {0.5, -0.1}) == 0);
  CHECK(indicator(SystemDefinition::parallel(2), {-0.5, -0.1}) == 1);
  // Beam-bar cut sets {1,2}, {3,4}, {3,5}: the first is jointly failed.
  const auto sys = SystemDefinition::general(5, {{0, 1}, {2, 3}, {2, 4}});
  CHECK(indicator(sys, {-1.0, -1.0, 1.0, 1.0, 1.0}) == 1);
  CHECK(indicator(sys, {-1.0, 1.0, 1.0, 1.0, 1.0}) == 0);
  CHECK_THROWS_AS(indicator(sys, {1.0, 1.0}), DimensionMismatchError);
}

TEST_CASE("indicator algebra matches the product formulas") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 5);
    std::vector<double> g(static_cast<std::size_t>(m));
    for (auto& v : g) v = unif(rng);
    std::vector<int> z(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) z[static_cast<std::size_t>(i)] = g[static_cast<std::size_t>(i)] <= 0.0;
    int prod_safe = 1, prod_fail = 1;
    for (int zi : z) {
      prod_safe *= (1 - zi);
      prod_fail *= zi;
    }
    CHECK(indicator(SystemDefinition::series(m), g) == 1 - prod_safe);
    CHECK(indicator(SystemDefinition::parallel(m), g) == prod_fail);
  }
}

TEST_CASE("crude MC reproduces the linear component probability") {
  const auto problem = parse_cfg(kSingleLinear).build();
  const auto est = crude_mc_probability(problem, 400'000, 42);
  CHECK(std::abs(est.value - norm_cdf(-2.0)) < 3.0 * est.std_error);
  CHECK(est.std_error ==
        doctest::Approx(std::sqrt(est.value * (1 - est.value) / 400'000)).epsilon(1e-12));
}

TEST_CASE("seed determinism is bit-exact") {
  const auto problem = parse_cfg(kSingleLinear).build();
  const auto a = crude_mc_probability(problem, 100'000, 9);
  const auto b = crude_mc_probability(problem, 100'000, 9);
  CHECK(a.value == b.value);
  const auto c = crude_mc_probability(problem, 100'000, 10);
  CHECK(a.value != c.value);

  const auto pf1 = pick_freeze_indices(problem, 50'000, 3);
  const auto pf2 = pick_freeze_indices(problem, 50'000, 3);
  CHECK(pf1.first_order[0].value == pf2.first_order[0].value);
  CHECK(pf1.total_effect[1].value == pf2.total_effect[1].value);
  CHECK(pf1.evaluations == 50'000 * 4);
}

TEST_CASE("std error shrinks like 1/sqrt(2) when n doubles") {
  const auto problem = parse_cfg(kSingleLinear).build();
  double ratio_sum = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const auto small = crude_mc_probability(problem, 40'000, 100 + rep);
    const auto big = crude_mc_probability(problem, 80'000, 200 + rep);
    ratio_sum += big.std_error / small.std_error;
  }
  const double mean_ratio = ratio_sum / 10.0;
  CHECK(std::abs(mean_ratio - 1.0 / std::sqrt(2.0)) < 0.2 / std::sqrt(2.0));
}

TEST_CASE("pick-freeze on a single-variable event") {
  // g depends on U1 only: S_1 = S^T_1 = 1 and S_2 = S^T_2 = 0.
  const auto problem = parse_cfg(R"(
[variables]
U1 = normal(0, 1)
U2 = normal(0, 1)
[limit_states]
g = 1 - U1
[system]
mode = component
)").build();
  const auto pf = pick_freeze_indices(problem, 400'000, 17);
  CHECK(std::abs(pf.first_order[0].value - 1.0) < 3.0 * pf.first_order[0].std_error + 0.01);
  CHECK(std::abs(pf.total_effect[0].value - 1.0) < 3.0 * pf.total_effect[0].std_error + 0.01);
  CHECK(std::abs(pf.first_order[1].value) < 3.0 * pf.first_order[1].std_error + 1e-9);
  CHECK(std::abs(pf.total_effect[1].value) < 3.0 * pf.total_effect[1].std_error + 1e-9);
  CHECK(std::abs(pf.p.value - norm_cdf(-1.0)) < 3.0 * pf.p.std_error);
}

TEST_CASE("error paths") {
  const auto problem = parse_cfg(kSingleLinear).build();
  CHECK_THROWS_AS(crude_mc_probability(problem, 100, 1), InvalidArgumentError);
  CHECK_THROWS_AS(pick_freeze_indices(problem, 5000, 1), InvalidArgumentError);

  // No failures within the sample: degenerate variance.
  const auto impossible = parse_cfg(R"(
[variables]
U1 = normal(0, 1)
[limit_states]
g = 40 - U1
[system]
mode = component
)").build();
  CHECK_THROWS_AS(pick_freeze_indices(impossible, 20'000, 1), DegenerateVarianceError);
}
