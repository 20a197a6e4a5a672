#include <doctest.h>

#include <cmath>
#include <random>

#include "relsens/config.hpp"
#include "relsens/errors.hpp"
#include "relsens/mc.hpp"
#include "relsens/normal.hpp"
#include "relsens/sensitivity.hpp"

using namespace relsens;

namespace {

ComponentLinearization make_lin(const Eigen::VectorXd& alpha, double beta) {
  ComponentLinearization lin;
  lin.alpha = alpha;
  lin.beta = beta;
  lin.u_star = beta * alpha;
  lin.converged = true;
  lin.iterations = 1;
  return lin;
}

// Two linear components in two standard normal variables; alpha_2 is alpha_1
// rotated counterclockwise by theta.
LinearizedSystem two_component_system(double theta_deg, double beta1, double beta2,
                                      SystemMode mode) {
  const double th = theta_deg * M_PI / 180.0;
  const double s = 1.0 / std::sqrt(2.0);
  Eigen::VectorXd a1(2), a2(2);
  a1 << s, s;
  a2 << s * (std::cos(th) - std::sin(th)), s * (std::cos(th) + std::sin(th));
  const SystemDefinition sys =
      mode == SystemMode::Parallel ? SystemDefinition::parallel(2) : SystemDefinition::series(2);
  return assemble_system({make_lin(a1, beta1), make_lin(a2, beta2)}, sys);
}

LinearizedSystem single_component(const Eigen::VectorXd& alpha, double beta) {
  return assemble_system({make_lin(alpha, beta)}, SystemDefinition::component());
}

const MvnOptions kOpts{1'000'000, 25, 42};

}  // namespace

TEST_CASE("m = 1 reduction: the closed bivariate form") {
  Eigen::VectorXd alpha(2);
  alpha << std::sqrt(0.5), std::sqrt(0.5);
  SensitivityEngine eng(single_component(alpha, 2.0), kOpts);

  const Estimate p = eng.probability();
  CHECK(p.value == doctest::Approx(norm_cdf(-2.0)).epsilon(1e-10));

  // ||alpha_v||^2 = 0.5: Var = Phi2((-2,-2), rho=0.5) - Phi(-2)^2.
  const double expected = 0.0035353777315034174;
  const Estimate vs = eng.var_cond_exp({0}, SystemMode::Series);
  const Estimate vp = eng.var_cond_exp({0}, SystemMode::Parallel);
  CHECK(std::abs(vs.value - expected) < std::max(3.0 * vs.std_error, 2e-5));
  CHECK(std::abs(vp.value - expected) < std::max(3.0 * vp.std_error, 2e-5));
}

TEST_CASE("m = 1 var_cond_exp against a sampling oracle") {
  // Var over U_v of Phi((alpha_v u - beta)/||alpha_~v||), 10^7 draws.
  Eigen::VectorXd alpha(2);
  alpha << std::sqrt(0.5), std::sqrt(0.5);
  const double beta = 2.0;
  const double a_v = alpha[0];
  const double rest = std::sqrt(1.0 - a_v * a_v);
  std::mt19937_64 rng(314159);
  std::normal_distribution<double> normal(0.0, 1.0);
  const long long n = 10'000'000;
  double s1 = 0.0, s2 = 0.0;
  for (long long i = 0; i < n; ++i) {
    const double h = norm_cdf((a_v * normal(rng) - beta) / rest);
    s1 += h;
    s2 += h * h;
  }
  const double mean = s1 / static_cast<double>(n);
  const double oracle = s2 / static_cast<double>(n) - mean * mean;

  SensitivityEngine eng(single_component(alpha, beta), kOpts);
  const Estimate v = eng.var_cond_exp({0}, SystemMode::Parallel);
  // Oracle std error ~ sqrt(Var(h^2))/sqrt(n), comfortably inside 2e-6.
  CHECK(std::abs(v.value - oracle) < 3.0 * v.std_error + 2e-6);
}

TEST_CASE("empty and full conditioning sets") {
  LinearizedSystem ls = two_component_system(37.0, 2.0, 2.2, SystemMode::Series);
  SensitivityEngine eng(ls, kOpts);
  for (SystemMode mode : {SystemMode::Series, SystemMode::Parallel}) {
    const Estimate v0 = eng.var_cond_exp({}, mode);
    CHECK(v0.value <= 3.0 * v0.std_error + 1e-12);
    const Estimate vf = eng.var_cond_exp({0, 1}, mode);
    const Estimate p = mode == SystemMode::Parallel ? eng.parallel_probability()
                                                    : eng.series_probability();
    CHECK(std::abs(vf.value - p.value * (1.0 - p.value)) <
          3.0 * (vf.std_error + p.std_error) + 1e-12);
    // Total effect of the full set is 1.
    const Estimate st = eng.total_effect_index({0, 1}, mode);
    CHECK(std::abs(st.value - 1.0) < 3.0 * st.std_error + 1e-9);
  }
}

TEST_CASE("ordering S <= S^T across modes and angles") {
  for (double theta : {10.0, 45.0, 100.0, 150.0}) {
    LinearizedSystem ls = two_component_system(theta, 2.0, 2.5, SystemMode::Series);
    SensitivityEngine eng(ls, kOpts);
    for (SystemMode mode : {SystemMode::Series, SystemMode::Parallel}) {
      for (int i = 0; i < 2; ++i) {
        const Estimate s = eng.first_order_index(i, mode);
        const Estimate st = eng.total_effect_index({i}, mode);
        CHECK(s.value <= st.value + 3.0 * (s.std_error + st.std_error) + 1e-9);
      }
    }
  }
}

TEST_CASE("swapping v and ~v swaps the two conditional variances") {
  LinearizedSystem ls = two_component_system(63.0, 2.0, 2.4, SystemMode::Series);
  SensitivityEngine eng(ls, kOpts);
  const Estimate a = eng.var_cond_exp({0}, SystemMode::Series);
  const Estimate b = eng.var_cond_exp_complement({1}, SystemMode::Series);
  CHECK(a.value == b.value);  // same conditioning subset, same cached call
  const Estimate c = eng.var_cond_exp({1}, SystemMode::Parallel);
  const Estimate d = eng.var_cond_exp_complement({0}, SystemMode::Parallel);
  CHECK(c.value == d.value);
}

TEST_CASE("closed index of a singleton equals the first-order index") {
  LinearizedSystem ls = two_component_system(45.0, 2.0, 2.0, SystemMode::Parallel);
  SensitivityEngine eng(ls, kOpts);
  const Estimate s = eng.first_order_index(1, SystemMode::Parallel);
  const Estimate c = eng.closed_index({1}, SystemMode::Parallel);
  CHECK(s.value == c.value);
  // Closed index of the full set is 1.
  const Estimate full = eng.closed_index({0, 1}, SystemMode::Parallel);
  CHECK(std::abs(full.value - 1.0) < 3.0 * full.std_error + 1e-9);
}

TEST_CASE("variance components satisfy the additive recursion") {
  LinearizedSystem ls = two_component_system(70.0, 2.0, 2.2, SystemMode::Series);
  SensitivityEngine eng(ls, kOpts);
  const Estimate v1 = eng.variance_component({0}, SystemMode::Series);
  const Estimate v2 = eng.variance_component({1}, SystemMode::Series);
  const Estimate v12 = eng.variance_component({0, 1}, SystemMode::Series);
  const Estimate total = eng.var_cond_exp({0, 1}, SystemMode::Series);
  CHECK(v1.value + v2.value + v12.value == doctest::Approx(total.value).epsilon(1e-12));
  // |v| = 1 equals var_cond_exp directly.
  CHECK(v1.value == eng.var_cond_exp({0}, SystemMode::Series).value);
}

TEST_CASE("theta = 0: system indices equal the component index") {
  LinearizedSystem ls = two_component_system(0.0, 2.0, 2.0, SystemMode::Series);
  SensitivityEngine eng(ls, kOpts);
  Eigen::VectorXd alpha(2);
  alpha << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  SensitivityEngine comp(single_component(alpha, 2.0), kOpts);

  for (SystemMode mode : {SystemMode::Series, SystemMode::Parallel}) {
    const Estimate sys_s = eng.first_order_index(1, mode);
    const Estimate comp_s = comp.first_order_index(1, SystemMode::Series);
    CHECK(std::abs(sys_s.value - comp_s.value) <
          3.0 * (sys_s.std_error + comp_s.std_error) + 1e-6);
    const Estimate sys_t = eng.total_effect_index({1}, mode);
    const Estimate comp_t = comp.total_effect_index({1}, SystemMode::Series);
    CHECK(std::abs(sys_t.value - comp_t.value) <
          3.0 * (sys_t.std_error + comp_t.std_error) + 1e-6);
  }
}

TEST_CASE("general-system path reduces to the series and parallel paths") {
  // Series as singleton cut sets.
  LinearizedSystem ser = two_component_system(50.0, 2.0, 2.3, SystemMode::Series);
  LinearizedSystem gen = ser;
  gen.system = SystemDefinition::general(2, {{0}, {1}});
  SensitivityEngine es(ser, kOpts);
  SensitivityEngine eg(gen, kOpts);
  const Estimate ps = es.series_probability();
  const Estimate pg = eg.system_probability();
  CHECK(std::abs(ps.value - pg.value) < 3.0 * (ps.std_error + pg.std_error) + 1e-9);
  for (int i = 0; i < 2; ++i) {
    const Estimate a = es.first_order_index(i, SystemMode::Series);
    const Estimate b = eg.sys_first_order_index(i);
    CHECK(std::abs(a.value - b.value) < 3.0 * (a.std_error + b.std_error) + 1e-6);
    const Estimate at = es.total_effect_index({i}, SystemMode::Series);
    const Estimate bt = eg.sys_total_effect_index({i});
    CHECK(std::abs(at.value - bt.value) < 3.0 * (at.std_error + bt.std_error) + 1e-4);
  }

  // K = 1 equals the parallel path.
  LinearizedSystem par = two_component_system(50.0, 2.0, 2.3, SystemMode::Parallel);
  LinearizedSystem gen1 = par;
  gen1.system = SystemDefinition::general(2, {{0, 1}});
  SensitivityEngine ep(par, kOpts);
  SensitivityEngine eg1(gen1, kOpts);
  const Estimate pp = ep.parallel_probability();
  const Estimate pg1 = eg1.system_probability();
  CHECK(std::abs(pp.value - pg1.value) < 3.0 * (pp.std_error + pg1.std_error) + 1e-9);
  for (int i = 0; i < 2; ++i) {
    const Estimate a = ep.first_order_index(i, SystemMode::Parallel);
    const Estimate b = eg1.sys_first_order_index(i);
    CHECK(std::abs(a.value - b.value) < 3.0 * (a.std_error + b.std_error) + 1e-6);
  }
}

TEST_CASE("illustrative theta=90 parallel: V_12 against a pick-freeze oracle") {
  // Linear-Gaussian problem, so the FORM indices are exact and must agree
  // with sampling to statistical accuracy.
  LinearizedSystem ls = two_component_system(90.0, 2.0, 2.0, SystemMode::Parallel);
  SensitivityEngine eng(ls, kOpts);
  const Estimate p = eng.parallel_probability();
  const Estimate v12 = eng.variance_component({0, 1}, SystemMode::Parallel);

  ProblemConfig cfg = ProblemConfig::parse(R"(
[variables]
U1 = normal(0, 1)
U2 = normal(0, 1)
[limit_states]
g1 = 2 - 0.70710678118654752*U1 - 0.70710678118654752*U2
g2 = 2 + 0.70710678118654752*U1 - 0.70710678118654752*U2
[system]
mode = parallel
)");
  const auto problem = cfg.build();
  const auto pf = pick_freeze_indices(problem, 10'000'000, 11);
  const double pq = pf.p.value * (1.0 - pf.p.value);
  const double v12_pf =
      pq * (1.0 - pf.first_order[0].value - pf.first_order[1].value);
  const double se_pf = pq * std::sqrt(std::pow(pf.first_order[0].std_error, 2) +
                                      std::pow(pf.first_order[1].std_error, 2)) +
                       std::abs(1.0 - 2.0 * pf.p.value) * pf.p.std_error;
  CHECK(std::abs(p.value - pf.p.value) < 3.0 * (p.std_error + pf.p.std_error));
  CHECK(std::abs(v12.value - v12_pf) < 3.0 * (v12.std_error + se_pf));
}

TEST_CASE("near-degenerate conditional widths fall back to the paired route") {
  // alpha almost entirely inside v: the quadrature guard must reject this
  // and the paired estimator still produce a sane, clamped value.
  Eigen::VectorXd alpha(2);
  alpha << 0.999, std::sqrt(1.0 - 0.999 * 0.999);
  SensitivityEngine eng(single_component(alpha, 2.0), kOpts);
  const Estimate s = eng.first_order_index(0, SystemMode::Series);
  CHECK(s.value >= 0.0);
  CHECK(s.value <= 1.0 + 3.0 * s.std_error);
  // Nearly all of the variance is explained by U1.
  CHECK(s.value > 0.8);
}

TEST_CASE("system probability term counts are guarded") {
  Eigen::VectorXd alpha(2);
  alpha << 0.6, 0.8;
  std::vector<ComponentLinearization> lins(21, make_lin(alpha, 2.0));
  std::vector<std::vector<int>> cuts;
  for (int i = 0; i < 21; ++i) cuts.push_back({i});
  LinearizedSystem ls = assemble_system(lins, SystemDefinition::general(21, cuts));
  SensitivityEngine eng(ls, kOpts);
  CHECK_THROWS_AS(eng.system_probability(), TooManyCutSetsError);
  CHECK_THROWS_AS(eng.sys_first_order_index(0), TooManyCutSetsError);
}

TEST_CASE("subset size guard") {
  LinearizedSystem ls = two_component_system(30.0, 2.0, 2.0, SystemMode::Series);
  SensitivityEngine eng(ls, kOpts);
  std::vector<int> big(13);
  for (int i = 0; i < 13; ++i) big[static_cast<std::size_t>(i)] = i % 2;
  CHECK_THROWS_AS(eng.variance_component(big, SystemMode::Series), SubsetTooLargeError);
}
