#include <doctest.h>

#include <cmath>
#include <random>

#include "relsens/distributions.hpp"
#include "relsens/errors.hpp"
#include "relsens/normal.hpp"

using namespace relsens;

namespace {

// Independent oracle: invert the CDF by bisection instead of the closed form.
double quantile_by_bisection(const MarginalDistribution& d, double p, double lo, double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (d.cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("standard and shifted normal transforms") {
  const auto std_normal = MarginalDistribution::normal(0.0, 1.0);
  CHECK(std_normal.to_u(1.3) == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(std_normal.from_u(2.0) == doctest::Approx(2.0).epsilon(1e-15));

  const auto n5020 = MarginalDistribution::normal(50.0, 20.0);
  CHECK(n5020.to_u(50.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(n5020.from_u(0.0) == doctest::Approx(50.0).epsilon(1e-15));
}

TEST_CASE("lognormal moment matching and closed-form transform") {
  const auto ln = MarginalDistribution::lognormal(200.0, 30.0);
  // Moment matching: zeta = sqrt(ln(1 + (30/200)^2)), lambda = ln 200 - zeta^2/2.
  CHECK(ln.log_shape() == doctest::Approx(0.14916638004195087).epsilon(1e-14));
  CHECK(ln.log_scale() == doctest::Approx(5.287192062080626).epsilon(1e-14));
  // The median maps to u = 0.
  const double median = std::exp(ln.log_scale());
  CHECK(median == doctest::Approx(197.78727057365936).epsilon(1e-13));
  CHECK(ln.to_u(median) == doctest::Approx(0.0).epsilon(1e-12));
  // u = 1 maps to exp(lambda + zeta).
  CHECK(ln.from_u(1.0) == doctest::Approx(229.6045409995823).epsilon(1e-13));

  // Cross-check the closed form against numeric CDF inversion.
  for (double u : {-2.0, -0.7, 0.3, 1.0, 2.4}) {
    const double x_closed = ln.from_u(u);
    const double x_oracle = quantile_by_bisection(ln, norm_cdf(u), 1e-6, 1e4);
    CHECK(x_closed == doctest::Approx(x_oracle).epsilon(1e-9));
  }
}

TEST_CASE("quantile(cdf(x)) = x to 1e-12 relative") {
  const auto ln = MarginalDistribution::lognormal(50.0, 20.0);
  for (double x : {5.0, 20.0, 50.0, 80.0, 200.0}) {
    CHECK(ln.quantile(ln.cdf(x)) == doctest::Approx(x).epsilon(1e-12));
  }
  const auto nm = MarginalDistribution::normal(-3.0, 0.5);
  for (double x : {-4.0, -3.0, -2.5, -1.0}) {
    CHECK(nm.quantile(nm.cdf(x)) == doctest::Approx(x).epsilon(1e-12));
  }
}

TEST_CASE("round trip u -> x -> u over random draws") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  const MarginalDistribution dists[] = {MarginalDistribution::normal(10.0, 3.0),
                                        MarginalDistribution::lognormal(200.0, 30.0),
                                        MarginalDistribution::lognormal(50.0, 20.0)};
  for (const auto& d : dists) {
    for (int i = 0; i < 1000; ++i) {
      const double u = 3.0 * normal(rng);
      CHECK(std::abs(d.to_u(d.from_u(u)) - u) < 1e-8);
    }
  }
}

TEST_CASE("transforms are strictly increasing") {
  const auto ln = MarginalDistribution::lognormal(200.0, 30.0);
  double prev_x = ln.from_u(-6.0);
  for (double u = -5.75; u <= 6.0; u += 0.25) {
    const double x = ln.from_u(u);
    CHECK(x > prev_x);
    prev_x = x;
  }
  double prev_u = ln.to_u(1.0);
  for (double x = 10.0; x <= 500.0; x += 10.0) {
    const double u = ln.to_u(x);
    CHECK(u > prev_u);
    prev_u = u;
  }
}

TEST_CASE("sample transform consistency: empirical moments match (mean, std)") {
  const long long n = 1'000'000;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal(0.0, 1.0);
  const MarginalDistribution dists[] = {MarginalDistribution::normal(50.0, 20.0),
                                        MarginalDistribution::lognormal(200.0, 30.0)};
  for (const auto& d : dists) {
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (long long i = 0; i < n; ++i) {
      const double x = d.from_u(normal(rng));
      s1 += x;
      s2 += x * x;
    }
    const double mean = s1 / static_cast<double>(n);
    const double var = s2 / static_cast<double>(n) - mean * mean;
    const double sd = std::sqrt(var);
    // Second pass for the fourth central moment (std error of the std estimate).
    std::mt19937_64 rng2(99);
    for (long long i = 0; i < n; ++i) {
      const double x = d.from_u(normal(rng2));
      s4 += std::pow(x - mean, 4);
    }
    const double m4 = s4 / static_cast<double>(n);
    const double se_mean = sd / std::sqrt(static_cast<double>(n));
    const double se_var = std::sqrt(std::max(m4 - var * var, 0.0) / static_cast<double>(n));
    const double se_sd = se_var / (2.0 * sd);
    CHECK(std::abs(mean - d.mean()) < 3.0 * se_mean);
    CHECK(std::abs(sd - d.std_dev()) < 3.0 * se_sd);
  }
}

TEST_CASE("error paths") {
  const auto ln = MarginalDistribution::lognormal(200.0, 30.0);
  CHECK_THROWS_AS(ln.to_u(-1.0), OutOfSupportError);
  CHECK_THROWS_AS(ln.to_u(0.0), OutOfSupportError);
  const auto nm = MarginalDistribution::normal(0.0, 1.0);
  CHECK_THROWS_AS(nm.to_u(1e300), NonFiniteError);   // CDF rounds to 1
  CHECK_THROWS_AS(nm.to_u(-1e300), NonFiniteError);  // CDF rounds to 0
  CHECK_THROWS_AS(MarginalDistribution::normal(0.0, 0.0), InvalidArgumentError);
  CHECK_THROWS_AS(MarginalDistribution::normal(0.0, -2.0), InvalidArgumentError);
  CHECK_THROWS_AS(MarginalDistribution::lognormal(-5.0, 2.0), InvalidArgumentError);
}

TEST_CASE("random vector validation and vector transforms") {
  RandomVector rv;
  rv.names = {"a", "b"};
  rv.marginals = {MarginalDistribution::normal(0.0, 1.0),
                  MarginalDistribution::lognormal(200.0, 30.0)};
  rv.validate();
  Eigen::VectorXd u(2);
  u << 0.5, -0.25;
  const Eigen::VectorXd x = rv.from_standard_normal(u);
  const Eigen::VectorXd back = rv.to_standard_normal(x);
  CHECK((back - u).norm() < 1e-12);

  RandomVector bad;
  bad.names = {"a", "a"};
  bad.marginals = rv.marginals;
  CHECK_THROWS_AS(bad.validate(), InvalidArgumentError);
}
