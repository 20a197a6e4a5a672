#include "relsens/distributions.hpp"

#include <cmath>
#include <set>

#include "relsens/errors.hpp"
#include "relsens/normal.hpp"

namespace relsens {

namespace {
// |u| beyond which Phi(u) falls outside [1e-300, 1 - 1e-300]; transforms are
// clamped here so U-space values stay finite.
constexpr double kUMax = 37.05;
}  // namespace

MarginalDistribution::MarginalDistribution(DistKind kind, double mean, double std_dev)
    : kind_(kind), mean_(mean), std_(std_dev) {
  if (!(std_dev > 0.0) || !std::isfinite(std_dev) || !std::isfinite(mean)) {
    throw InvalidArgumentError("distribution: std_dev must be finite and > 0");
  }
  if (kind == DistKind::Lognormal) {
    if (!(mean > 0.0)) {
      throw InvalidArgumentError("distribution: lognormal mean must be > 0");
    }
    const double cv = std_dev / mean;
    zeta_ = std::sqrt(std::log1p(cv * cv));
    lambda_ = std::log(mean) - 0.5 * zeta_ * zeta_;
  }
}

MarginalDistribution MarginalDistribution::normal(double mean, double std_dev) {
  return MarginalDistribution(DistKind::Normal, mean, std_dev);
}

MarginalDistribution MarginalDistribution::lognormal(double mean, double std_dev) {
  return MarginalDistribution(DistKind::Lognormal, mean, std_dev);
}

bool MarginalDistribution::in_support(double x) const {
  if (!std::isfinite(x)) return false;
  return kind_ == DistKind::Normal || x > 0.0;
}

double MarginalDistribution::cdf(double x) const {
  switch (kind_) {
    case DistKind::Normal:
      return norm_cdf((x - mean_) / std_);
    case DistKind::Lognormal:
      if (x <= 0.0) return 0.0;
      return norm_cdf((std::log(x) - lambda_) / zeta_);
  }
  return 0.0;
}

double MarginalDistribution::pdf(double x) const {
  switch (kind_) {
    case DistKind::Normal:
      return norm_pdf((x - mean_) / std_) / std_;
    case DistKind::Lognormal:
      if (x <= 0.0) return 0.0;
      return norm_pdf((std::log(x) - lambda_) / zeta_) / (zeta_ * x);
  }
  return 0.0;
}

double MarginalDistribution::quantile(double p) const {
  const double u = norm_quantile(p);
  return from_u(u);
}

double MarginalDistribution::to_u(double x) const {
  if (!in_support(x)) {
    throw OutOfSupportError("distribution: value outside the support of the marginal");
  }
  double u = 0.0;
  switch (kind_) {
    case DistKind::Normal:
      u = (x - mean_) / std_;
      break;
    case DistKind::Lognormal:
      u = (std::log(x) - lambda_) / zeta_;
      break;
  }
  if (!std::isfinite(u) || std::abs(u) > kUMax) {
    throw NonFiniteError("distribution: CDF rounds to 0 or 1 in working precision");
  }
  return u;
}

double MarginalDistribution::from_u(double u) const {
  switch (kind_) {
    case DistKind::Normal:
      return mean_ + std_ * u;
    case DistKind::Lognormal:
      return std::exp(lambda_ + zeta_ * u);
  }
  return 0.0;
}

double MarginalDistribution::from_u_derivative(double u) const {
  switch (kind_) {
    case DistKind::Normal:
      return std_;
    case DistKind::Lognormal:
      return zeta_ * std::exp(lambda_ + zeta_ * u);
  }
  return 0.0;
}

int RandomVector::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

void RandomVector::validate() const {
  if (names.size() != marginals.size()) {
    throw InvalidArgumentError("random vector: names and marginals differ in length");
  }
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) {
      throw InvalidArgumentError("random vector: duplicate variable name '" + n + "'");
    }
  }
}

Eigen::VectorXd RandomVector::to_standard_normal(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) {
    throw DimensionMismatchError("random vector: x has wrong length");
  }
  Eigen::VectorXd u(x.size());
  for (int i = 0; i < x.size(); ++i) u[i] = marginals[i].to_u(x[i]);
  return u;
}

Eigen::VectorXd RandomVector::from_standard_normal(const Eigen::VectorXd& u) const {
  if (u.size() != dim()) {
    throw DimensionMismatchError("random vector: u has wrong length");
  }
  Eigen::VectorXd x(u.size());
  for (int i = 0; i < u.size(); ++i) x[i] = marginals[i].from_u(u[i]);
  return x;
}

}  // namespace relsens
