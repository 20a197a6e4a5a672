#ifndef RELSENS_DISTRIBUTIONS_HPP
#define RELSENS_DISTRIBUTIONS_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

namespace relsens {

enum class DistKind { Normal, Lognormal };

// One independent input variable, parameterized by the mean and standard
// deviation of the physical quantity. Lognormal parameters (lambda, zeta)
// are recovered internally by moment matching.
class MarginalDistribution {
 public:
  static MarginalDistribution normal(double mean, double std_dev);
  static MarginalDistribution lognormal(double mean, double std_dev);

  DistKind kind() const { return kind_; }
  double mean() const { return mean_; }
  double std_dev() const { return std_; }

  // Lognormal log-space parameters; zero for the normal kind.
  double log_scale() const { return lambda_; }
  double log_shape() const { return zeta_; }

  bool in_support(double x) const;
  double cdf(double x) const;
  double pdf(double x) const;
  double quantile(double p) const;

  // u = Phi^-1(F(x)). Throws OutOfSupportError / NonFiniteError.
  double to_u(double x) const;
  // x = F^-1(Phi(u)) and its derivative dx/du; closed form for both kinds.
  double from_u(double u) const;
  double from_u_derivative(double u) const;

 private:
  MarginalDistribution(DistKind kind, double mean, double std_dev);

  DistKind kind_;
  double mean_;
  double std_;
  double lambda_ = 0.0;  // lognormal: mean of ln X
  double zeta_ = 0.0;    // lognormal: std of ln X
};

// Independent input random vector X with named components.
struct RandomVector {
  std::vector<std::string> names;
  std::vector<MarginalDistribution> marginals;

  int dim() const { return static_cast<int>(marginals.size()); }
  int index_of(const std::string& name) const;  // -1 if absent

  // Throws InvalidArgumentError on duplicate names or size mismatch.
  void validate() const;

  Eigen::VectorXd to_standard_normal(const Eigen::VectorXd& x) const;
  Eigen::VectorXd from_standard_normal(const Eigen::VectorXd& u) const;
};

}  // namespace relsens

#endif  // RELSENS_DISTRIBUTIONS_HPP
