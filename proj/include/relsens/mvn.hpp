#ifndef RELSENS_MVN_HPP
#define RELSENS_MVN_HPP

#include <Eigen/Core>
#include <cstdint>

namespace relsens {

// P(Y <= upper) for Y ~ N(0, corr) with unit-diagonal correlation matrix.
struct MvnProblem {
  Eigen::VectorXd upper;
  Eigen::MatrixXd corr;

  int dim() const { return static_cast<int>(upper.size()); }
};

struct MvnEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long long samples_used = 0;
};

struct MvnOptions {
  long long n_samples = 1'000'000;  // total QMC points across all replicates
  int replicates = 25;
  std::uint64_t seed = 42;
};

// Collapses coordinates whose correlation is within 1e-12 of one into a
// single coordinate with the minimum of their upper limits.
MvnProblem degenerate_reduce(const MvnProblem& problem);

// Randomized quasi-Monte Carlo estimate (Genz sequential conditioning with a
// shifted Kronecker lattice). Reproducible for a fixed seed; std_error is the
// spread across the randomized replicates. Throws NotPsdError when the
// symmetrized matrix has an eigenvalue below -1e-10.
MvnEstimate mvn_cdf(const MvnProblem& problem, const MvnOptions& opts);

// Estimate of mvn_cdf(a) - mvn_cdf(b) for two problems of equal dimension,
// using common randomization and one shared variable ordering. When the two
// correlation matrices are close the integrand cliffs cancel pointwise and
// the difference comes out orders of magnitude more accurate than two
// independent estimates; variance-of-conditional-expectation computations
// subtract their squared-mean term this way.
MvnEstimate mvn_cdf_difference(const MvnProblem& a, const MvnProblem& b, const MvnOptions& opts);

}  // namespace relsens

#endif  // RELSENS_MVN_HPP
