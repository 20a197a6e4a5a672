#ifndef RELSENS_MC_HPP
#define RELSENS_MC_HPP

#include <cstdint>
#include <vector>

#include "relsens/problem.hpp"

namespace relsens {

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long long n_samples = 0;
  std::uint64_t seed = 0;
};

// System failure indicator: 1 iff some cut set has all of its components
// failed (g_i <= 0).
int indicator(const SystemDefinition& system, const std::vector<double>& g);

// Crude Monte Carlo estimate of the system failure probability. Sample
// blocks derive per-block seeds from `seed`, so the result is reproducible
// and independent of the number of worker threads.
McEstimate crude_mc_probability(const ReliabilityProblem& problem, long long n_samples,
                                std::uint64_t seed);

struct PickFreezeEstimates {
  McEstimate p;  // failure probability from the two base blocks
  std::vector<McEstimate> first_order;   // per variable
  std::vector<McEstimate> total_effect;  // per variable
  long long evaluations = 0;             // indicator evaluations, n (nvars + 2)
};

// Pick-freeze estimation of the first-order (Sobol'-Saltelli covariance
// form) and total-effect (Jansen difference form) indices of the failure
// indicator. Std errors come from 20-fold batching. Throws
// DegenerateVarianceError when no failures (or only failures) are sampled.
PickFreezeEstimates pick_freeze_indices(const ReliabilityProblem& problem, long long n_samples,
                                        std::uint64_t seed);

}  // namespace relsens

#endif  // RELSENS_MC_HPP
