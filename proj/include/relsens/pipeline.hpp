#ifndef RELSENS_PIPELINE_HPP
#define RELSENS_PIPELINE_HPP

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "relsens/config.hpp"
#include "relsens/mc.hpp"
#include "relsens/sensitivity.hpp"

namespace relsens {

struct DesignPointRecord {
  std::string limit_state;
  ComponentLinearization lin;
};

struct AnalysisResult {
  ProblemConfig config;  // options as actually used (after overrides)
  ReliabilityProblem problem;
  std::vector<DesignPointRecord> design_points;  // in component order of `ls`
  LinearizedSystem ls;
  SensitivityReport sensitivity;
  std::optional<McEstimate> mc_probability;
  std::optional<PickFreezeEstimates> mc_indices;
  std::vector<std::string> notes;  // e.g. extra design points that were dropped
  double elapsed_seconds = 0.0;
};

// Full pipeline: transform -> design points -> linearize -> assemble ->
// FORM probabilities -> indices -> optional Monte Carlo reference.
// A single-LSF component problem whose multi-start search finds several
// design points is promoted to a series system over the linearizations.
AnalysisResult run_analyze(const ProblemConfig& config);

struct ValidationReport {
  bool ok = true;
  int n_limit_states = 0;
  int n_variables = 0;
  std::vector<std::string> warnings;  // gradient self-check findings
};

// Light-weight checks: config well-formedness, expression parses, and a
// finite-difference agreement probe of the U-space gradients at 5 random
// points per limit state.
ValidationReport run_validate(const ProblemConfig& config);

struct SweepSpec {
  std::string parameter;
  double from = 0.0;
  double to = 0.0;
  int steps = 0;  // number of grid points, endpoints included
};

// Re-runs the FORM pipeline over a parameter grid and writes one CSV row
// per grid point with series/parallel probabilities and per-variable
// first-order and total-effect indices in both modes.
void run_sweep(const ProblemConfig& config, const SweepSpec& spec, std::ostream& csv);

}  // namespace relsens

#endif  // RELSENS_PIPELINE_HPP
