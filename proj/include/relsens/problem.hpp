#ifndef RELSENS_PROBLEM_HPP
#define RELSENS_PROBLEM_HPP

#include <vector>

#include "relsens/distributions.hpp"
#include "relsens/limit_state.hpp"
#include "relsens/system_def.hpp"

namespace relsens {

// A fully specified reliability problem: input model, limit states, and the
// cut-set structure tying component failures into the system event.
struct ReliabilityProblem {
  RandomVector inputs;
  std::vector<LimitStateFunction> limit_states;
  SystemDefinition system;

  int n() const { return inputs.dim(); }
  int m() const { return static_cast<int>(limit_states.size()); }

  void validate() const;
};

}  // namespace relsens

#endif  // RELSENS_PROBLEM_HPP
