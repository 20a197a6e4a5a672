#include "relsens/problem.hpp"

#include "relsens/errors.hpp"

namespace relsens {

void ReliabilityProblem::validate() const {
  inputs.validate();
  system.validate();
  if (system.m != m()) {
    throw InvalidArgumentError("problem: system references " + std::to_string(system.m) +
                               " components but " + std::to_string(m()) +
                               " limit states are declared");
  }
  for (const auto& lsf : limit_states) {
    if (lsf.n_vars != n()) {
      throw InvalidArgumentError("problem: limit state '" + lsf.name +
                                 "' was parsed against a different variable set");
    }
  }
}

}  // namespace relsens
