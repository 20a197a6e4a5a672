#ifndef RELSENS_LIMIT_STATE_HPP
#define RELSENS_LIMIT_STATE_HPP

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "relsens/distributions.hpp"
#include "relsens/expression.hpp"

namespace relsens {

// A named limit-state function g(x) over the components of a RandomVector.
// Failure of the component is the event {g(X) <= 0}.
struct LimitStateFunction {
  std::string name;
  expr::NodePtr ast;
  int n_vars = 0;  // dimension of the variable vocabulary

  double evaluate(const Eigen::VectorXd& x) const;
  double evaluate(const std::map<std::string, double>& named,
                  const std::vector<std::string>& order) const;
  // Allocation-free path for sampling loops.
  double evaluate_raw(const std::vector<double>& x) const { return expr::evaluate(*ast, x); }
  std::string text() const { return expr::to_string(*ast); }
};

// Parses `text` over the ordered variable vocabulary; deterministic
// parameters are folded into the tree as constants.
LimitStateFunction parse_limit_state(const std::string& text, const std::string& name,
                                     const std::vector<std::string>& variables,
                                     const std::map<std::string, double>& parameters = {});

struct UEvaluation {
  double value;
  Eigen::VectorXd gradient;
};

// G(u) = g(T^-1(u)) with the exact gradient, propagated with dual numbers
// through both the inverse transform and the expression tree.
UEvaluation evaluate_in_u(const LimitStateFunction& lsf, const Eigen::VectorXd& u,
                          const RandomVector& rv);
double evaluate_in_u_value(const LimitStateFunction& lsf, const Eigen::VectorXd& u,
                           const RandomVector& rv);

}  // namespace relsens

#endif  // RELSENS_LIMIT_STATE_HPP
