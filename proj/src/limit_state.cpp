#include "relsens/limit_state.hpp"

#include "relsens/dual.hpp"
#include "relsens/errors.hpp"

namespace relsens {

double LimitStateFunction::evaluate(const Eigen::VectorXd& x) const {
  if (x.size() != n_vars) {
    throw DimensionMismatchError("limit state '" + name + "': wrong input length");
  }
  std::vector<double> vals(x.data(), x.data() + x.size());
  return expr::evaluate(*ast, vals);
}

double LimitStateFunction::evaluate(const std::map<std::string, double>& named,
                                    const std::vector<std::string>& order) const {
  std::vector<double> vals(order.size(), 0.0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto it = named.find(order[i]);
    if (it == named.end()) {
      throw InvalidArgumentError("limit state '" + name + "': unbound variable '" + order[i] +
                                 "'");
    }
    vals[i] = it->second;
  }
  return expr::evaluate(*ast, vals);
}

LimitStateFunction parse_limit_state(const std::string& text, const std::string& name,
                                     const std::vector<std::string>& variables,
                                     const std::map<std::string, double>& parameters) {
  LimitStateFunction lsf;
  lsf.name = name;
  lsf.ast = expr::parse(text, variables, parameters);
  lsf.n_vars = static_cast<int>(variables.size());
  return lsf;
}

UEvaluation evaluate_in_u(const LimitStateFunction& lsf, const Eigen::VectorXd& u,
                          const RandomVector& rv) {
  const int n = rv.dim();
  if (u.size() != n || lsf.n_vars != n) {
    throw DimensionMismatchError("limit state '" + lsf.name + "': dimension mismatch in U-space");
  }
  UEvaluation out;
  out.gradient.resize(n);
  std::vector<Dual> vals(static_cast<std::size_t>(n));
  // One forward pass per coordinate, seeding dx_j/du_j from the marginal.
  for (int seed = 0; seed < n; ++seed) {
    for (int i = 0; i < n; ++i) {
      const auto& m = rv.marginals[static_cast<std::size_t>(i)];
      vals[static_cast<std::size_t>(i)] =
          Dual(m.from_u(u[i]), i == seed ? m.from_u_derivative(u[i]) : 0.0);
    }
    const Dual r = expr::evaluate(*lsf.ast, vals);
    out.gradient[seed] = r.d;
    if (seed == 0) out.value = r.v;
  }
  return out;
}

double evaluate_in_u_value(const LimitStateFunction& lsf, const Eigen::VectorXd& u,
                           const RandomVector& rv) {
  const int n = rv.dim();
  std::vector<double> vals(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    vals[static_cast<std::size_t>(i)] = rv.marginals[static_cast<std::size_t>(i)].from_u(u[i]);
  }
  return expr::evaluate(*lsf.ast, vals);
}

}  // namespace relsens
