#ifndef RELSENS_SENSITIVITY_HPP
#define RELSENS_SENSITIVITY_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "relsens/form.hpp"
#include "relsens/mvn.hpp"

namespace relsens {

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Linearization of one inclusion-exclusion block at its own joint design
// point (components = the union of the cut sets the block joins, sorted).
struct TermLinearization {
  std::vector<int> components;
  Eigen::MatrixXd A;  // |components| x n
  Eigen::VectorXd B;
};

// FORM system probabilities and variance-based reliability sensitivity
// indices of a linearized system. All multinormal integrals go through one
// QMC budget and are memoized, so repeated index queries reuse the same
// estimates for a fixed seed.
class SensitivityEngine {
 public:
  SensitivityEngine(LinearizedSystem ls, MvnOptions mvn_opts);
  // With per-term joint-point linearizations for general systems; blocks not
  // present in `terms` fall back to the rows of ls.A.
  SensitivityEngine(LinearizedSystem ls, MvnOptions mvn_opts,
                    std::vector<TermLinearization> terms);

  const LinearizedSystem& system() const { return ls_; }
  const MvnOptions& mvn_options() const { return mvn_; }

  // p = 1 - Phi_m(B, R)
  Estimate series_probability() const;
  // p = Phi_m(-B, R)
  Estimate parallel_probability() const;
  // Inclusion-exclusion over the cut sets; each term is a parallel block
  // over the union of the cut sets it joins.
  Estimate system_probability() const;
  // Dispatch on the system mode (Component behaves as a one-term series).
  Estimate probability() const;

  // Var(E[Z | U_v]) for the series/parallel FORM indicator: a 2m-variate
  // normal probability with cross-block R_v = A_v A_v^T, minus the squared
  // mean. Values inside -3 std errors of zero clamp to zero.
  Estimate var_cond_exp(const std::vector<int>& v, SystemMode mode) const;
  // Var(E[Z | U_{~v}]): same with cross-block R - R_v.
  Estimate var_cond_exp_complement(const std::vector<int>& v, SystemMode mode) const;

  Estimate first_order_index(int i, SystemMode mode) const;
  Estimate total_effect_index(const std::vector<int>& v, SystemMode mode) const;
  Estimate closed_index(const std::vector<int>& v, SystemMode mode) const;
  Estimate variance_component(const std::vector<int>& v, SystemMode mode) const;

  // General-system (cut-set) variants via the signed double sum over pairs
  // of inclusion-exclusion terms.
  Estimate sys_var_cond_exp(const std::vector<int>& v) const;
  Estimate sys_var_cond_exp_complement(const std::vector<int>& v) const;
  Estimate sys_first_order_index(int i) const;
  Estimate sys_total_effect_index(const std::vector<int>& v) const;
  Estimate sys_closed_index(const std::vector<int>& v) const;
  Estimate sys_variance_component(const std::vector<int>& v) const;

  // Mode-appropriate index queries used by reporting: series/parallel
  // systems use the Prop.-1 formulas, general systems the double sum.
  Estimate index_first_order(int i) const;
  Estimate index_total_effect(const std::vector<int>& v) const;
  Estimate index_closed(const std::vector<int>& v) const;
  Estimate index_variance_component(const std::vector<int>& v) const;

 private:
  Estimate mvn(const Eigen::VectorXd& upper, const Eigen::MatrixXd& corr) const;
  Estimate mvn_budgeted(const Eigen::VectorXd& upper, const Eigen::MatrixXd& corr,
                        const MvnOptions& opts) const;
  Estimate paired_difference(const Eigen::VectorXd& limits, const Eigen::MatrixXd& big,
                             const Eigen::MatrixXd& base) const;
  Estimate mode_probability(SystemMode mode) const;
  Eigen::MatrixXd cross_block(const std::vector<int>& v) const;  // R_v = A_v A_v^T
  Estimate clamp_variance(Estimate e, const char* what) const;

  // Var(E[Z|U_cond]) evaluation strategies; see the discussion in the
  // implementation file.
  bool gh_applicable(const std::vector<int>& cond) const;
  Estimate conditional_block_probability(const Eigen::MatrixXd& A, const Eigen::VectorXd& B,
                                         const std::vector<int>& cond, const Eigen::VectorXd& t,
                                         bool failure, const MvnOptions& inner) const;
  Estimate var_cond_gh(const std::vector<int>& cond, SystemMode mode) const;
  Estimate var_cond_paired(const std::vector<int>& cond, SystemMode mode) const;
  Estimate var_cond_subset(const std::vector<int>& cond, SystemMode mode) const;
  // When exactly one variable is left out of `cond`, the conditional failure
  // probability is closed form (interval probabilities in that variable) and
  // the variance integrates over cond by plain QMC. Used for single-variable
  // total-effect numerators. `sys` switches to the cut-set union event.
  Estimate var_cond_leave_one_out(const std::vector<int>& cond, SystemMode mode,
                                  bool sys) const;
  Estimate sys_var_cond_gh(const std::vector<int>& cond) const;
  Estimate sys_var_cond_paired(const std::vector<int>& cond, bool complement) const;
  Estimate sys_var_cond_subset(const std::vector<int>& cond, bool complement_flavor) const;

  // (A, B) of one inclusion-exclusion block: per-term linearization when
  // available, rows of ls_.A otherwise.
  void block_of(const std::vector<int>& components, Eigen::MatrixXd& A,
                Eigen::VectorXd& B) const;

  LinearizedSystem ls_;
  MvnOptions mvn_;
  std::map<std::vector<int>, TermLinearization> terms_;
  mutable std::map<std::string, MvnEstimate> cache_;
  mutable std::map<std::pair<int, std::uint64_t>, Estimate> vc_memo_;  // (mode,key) -> V_v
};

struct SensitivityReport {
  SystemMode mode = SystemMode::Component;
  Estimate p_f;
  std::vector<std::string> variable_names;
  std::vector<Estimate> first_order;
  std::vector<Estimate> total_effect;
  std::vector<std::pair<std::vector<int>, Estimate>> closed;
  std::vector<std::pair<std::vector<int>, Estimate>> variance_components;
};

// Computes probabilities plus per-variable first-order/total-effect indices,
// and closed indices / variance components for the requested subsets.
SensitivityReport build_sensitivity_report(const SensitivityEngine& engine,
                                           const std::vector<std::string>& variable_names,
                                           const std::vector<std::vector<int>>& closed_subsets);

}  // namespace relsens

#endif  // RELSENS_SENSITIVITY_HPP
