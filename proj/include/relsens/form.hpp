#ifndef RELSENS_FORM_HPP
#define RELSENS_FORM_HPP

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "relsens/system_def.hpp"

namespace relsens {

// Value and gradient of a limit-state function in standard-normal space.
using GradFn = std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>;

struct FormOptions {
  int max_iter = 200;
  double g_tol = 1e-6;     // |G(u*)| <= g_tol * scale
  double stat_tol = 1e-6;  // ||u* - (alpha.u*) alpha|| <= stat_tol
  int n_starts = 1;
  double dedup_radius = 0.05;
  std::uint64_t seed = 42;
};

struct ComponentLinearization {
  Eigen::VectorXd alpha;  // unit row of A
  double beta = 0.0;      // alpha . u* + G(u*)/||grad|| (last term ~0 at a design point)
  Eigen::VectorXd u_star;
  bool converged = false;
  int iterations = 0;
};

// iHL-RF search for the minimum-norm point of {G(u) = 0}. Throws
// NoConvergenceError / ZeroGradientError.
ComponentLinearization find_design_point(const GradFn& G, const Eigen::VectorXd& u0,
                                         const FormOptions& opts = {});

struct JointDesignPoint {
  Eigen::VectorXd u_star;
  std::vector<ComponentLinearization> components;  // all linearized at u_star
  bool converged = false;
  int iterations = 0;
};

// Minimum-norm point of the intersection {G_i(u) <= 0 for all i}, found with
// an escalating quadratic penalty plus a feasibility polish. Throws
// InfeasibleError / NoConvergenceError.
JointDesignPoint find_joint_design_point(const std::vector<GradFn>& Gs,
                                         const Eigen::VectorXd& u0,
                                         const FormOptions& opts = {});

// Multi-start search returning the distinct design points sorted by ||u*||;
// n is the U-space dimension. Start points: the origin pushed one HL-RF
// step, then seeded random starts on spheres of radius 1, 2, 3.
// Non-converging starts are skipped.
std::vector<ComponentLinearization> multi_start_design_points(const GradFn& G, int n,
                                                              int n_starts, std::uint64_t seed,
                                                              const FormOptions& opts = {});

struct LinearizedSystem {
  Eigen::MatrixXd A;  // m x n, rows alpha_i
  Eigen::VectorXd B;  // m reliability indices
  Eigen::MatrixXd R;  // A A^T, clamped to [-1,1], unit diagonal
  SystemDefinition system;

  int m() const { return static_cast<int>(B.size()); }
  int n() const { return static_cast<int>(A.cols()); }
};

LinearizedSystem assemble_system(const std::vector<ComponentLinearization>& linearizations,
                                 const SystemDefinition& system);

}  // namespace relsens

#endif  // RELSENS_FORM_HPP
