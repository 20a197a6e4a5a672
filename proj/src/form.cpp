#include "relsens/form.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "relsens/errors.hpp"

namespace relsens {

namespace {

double problem_scale(const GradFn& G, int n) {
  const auto [g0, grad0] = G(Eigen::VectorXd::Zero(n));
  (void)grad0;
  return std::abs(g0) > 1e-12 ? std::abs(g0) : 1.0;
}

ComponentLinearization linearize_at(const GradFn& G, const Eigen::VectorXd& u, int iterations,
                                    bool converged) {
  const auto [g, grad] = G(u);
  const double ng = grad.norm();
  if (ng < 1e-14) {
    throw ZeroGradientError("form: gradient vanishes at the linearization point");
  }
  ComponentLinearization lin;
  lin.alpha = -grad / ng;
  lin.beta = lin.alpha.dot(u) + g / ng;
  lin.u_star = u;
  lin.converged = converged;
  lin.iterations = iterations;
  return lin;
}

}  // namespace

ComponentLinearization find_design_point(const GradFn& G, const Eigen::VectorXd& u0,
                                         const FormOptions& opts) {
  const int n = static_cast<int>(u0.size());
  const double scale = problem_scale(G, n);
  Eigen::VectorXd u = u0;

  for (int it = 1; it <= opts.max_iter; ++it) {
    const auto [g, grad] = G(u);
    const double ng = grad.norm();
    if (ng < 1e-14) {
      throw ZeroGradientError("form: zero gradient in design-point iteration");
    }
    const Eigen::VectorXd alpha = -grad / ng;
    const double beta = alpha.dot(u);
    if (std::abs(g) <= opts.g_tol * scale && (u - beta * alpha).norm() <= opts.stat_tol) {
      ComponentLinearization lin;
      lin.alpha = alpha;
      lin.beta = beta + g / ng;
      lin.u_star = u;
      lin.converged = true;
      lin.iterations = it;
      return lin;
    }

    // HL-RF step with an Armijo backtracking line search on the merit
    // function m(u) = 0.5||u||^2 + c |G(u)|.
    const Eigen::VectorXd u_hlrf = ((grad.dot(u) - g) / (ng * ng)) * grad;
    const Eigen::VectorXd d = u_hlrf - u;
    const double c = 2.0 * u.norm() / ng + 10.0;
    const auto merit = [&](const Eigen::VectorXd& v) {
      return 0.5 * v.squaredNorm() + c * std::abs(G(v).first);
    };
    const double m0 = 0.5 * u.squaredNorm() + c * std::abs(g);
    double step = 1.0;
    Eigen::VectorXd u_next = u + d;
    while (step > 1e-6) {
      u_next = u + step * d;
      if (merit(u_next) < m0 - 1e-4 * step * d.squaredNorm()) break;
      step *= 0.5;
    }
    u = u_next;
  }
  throw NoConvergenceError("form: design-point search did not converge in " +
                           std::to_string(opts.max_iter) + " iterations");
}

namespace {

// Small dense BFGS with Armijo backtracking, used by the penalty solver.
Eigen::VectorXd bfgs_minimize(const std::function<std::pair<double, Eigen::VectorXd>(
                                  const Eigen::VectorXd&)>& f,
                              Eigen::VectorXd x, int max_iter, double grad_tol) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  auto [fx, gx] = f(x);
  for (int it = 0; it < max_iter; ++it) {
    if (gx.norm() <= grad_tol * (1.0 + std::abs(fx))) break;
    Eigen::VectorXd d = -H * gx;
    if (d.dot(gx) >= 0.0) {
      H = Eigen::MatrixXd::Identity(n, n);
      d = -gx;
    }
    double step = 1.0;
    const double slope = gx.dot(d);
    Eigen::VectorXd x_new;
    double f_new = fx;
    Eigen::VectorXd g_new = gx;
    bool accepted = false;
    while (step > 1e-12) {
      x_new = x + step * d;
      std::tie(f_new, g_new) = f(x_new);
      if (f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = g_new - gx;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      const Eigen::VectorXd Hy = H * yv;
      const double yHy = yv.dot(Hy);
      // BFGS inverse-Hessian update.
      H += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
           (Hy * s.transpose() + s * Hy.transpose()) / sy;
    }
    x = x_new;
    fx = f_new;
    gx = g_new;
  }
  return x;
}

}  // namespace

JointDesignPoint find_joint_design_point(const std::vector<GradFn>& Gs,
                                         const Eigen::VectorXd& u0, const FormOptions& opts) {
  if (Gs.empty()) {
    throw InvalidArgumentError("form: joint design point needs at least one component");
  }
  if (Gs.size() == 1) {
    // A single constraint reduces to the component design point.
    ComponentLinearization lin = find_design_point(Gs[0], u0, opts);
    JointDesignPoint jdp;
    jdp.u_star = lin.u_star;
    jdp.converged = lin.converged;
    jdp.iterations = lin.iterations;
    jdp.components.push_back(std::move(lin));
    return jdp;
  }
  const int n = static_cast<int>(u0.size());
  std::vector<double> scales;
  scales.reserve(Gs.size());
  for (const auto& G : Gs) scales.push_back(problem_scale(G, n));

  const auto violation = [&](const Eigen::VectorXd& u) {
    double worst = 0.0;
    for (std::size_t i = 0; i < Gs.size(); ++i) {
      worst = std::max(worst, Gs[i](u).first / scales[i]);
    }
    return worst;
  };

  // Quadratic penalty 0.5||u||^2 + c sum max(G_i/scale_i, 0)^2 with c
  // escalated until the constraint violation is inside tolerance.
  const auto solve_from = [&](Eigen::VectorXd u, int& iters) {
    for (double c = 10.0; c <= 1e10; c *= 10.0) {
      const auto penalty = [&](const Eigen::VectorXd& v) {
        double val = 0.5 * v.squaredNorm();
        Eigen::VectorXd grad = v;
        for (std::size_t i = 0; i < Gs.size(); ++i) {
          const auto [g, gg] = Gs[i](v);
          const double viol = g / scales[i];
          if (viol > 0.0) {
            val += c * viol * viol;
            grad += (2.0 * c * viol / scales[i]) * gg;
          }
        }
        return std::make_pair(val, grad);
      };
      u = bfgs_minimize(penalty, u, 200, 1e-10);
      ++iters;
      if (violation(u) <= opts.g_tol) break;
    }
    // Gauss-Newton feasibility polish on the active set.
    for (int round = 0; round < 5 && violation(u) > 1e-12; ++round) {
      std::vector<int> active;
      std::vector<double> gvals;
      Eigen::MatrixXd J(0, n);
      for (std::size_t i = 0; i < Gs.size(); ++i) {
        const auto [g, gg] = Gs[i](u);
        if (g / scales[i] > -10.0 * opts.g_tol) {
          active.push_back(static_cast<int>(i));
          gvals.push_back(g);
          J.conservativeResize(J.rows() + 1, Eigen::NoChange);
          J.row(J.rows() - 1) = gg.transpose();
        }
      }
      if (active.empty()) break;
      const Eigen::MatrixXd JJt =
          J * J.transpose() + 1e-12 * Eigen::MatrixXd::Identity(J.rows(), J.rows());
      const Eigen::VectorXd rhs =
          -Eigen::Map<const Eigen::VectorXd>(gvals.data(), static_cast<Eigen::Index>(gvals.size()));
      u += J.transpose() * JJt.ldlt().solve(rhs);
    }
    return u;
  };

  int iters = 0;
  Eigen::VectorXd u = solve_from(u0, iters);
  if (violation(u) > opts.g_tol) {
    // Retry from seeded random starts before declaring the set infeasible.
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    bool ok = false;
    for (int attempt = 0; attempt < 5 && !ok; ++attempt) {
      Eigen::VectorXd start(n);
      for (int i = 0; i < n; ++i) start[i] = normal(rng);
      start *= (2.0 + attempt);
      u = solve_from(start, iters);
      ok = violation(u) <= opts.g_tol;
    }
    if (!ok) {
      throw InfeasibleError("form: no feasible point found for the joint design-point search");
    }
  }

  JointDesignPoint jdp;
  jdp.u_star = u;
  jdp.converged = true;
  jdp.iterations = iters;
  for (const auto& G : Gs) {
    jdp.components.push_back(linearize_at(G, u, iters, true));
  }
  return jdp;
}

std::vector<ComponentLinearization> multi_start_design_points(const GradFn& G, int n,
                                                              int n_starts, std::uint64_t seed,
                                                              const FormOptions& opts) {
  if (n_starts < 1) {
    throw InvalidArgumentError("form: n_starts must be >= 1");
  }
  std::vector<Eigen::VectorXd> starts;

  // Origin pushed one HL-RF step.
  {
    const Eigen::VectorXd origin = Eigen::VectorXd::Zero(n);
    const auto [g, grad] = G(origin);
    const double ng2 = grad.squaredNorm();
    if (ng2 > 1e-28) {
      starts.push_back((-g / ng2) * grad);
    } else {
      starts.push_back(origin);
    }
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double radii[3] = {1.0, 2.0, 3.0};
  for (int j = 1; j < n_starts; ++j) {
    Eigen::VectorXd dir(n);
    double norm = 0.0;
    do {
      for (int i = 0; i < n; ++i) dir[i] = normal(rng);
      norm = dir.norm();
    } while (norm < 1e-12);
    starts.push_back(radii[(j - 1) % 3] / norm * dir);
  }

  std::vector<ComponentLinearization> found;
  for (const auto& s : starts) {
    try {
      found.push_back(find_design_point(G, s, opts));
    } catch (const NoConvergenceError&) {
    } catch (const ZeroGradientError&) {
    }
  }

  std::sort(found.begin(), found.end(),
            [](const ComponentLinearization& a, const ComponentLinearization& b) {
              return a.u_star.norm() < b.u_star.norm();
            });
  std::vector<ComponentLinearization> distinct;
  for (auto& lin : found) {
    bool dup = false;
    for (const auto& kept : distinct) {
      if ((lin.u_star - kept.u_star).norm() < opts.dedup_radius) {
        dup = true;
        break;
      }
    }
    if (!dup) distinct.push_back(std::move(lin));
  }
  return distinct;
}

LinearizedSystem assemble_system(const std::vector<ComponentLinearization>& linearizations,
                                 const SystemDefinition& system) {
  if (linearizations.empty()) {
    throw InvalidArgumentError("form: cannot assemble an empty system");
  }
  const int m = static_cast<int>(linearizations.size());
  const int n = static_cast<int>(linearizations[0].alpha.size());
  for (const auto& lin : linearizations) {
    if (lin.alpha.size() != n) {
      throw DimensionMismatchError("form: linearizations have inconsistent dimensions");
    }
  }
  if (system.m != m) {
    throw DimensionMismatchError("form: system defines " + std::to_string(system.m) +
                                 " components but " + std::to_string(m) + " were linearized");
  }
  LinearizedSystem ls;
  ls.A.resize(m, n);
  ls.B.resize(m);
  for (int i = 0; i < m; ++i) {
    ls.A.row(i) = linearizations[static_cast<std::size_t>(i)].alpha.transpose();
    ls.B(i) = linearizations[static_cast<std::size_t>(i)].beta;
  }
  ls.R = ls.A * ls.A.transpose();
  ls.R = ls.R.cwiseMax(-1.0).cwiseMin(1.0);
  ls.R.diagonal().setOnes();
  ls.system = system;
  return ls;
}

}  // namespace relsens
