#include "relsens/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "relsens/errors.hpp"
#include "relsens/format.hpp"

namespace relsens {

namespace {

GradFn make_grad_fn(const LimitStateFunction& lsf, const RandomVector& rv) {
  return [&lsf, &rv](const Eigen::VectorXd& u) {
    const UEvaluation e = evaluate_in_u(lsf, u, rv);
    return std::make_pair(e.value, e.gradient);
  };
}

std::vector<std::vector<int>> nonempty_cut_unions(const SystemDefinition& system) {
  std::vector<std::vector<int>> out;
  const int K = system.K();
  for (unsigned mask = 1; mask < (1u << K); ++mask) {
    std::vector<bool> in(static_cast<std::size_t>(system.m), false);
    for (int k = 0; k < K; ++k) {
      if (mask & (1u << k)) {
        for (int idx : system.cut_sets[static_cast<std::size_t>(k)]) {
          in[static_cast<std::size_t>(idx)] = true;
        }
      }
    }
    std::vector<int> block;
    for (int i = 0; i < system.m; ++i) {
      if (in[static_cast<std::size_t>(i)]) block.push_back(i);
    }
    out.push_back(std::move(block));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

AnalysisResult run_analyze(const ProblemConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();

  AnalysisResult result;
  result.config = config;
  result.problem = config.build();
  const ReliabilityProblem& problem = result.problem;
  const int n = problem.n();
  const int m = problem.m();

  std::vector<GradFn> grads;
  grads.reserve(static_cast<std::size_t>(m));
  for (const auto& lsf : problem.limit_states) {
    grads.push_back(make_grad_fn(lsf, problem.inputs));
  }

  std::vector<ComponentLinearization> lins;
  std::vector<TermLinearization> terms;
  SystemDefinition ls_system = problem.system;

  if (problem.system.mode == SystemMode::Component) {
    // Multi-start may expose several design points; the component problem is
    // then treated as a series system of the linearizations.
    auto points = multi_start_design_points(grads[0], n, config.solver.n_starts,
                                            config.solver.seed, config.solver);
    if (points.empty()) {
      throw NoConvergenceError("pipeline: no design point found for '" +
                               problem.limit_states[0].name + "'");
    }
    lins = std::move(points);
    const int k = static_cast<int>(lins.size());
    for (int i = 0; i < k; ++i) {
      std::string label = problem.limit_states[0].name;
      if (k > 1) label += " (point " + std::to_string(i + 1) + ")";
      result.design_points.push_back({label, lins[static_cast<std::size_t>(i)]});
    }
    if (k > 1) {
      ls_system = SystemDefinition::series(k);
      result.notes.push_back("component problem has " + std::to_string(k) +
                             " design points; FORM treats them as a series system");
    }
  } else if (config.joint_linearization && problem.system.mode == SystemMode::Parallel) {
    const JointDesignPoint jdp =
        find_joint_design_point(grads, Eigen::VectorXd::Zero(n), config.solver);
    lins = jdp.components;
    for (int i = 0; i < m; ++i) {
      result.design_points.push_back(
          {problem.limit_states[static_cast<std::size_t>(i)].name,
           lins[static_cast<std::size_t>(i)]});
    }
    result.notes.push_back("components linearized at the joint design point (||u*|| = " +
                           format_double(jdp.u_star.norm()) + ")");
  } else {
    for (int i = 0; i < m; ++i) {
      auto points = multi_start_design_points(grads[static_cast<std::size_t>(i)], n,
                                              config.solver.n_starts, config.solver.seed,
                                              config.solver);
      if (points.empty()) {
        throw NoConvergenceError("pipeline: no design point found for '" +
                                 problem.limit_states[static_cast<std::size_t>(i)].name + "'");
      }
      if (points.size() > 1) {
        result.notes.push_back("limit state '" +
                               problem.limit_states[static_cast<std::size_t>(i)].name + "' has " +
                               std::to_string(points.size()) +
                               " design points; linearized at the dominant one");
      }
      lins.push_back(points.front());
      result.design_points.push_back(
          {problem.limit_states[static_cast<std::size_t>(i)].name, lins.back()});
    }
    if (config.joint_linearization && problem.system.mode == SystemMode::General) {
      // Per-term joint points for every inclusion-exclusion block.
      if (problem.system.K() > 8) {
        throw TooManyCutSetsError("pipeline: per-term joint linearization needs K <= 8");
      }
      for (const auto& block : nonempty_cut_unions(problem.system)) {
        std::vector<GradFn> sub;
        for (int idx : block) sub.push_back(grads[static_cast<std::size_t>(idx)]);
        const JointDesignPoint jdp =
            find_joint_design_point(sub, Eigen::VectorXd::Zero(n), config.solver);
        TermLinearization term;
        term.components = block;
        term.A.resize(static_cast<int>(block.size()), n);
        term.B.resize(static_cast<int>(block.size()));
        for (std::size_t a = 0; a < block.size(); ++a) {
          term.A.row(static_cast<int>(a)) = jdp.components[a].alpha.transpose();
          term.B(static_cast<int>(a)) = jdp.components[a].beta;
        }
        terms.push_back(std::move(term));
      }
      result.notes.push_back("inclusion-exclusion terms linearized at per-term joint points");
    }
  }

  result.ls = assemble_system(lins, ls_system);
  SensitivityEngine engine(result.ls, config.mvn, std::move(terms));
  result.sensitivity =
      build_sensitivity_report(engine, config.variable_names(), config.closed_subsets());

  if (config.mc.enabled) {
    result.mc_probability = crude_mc_probability(problem, config.mc.n_samples, config.mc.seed);
    try {
      result.mc_indices =
          pick_freeze_indices(problem, config.mc.pick_freeze_samples, config.mc.seed);
    } catch (const DegenerateVarianceError& e) {
      result.notes.push_back(std::string("pick-freeze skipped: ") + e.what());
    }
  }

  result.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

ValidationReport run_validate(const ProblemConfig& config) {
  ValidationReport report;
  const ReliabilityProblem problem = config.build();
  report.n_limit_states = problem.m();
  report.n_variables = problem.n();

  // Finite-difference probe of the dual-number gradients.
  std::mt19937_64 rng(123);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double h = 1e-5;
  for (const auto& lsf : problem.limit_states) {
    for (int probe = 0; probe < 5; ++probe) {
      Eigen::VectorXd u(problem.n());
      for (int i = 0; i < problem.n(); ++i) u[i] = normal(rng);
      const UEvaluation e = evaluate_in_u(lsf, u, problem.inputs);
      for (int i = 0; i < problem.n(); ++i) {
        Eigen::VectorXd up = u, dn = u;
        up[i] += h;
        dn[i] -= h;
        const double fd = (evaluate_in_u_value(lsf, up, problem.inputs) -
                           evaluate_in_u_value(lsf, dn, problem.inputs)) /
                          (2.0 * h);
        const double scale = std::max({1.0, std::abs(fd), std::abs(e.gradient[i])});
        if (std::abs(fd - e.gradient[i]) / scale > 1e-3) {
          report.warnings.push_back("limit state '" + lsf.name + "': dual gradient and finite" +
                                    " difference disagree in d/du_" + std::to_string(i + 1) +
                                    " at a random point");
        }
      }
    }
  }
  report.ok = report.warnings.empty();
  return report;
}

void run_sweep(const ProblemConfig& config, const SweepSpec& spec, std::ostream& csv) {
  if (spec.steps < 1) {
    throw ConfigError("sweep: empty grid (steps must be >= 1)");
  }
  if (!config.parameters.count(spec.parameter)) {
    throw ConfigError("sweep: parameter '" + spec.parameter + "' is not declared in [parameters]");
  }
  if (!std::isfinite(spec.from) || !std::isfinite(spec.to)) {
    throw ConfigError("sweep: range bounds must be finite");
  }

  const auto names = config.variable_names();
  csv << spec.parameter << ",p_series,p_series_se,p_parallel,p_parallel_se";
  for (const auto& v : names) {
    for (const char* mode : {"series", "parallel"}) {
      csv << ",S_" << mode << '_' << v << ",S_" << mode << '_' << v << "_se";
      csv << ",ST_" << mode << '_' << v << ",ST_" << mode << '_' << v << "_se";
    }
  }
  csv << '\n';

  for (int step = 0; step < spec.steps; ++step) {
    const double value =
        spec.steps == 1
            ? spec.from
            : spec.from + (spec.to - spec.from) * static_cast<double>(step) /
                              static_cast<double>(spec.steps - 1);
    ProblemConfig point = config;
    point.parameters[spec.parameter] = value;
    const ReliabilityProblem problem = point.build();

    std::vector<ComponentLinearization> lins;
    for (const auto& lsf : problem.limit_states) {
      auto points = multi_start_design_points(make_grad_fn(lsf, problem.inputs), problem.n(),
                                              point.solver.n_starts, point.solver.seed,
                                              point.solver);
      if (points.empty()) {
        throw NoConvergenceError("sweep: no design point for '" + lsf.name + "' at " +
                                 spec.parameter + " = " + format_double(value));
      }
      lins.push_back(points.front());
    }
    const LinearizedSystem ls = assemble_system(lins, SystemDefinition::series(problem.m()));
    SensitivityEngine engine(ls, point.mvn);

    const Estimate ps = engine.series_probability();
    const Estimate pp = engine.parallel_probability();
    csv << format_double(value) << ',' << format_double(ps.value) << ','
        << format_double(ps.std_error) << ',' << format_double(pp.value) << ','
        << format_double(pp.std_error);
    for (int i = 0; i < problem.n(); ++i) {
      for (const SystemMode mode : {SystemMode::Series, SystemMode::Parallel}) {
        const Estimate s = engine.first_order_index(i, mode);
        const Estimate st = engine.total_effect_index({i}, mode);
        csv << ',' << format_double(s.value) << ',' << format_double(s.std_error) << ','
            << format_double(st.value) << ',' << format_double(st.std_error);
      }
    }
    csv << '\n';
  }
}

}  // namespace relsens
