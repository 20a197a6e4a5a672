#include <doctest.h>

#include <sstream>
#include "relsens/config.hpp"
#include "relsens/errors.hpp"
#include "relsens/pipeline.hpp"

using namespace relsens;

namespace {

const char* kBeamBar = R"(
# cantilever beam-bar system
[variables]
M = normal(1000, 300)
T = normal(110, 20)
P = normal(150, 30)

[parameters]
L = 5

[limit_states]
g1 = T - 5*P/16
g2 = M - L*P
g3 = M - 3*L*P/8
g4 = M - L*P/3
g5 = M + 2*L*T - L*P

[system]
mode = general
cut_sets = {1,2} {g3,g4} {3,5}

[solver]
max_iter = 120
g_tol = 1e-7
n_starts = 3
joint_linearization = false

[mvn]
n_samples = 250000
replicates = 20
seed = 7

[mc]
enabled = true
n_samples = 2000000
pick_freeze_samples = 500000
seed = 11

[outputs]
closed_subsets = {M,T} {P}
)";

}  // namespace

TEST_CASE("full config round trip") {
  const ProblemConfig cfg = ProblemConfig::parse(kBeamBar);
  CHECK(cfg.variables.size() == 3);
  CHECK(cfg.variables[0].name == "M");
  CHECK(cfg.variables[0].dist.kind() == DistKind::Normal);
  CHECK(cfg.parameters.at("L") == 5.0);
  CHECK(cfg.limit_states.size() == 5);
  CHECK(cfg.limit_states[4].first == "g5");
  CHECK(cfg.mode == SystemMode::General);
  CHECK(cfg.solver.max_iter == 120);
  CHECK(cfg.solver.g_tol == 1e-7);
  CHECK(cfg.solver.n_starts == 3);
  CHECK(cfg.mvn.n_samples == 250000);
  CHECK(cfg.mvn.replicates == 20);
  CHECK(cfg.mvn.seed == 7);
  CHECK(cfg.mc.enabled);
  CHECK(cfg.mc.pick_freeze_samples == 500000);

  const ReliabilityProblem problem = cfg.build();
  CHECK(problem.n() == 3);
  CHECK(problem.m() == 5);
  // Mixed name/index cut-set references resolve to the same 0-based sets.
  CHECK(problem.system.cut_sets == std::vector<std::vector<int>>{{0, 1}, {2, 3}, {2, 4}});

  const auto subsets = cfg.closed_subsets();
  CHECK(subsets == std::vector<std::vector<int>>{{0, 1}, {2}});
}

TEST_CASE("limit states evaluate with folded parameters") {
  const ProblemConfig cfg = ProblemConfig::parse(kBeamBar);
  const ReliabilityProblem problem = cfg.build();
  Eigen::VectorXd x(3);
  x << 1000.0, 110.0, 150.0;
  CHECK(problem.limit_states[4].evaluate(x) == doctest::Approx(1350.0));
  CHECK(problem.limit_states[0].evaluate(x) == doctest::Approx(110.0 - 5.0 * 150.0 / 16.0));
}

TEST_CASE("config error reporting") {
  CHECK_THROWS_AS(ProblemConfig::parse(""), ConfigError);
  CHECK_THROWS_AS(ProblemConfig::parse("[variables]\nx = normal(0,1)\n"), ConfigError);
  CHECK_THROWS_AS(ProblemConfig::parse("[nosuch]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(ProblemConfig::parse("x = 1\n"), ConfigError);  // key outside a section

  const char* dup = R"(
[variables]
a = normal(0,1)
a = normal(0,2)
[limit_states]
g = a
[system]
mode = component
)";
  CHECK_THROWS_AS(ProblemConfig::parse(dup), ConfigError);

  const char* bad_dist = R"(
[variables]
a = weibull(1,2)
[limit_states]
g = a
[system]
mode = component
)";
  CHECK_THROWS_AS(ProblemConfig::parse(bad_dist), ConfigError);

  const char* neg_std = R"(
[variables]
a = normal(0,-1)
[limit_states]
g = a
[system]
mode = component
)";
  CHECK_THROWS_AS(ProblemConfig::parse(neg_std), ConfigError);
}

TEST_CASE("build-time validation") {
  // Unknown identifier in a limit state names the offender.
  const char* unknown = R"(
[variables]
a = normal(0,1)
[limit_states]
g = a + bogus
[system]
mode = component
)";
  const ProblemConfig cfg = ProblemConfig::parse(unknown);
  try {
    cfg.build();
    FAIL("expected UnknownIdentifierError");
  } catch (const UnknownIdentifierError& e) {
    CHECK(e.name() == "bogus");
  }

  // Component mode needs exactly one limit state.
  const char* two_lsf = R"(
[variables]
a = normal(0,1)
[limit_states]
g1 = a
g2 = a - 1
[system]
mode = component
)";
  CHECK_THROWS_AS(ProblemConfig::parse(two_lsf).build(), ConfigError);

  // Cut sets must reference declared limit states.
  const char* bad_cut = R"(
[variables]
a = normal(0,1)
[limit_states]
g1 = a
[system]
mode = general
cut_sets = {g9}
)";
  CHECK_THROWS_AS(ProblemConfig::parse(bad_cut).build(), ConfigError);

  // A name cannot be both variable and parameter.
  const char* clash = R"(
[variables]
a = normal(0,1)
[parameters]
a = 3
[limit_states]
g1 = a
[system]
mode = component
)";
  CHECK_THROWS_AS(ProblemConfig::parse(clash).build(), ConfigError);
}

TEST_CASE("run_validate flags nothing on a healthy config") {
  const ValidationReport rep = run_validate(ProblemConfig::parse(kBeamBar));
  CHECK(rep.ok);
  CHECK(rep.n_limit_states == 5);
  CHECK(rep.n_variables == 3);
  CHECK(rep.warnings.empty());
}

TEST_CASE("sweep rejects bad specs") {
  const ProblemConfig cfg = ProblemConfig::parse(kBeamBar);
  std::ostringstream out;
  SweepSpec spec;
  spec.parameter = "L";
  spec.from = 1.0;
  spec.to = 2.0;
  spec.steps = 0;
  CHECK_THROWS_AS(run_sweep(cfg, spec, out), ConfigError);
  spec.steps = 3;
  spec.parameter = "nope";
  CHECK_THROWS_AS(run_sweep(cfg, spec, out), ConfigError);
}
