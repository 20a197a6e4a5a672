#ifndef RELSENS_CONFIG_HPP
#define RELSENS_CONFIG_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relsens/form.hpp"
#include "relsens/mvn.hpp"
#include "relsens/problem.hpp"

namespace relsens {

// Declarative problem file. Flat sectioned key=value text, '#' comments:
//
//   [variables]        name = normal(mean, std) | lognormal(mean, std)
//   [parameters]       name = value
//   [limit_states]     name = expression
//   [system]           mode = component|series|parallel|general
//                      cut_sets = {1,2} {3,4}        (general only; 1-based
//                                                     indices or LSF names)
//   [solver]           max_iter, g_tol, stat_tol, n_starts, dedup_radius,
//                      joint_linearization
//   [mvn]              n_samples, replicates, seed
//   [mc]               enabled, n_samples, pick_freeze_samples, seed
//   [outputs]          closed_subsets = {M1,M2} {S}  (variable names)
struct ProblemConfig {
  struct VariableSpec {
    std::string name;
    MarginalDistribution dist;
  };
  struct McConfig {
    bool enabled = false;
    long long n_samples = 10'000'000;
    long long pick_freeze_samples = 1'000'000;
    std::uint64_t seed = 42;
  };

  std::vector<VariableSpec> variables;
  std::map<std::string, double> parameters;
  std::vector<std::pair<std::string, std::string>> limit_states;  // name, expression
  SystemMode mode = SystemMode::Component;
  std::vector<std::vector<std::string>> cut_set_refs;  // raw tokens, resolved in build()
  FormOptions solver;
  bool joint_linearization = false;
  MvnOptions mvn;
  McConfig mc;
  std::vector<std::vector<std::string>> closed_subset_refs;

  static ProblemConfig parse(const std::string& text);
  static ProblemConfig load(const std::string& path);

  // Resolves names, parses expressions and validates; throws ConfigError,
  // SyntaxError or UnknownIdentifierError.
  ReliabilityProblem build() const;

  std::vector<std::string> variable_names() const;
  std::vector<std::vector<int>> closed_subsets() const;  // variable indices
};

}  // namespace relsens

#endif  // RELSENS_CONFIG_HPP
