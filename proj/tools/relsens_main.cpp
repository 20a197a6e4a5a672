#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "relsens/errors.hpp"
#include "relsens/pipeline.hpp"
#include "relsens/report.hpp"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<long long> mvn_samples;
  std::optional<long long> mc_samples;
  std::optional<bool> mc_enabled;
  std::optional<int> n_starts;
  bool joint_linearization = false;
};

void apply_overrides(relsens::ProblemConfig& cfg, const Overrides& ov) {
  if (ov.seed) {
    cfg.mvn.seed = *ov.seed;
    cfg.mc.seed = *ov.seed;
    cfg.solver.seed = *ov.seed;
  }
  if (ov.mvn_samples) cfg.mvn.n_samples = *ov.mvn_samples;
  if (ov.mc_samples) cfg.mc.n_samples = *ov.mc_samples;
  if (ov.mc_enabled) cfg.mc.enabled = *ov.mc_enabled;
  if (ov.n_starts) cfg.solver.n_starts = *ov.n_starts;
  if (ov.joint_linearization) cfg.joint_linearization = true;
}

int classify_error(const std::exception& e) {
  if (dynamic_cast<const relsens::ConfigError*>(&e) ||
      dynamic_cast<const relsens::SyntaxError*>(&e) ||
      dynamic_cast<const relsens::UnknownIdentifierError*>(&e) ||
      dynamic_cast<const relsens::InvalidArgumentError*>(&e) ||
      dynamic_cast<const relsens::DimensionMismatchError*>(&e)) {
    return 2;  // validation error
  }
  return 3;  // numerical failure
}

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw relsens::ConfigError("cli: cannot write to '" + out_path + "'");
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FORM system reliability analysis with variance-based sensitivity indices"};
  app.require_subcommand(1);
  app.set_version_flag("--version", relsens::kToolVersion);

  std::string config_path;
  std::string out_path;
  std::string format = "table";
  Overrides ov;
  bool flag_mc = false;
  bool flag_no_mc = false;
  bool flag_joint = false;

  const auto add_common = [&](CLI::App* cmd, bool with_overrides) {
    cmd->add_option("config,--config", config_path, "problem configuration file")->required();
    if (with_overrides) {
      cmd->add_option("--seed", [&ov](const CLI::results_t& r) {
        ov.seed = std::stoull(r[0]);
        return true;
      }, "override all seeds");
      cmd->add_option("--mvn-samples", [&ov](const CLI::results_t& r) {
        ov.mvn_samples = std::stoll(r[0]);
        return true;
      }, "total QMC points per multinormal integral");
      cmd->add_option("--mc-samples", [&ov](const CLI::results_t& r) {
        ov.mc_samples = std::stoll(r[0]);
        return true;
      }, "crude Monte Carlo sample count");
      cmd->add_flag("--mc", flag_mc, "enable the Monte Carlo reference");
      cmd->add_flag("--no-mc", flag_no_mc, "disable the Monte Carlo reference");
      cmd->add_option("--n-starts", [&ov](const CLI::results_t& r) {
        ov.n_starts = std::stoi(r[0]);
        return true;
      }, "number of design-point search starts");
      cmd->add_flag("--joint-linearization", flag_joint,
                    "linearize parallel blocks at joint design points");
    }
    cmd->add_option("--out", out_path, "write the report to this path instead of stdout");
  };

  auto* analyze = app.add_subcommand("analyze", "run the FORM pipeline and report indices");
  add_common(analyze, true);
  analyze->add_option("--format", format, "report format")
      ->check(CLI::IsMember({"table", "json", "csv"}));

  auto* sweep = app.add_subcommand("sweep", "parameter study producing a CSV table");
  add_common(sweep, true);
  relsens::SweepSpec sweep_spec;
  sweep->add_option("--param", sweep_spec.parameter, "parameter to sweep")->required();
  sweep->add_option("--from", sweep_spec.from, "first grid value")->required();
  sweep->add_option("--to", sweep_spec.to, "last grid value")->required();
  sweep->add_option("--steps", sweep_spec.steps, "number of grid points")->required();

  auto* validate = app.add_subcommand("validate", "check a configuration without analyzing");
  add_common(validate, false);

  CLI11_PARSE(app, argc, argv);

  try {
    relsens::ProblemConfig cfg = relsens::ProblemConfig::load(config_path);
    if (flag_mc) ov.mc_enabled = true;
    if (flag_no_mc) ov.mc_enabled = false;
    ov.joint_linearization = flag_joint;
    apply_overrides(cfg, ov);

    if (app.got_subcommand(analyze)) {
      const relsens::AnalysisResult result = relsens::run_analyze(cfg);
      if (format == "json") {
        write_output(relsens::report_to_json(result), out_path);
      } else if (format == "csv") {
        std::ostringstream ss;
        relsens::print_report_csv(result, ss);
        write_output(ss.str(), out_path);
      } else {
        // Table to stdout; --out additionally captures the JSON report.
        relsens::print_report_table(result, std::cout);
        if (!out_path.empty()) {
          write_output(relsens::report_to_json(result), out_path);
        }
      }
      return 0;
    }
    if (app.got_subcommand(sweep)) {
      std::ostringstream ss;
      relsens::run_sweep(cfg, sweep_spec, ss);
      write_output(ss.str(), out_path);
      return 0;
    }
    if (app.got_subcommand(validate)) {
      const relsens::ValidationReport rep = relsens::run_validate(cfg);
      std::ostringstream ss;
      ss << (rep.ok ? "OK" : "WARNINGS") << ", " << rep.n_limit_states << " limit states, "
         << rep.n_variables << " variables\n";
      for (const auto& w : rep.warnings) ss << "warning: " << w << '\n';
      write_output(ss.str(), out_path);
      return rep.ok ? 0 : 1;
    }
  } catch (const relsens::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return classify_error(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
