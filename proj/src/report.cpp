#include "relsens/report.hpp"

#include <cstdio>
#include <ctime>

#include <json.hpp>

#include "relsens/format.hpp"

namespace relsens {

namespace {

using json = nlohmann::ordered_json;

std::string subset_label(const std::vector<int>& v, const std::vector<std::string>& names) {
  std::string s = "{";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += names[static_cast<std::size_t>(v[i])];
  }
  s += '}';
  return s;
}

json estimate_json(const Estimate& e) {
  return json{{"value", e.value}, {"std_error", e.std_error}};
}

json mc_json(const McEstimate& e) {
  return json{{"value", e.value},
              {"std_error", e.std_error},
              {"n_samples", e.n_samples},
              {"seed", e.seed}};
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json config_json(const ProblemConfig& cfg) {
  json vars = json::array();
  for (const auto& v : cfg.variables) {
    vars.push_back({{"name", v.name},
                    {"distribution", v.dist.kind() == DistKind::Normal ? "normal" : "lognormal"},
                    {"mean", v.dist.mean()},
                    {"std_dev", v.dist.std_dev()}});
  }
  json lsfs = json::array();
  for (const auto& [name, text] : cfg.limit_states) {
    lsfs.push_back({{"name", name}, {"expression", text}});
  }
  json cuts = json::array();
  for (const auto& group : cfg.cut_set_refs) {
    json g = json::array();
    for (const auto& item : group) g.push_back(item);
    cuts.push_back(std::move(g));
  }
  json subsets = json::array();
  for (const auto& group : cfg.closed_subset_refs) {
    json g = json::array();
    for (const auto& item : group) g.push_back(item);
    subsets.push_back(std::move(g));
  }
  return json{
      {"variables", vars},
      {"parameters", cfg.parameters},
      {"limit_states", lsfs},
      {"system", {{"mode", to_string(cfg.mode)}, {"cut_sets", cuts}}},
      {"solver",
       {{"max_iter", cfg.solver.max_iter},
        {"g_tol", cfg.solver.g_tol},
        {"stat_tol", cfg.solver.stat_tol},
        {"n_starts", cfg.solver.n_starts},
        {"dedup_radius", cfg.solver.dedup_radius},
        {"seed", cfg.solver.seed},
        {"joint_linearization", cfg.joint_linearization}}},
      {"mvn",
       {{"n_samples", cfg.mvn.n_samples},
        {"replicates", cfg.mvn.replicates},
        {"seed", cfg.mvn.seed}}},
      {"mc",
       {{"enabled", cfg.mc.enabled},
        {"n_samples", cfg.mc.n_samples},
        {"pick_freeze_samples", cfg.mc.pick_freeze_samples},
        {"seed", cfg.mc.seed}}},
      {"outputs", {{"closed_subsets", subsets}}}};
}

std::string iso_timestamp() {
  char buf[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string report_to_json(const AnalysisResult& result) {
  const auto& names = result.sensitivity.variable_names;
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["tool"] = {{"name", "relsens"}, {"version", kToolVersion}};
  j["timestamp"] = {{"iso8601", iso_timestamp()}, {"elapsed_seconds", result.elapsed_seconds}};
  j["config"] = config_json(result.config);

  json dps = json::array();
  for (const auto& rec : result.design_points) {
    dps.push_back({{"limit_state", rec.limit_state},
                   {"beta", rec.lin.beta},
                   {"u_star", vector_json(rec.lin.u_star)},
                   {"alpha", vector_json(rec.lin.alpha)},
                   {"iterations", rec.lin.iterations},
                   {"converged", rec.lin.converged}});
  }
  j["design_points"] = dps;
  j["linearized_system"] = {{"mode", to_string(result.ls.system.mode)},
                            {"A", matrix_json(result.ls.A)},
                            {"B", vector_json(result.ls.B)},
                            {"R", matrix_json(result.ls.R)}};

  j["probability"] = {{"mode", to_string(result.sensitivity.mode)},
                      {"form", estimate_json(result.sensitivity.p_f)}};

  json fo = json::object();
  json te = json::object();
  for (std::size_t i = 0; i < names.size(); ++i) {
    fo[names[i]] = estimate_json(result.sensitivity.first_order[i]);
    te[names[i]] = estimate_json(result.sensitivity.total_effect[i]);
  }
  json closed = json::object();
  for (const auto& [v, est] : result.sensitivity.closed) {
    closed[subset_label(v, names)] = estimate_json(est);
  }
  json vcomp = json::object();
  for (const auto& [v, est] : result.sensitivity.variance_components) {
    vcomp[subset_label(v, names)] = estimate_json(est);
  }
  j["sensitivity"] = {{"first_order", fo},
                      {"total_effect", te},
                      {"closed", closed},
                      {"variance_components", vcomp}};

  if (result.mc_probability || result.mc_indices) {
    json mc = json::object();
    if (result.mc_probability) mc["probability"] = mc_json(*result.mc_probability);
    if (result.mc_indices) {
      json pfo = json::object();
      json pte = json::object();
      for (std::size_t i = 0; i < names.size(); ++i) {
        pfo[names[i]] = mc_json(result.mc_indices->first_order[i]);
        pte[names[i]] = mc_json(result.mc_indices->total_effect[i]);
      }
      mc["pick_freeze"] = {{"p", mc_json(result.mc_indices->p)},
                           {"first_order", pfo},
                           {"total_effect", pte},
                           {"evaluations", result.mc_indices->evaluations}};
    }
    j["monte_carlo"] = mc;
  }

  if (!result.notes.empty()) {
    j["notes"] = result.notes;
  }
  return j.dump(2) + "\n";
}

void print_report_table(const AnalysisResult& result, std::ostream& out) {
  const auto& names = result.sensitivity.variable_names;
  char line[256];
  out << "relsens " << kToolVersion << " - " << to_string(result.sensitivity.mode)
      << " system, " << result.ls.m() << " component(s), " << names.size() << " variable(s)\n\n";

  out << "design points\n";
  out << "  limit state            beta        iter  u*\n";
  for (const auto& rec : result.design_points) {
    std::snprintf(line, sizeof(line), "  %-20s %11.6g  %4d  [", rec.limit_state.c_str(),
                  rec.lin.beta, rec.lin.iterations);
    out << line;
    for (int i = 0; i < rec.lin.u_star.size(); ++i) {
      std::snprintf(line, sizeof(line), "%s%.4f", i ? ", " : "", rec.lin.u_star[i]);
      out << line;
    }
    out << "]\n";
  }

  const auto& p = result.sensitivity.p_f;
  std::snprintf(line, sizeof(line), "\nFORM probability of failure: %.6e  (MVN se %.2e)\n",
                p.value, p.std_error);
  out << line;
  if (result.mc_probability) {
    std::snprintf(line, sizeof(line), "MC reference probability:    %.6e  (se %.2e, n = %lld)\n",
                  result.mc_probability->value, result.mc_probability->std_error,
                  result.mc_probability->n_samples);
    out << line;
  }

  out << "\nsensitivity indices\n";
  if (result.mc_indices) {
    out << "  variable   S (FORM)      se        S^T (FORM)    se        S (MC)      S^T (MC)\n";
  } else {
    out << "  variable   S (FORM)      se        S^T (FORM)    se\n";
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& s = result.sensitivity.first_order[i];
    const auto& st = result.sensitivity.total_effect[i];
    std::snprintf(line, sizeof(line), "  %-9s %11.4e %9.1e %13.4e %9.1e", names[i].c_str(),
                  s.value, s.std_error, st.value, st.std_error);
    out << line;
    if (result.mc_indices) {
      std::snprintf(line, sizeof(line), " %11.4e %11.4e",
                    result.mc_indices->first_order[i].value,
                    result.mc_indices->total_effect[i].value);
      out << line;
    }
    out << '\n';
  }

  if (!result.sensitivity.closed.empty()) {
    out << "\nclosed indices / variance components\n";
    for (std::size_t k = 0; k < result.sensitivity.closed.size(); ++k) {
      const auto& [v, est] = result.sensitivity.closed[k];
      const auto& vc = result.sensitivity.variance_components[k].second;
      std::snprintf(line, sizeof(line), "  %-16s S^clo = %11.4e (se %.1e)   V = %11.4e (se %.1e)\n",
                    subset_label(v, names).c_str(), est.value, est.std_error, vc.value,
                    vc.std_error);
      out << line;
    }
  }

  if (result.mc_indices) {
    std::snprintf(line, sizeof(line),
                  "\npick-freeze: p = %.6e (se %.2e), %lld indicator evaluations\n",
                  result.mc_indices->p.value, result.mc_indices->p.std_error,
                  result.mc_indices->evaluations);
    out << line;
  }
  for (const auto& note : result.notes) {
    out << "note: " << note << '\n';
  }
  std::snprintf(line, sizeof(line), "elapsed: %.2f s\n", result.elapsed_seconds);
  out << line;
}

void print_report_csv(const AnalysisResult& result, std::ostream& out) {
  const auto& names = result.sensitivity.variable_names;
  out << "quantity,value,std_error\n";
  out << "p_form," << format_double(result.sensitivity.p_f.value) << ','
      << format_double(result.sensitivity.p_f.std_error) << '\n';
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << "S_" << names[i] << ',' << format_double(result.sensitivity.first_order[i].value)
        << ',' << format_double(result.sensitivity.first_order[i].std_error) << '\n';
    out << "ST_" << names[i] << ',' << format_double(result.sensitivity.total_effect[i].value)
        << ',' << format_double(result.sensitivity.total_effect[i].std_error) << '\n';
  }
  for (const auto& [v, est] : result.sensitivity.closed) {
    out << "Sclo_" << subset_label(v, names) << ',' << format_double(est.value) << ','
        << format_double(est.std_error) << '\n';
  }
  if (result.mc_probability) {
    out << "p_mc," << format_double(result.mc_probability->value) << ','
        << format_double(result.mc_probability->std_error) << '\n';
  }
  if (result.mc_indices) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      out << "S_mc_" << names[i] << ',' << format_double(result.mc_indices->first_order[i].value)
          << ',' << format_double(result.mc_indices->first_order[i].std_error) << '\n';
      out << "ST_mc_" << names[i] << ','
          << format_double(result.mc_indices->total_effect[i].value) << ','
          << format_double(result.mc_indices->total_effect[i].std_error) << '\n';
    }
  }
}

}  // namespace relsens
