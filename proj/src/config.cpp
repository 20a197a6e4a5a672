#include "relsens/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "relsens/errors.hpp"

namespace relsens {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config:" + std::to_string(line) + ": " + msg);
}

double parse_real(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) fail(line, "trailing characters in number '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    fail(line, "expected a number, got '" + s + "'");
  } catch (const std::out_of_range&) {
    fail(line, "number out of range: '" + s + "'");
  }
}

long long parse_int(const std::string& s, int line) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    fail(line, "expected an integer, got '" + s + "'");
  }
  return v;
}

bool parse_bool(const std::string& s, int line) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  fail(line, "expected true/false, got '" + s + "'");
}

MarginalDistribution parse_distribution(const std::string& s, int line) {
  const auto open = s.find('(');
  const auto close = s.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    fail(line, "expected kind(mean, std), got '" + s + "'");
  }
  const std::string kind = trim(s.substr(0, open));
  const std::string args = s.substr(open + 1, close - open - 1);
  const auto comma = args.find(',');
  if (comma == std::string::npos) fail(line, "distribution needs two arguments");
  const double mean = parse_real(trim(args.substr(0, comma)), line);
  const double sd = parse_real(trim(args.substr(comma + 1)), line);
  try {
    if (kind == "normal") return MarginalDistribution::normal(mean, sd);
    if (kind == "lognormal") return MarginalDistribution::lognormal(mean, sd);
  } catch (const InvalidArgumentError& e) {
    fail(line, e.what());
  }
  fail(line, "unknown distribution '" + kind + "' (normal|lognormal)");
}

// Splits "{a,b} {c}" into token groups.
std::vector<std::vector<std::string>> parse_groups(const std::string& s, int line) {
  std::vector<std::vector<std::string>> groups;
  std::size_t pos = 0;
  while (pos < s.size()) {
    while (pos < s.size() && (std::isspace(static_cast<unsigned char>(s[pos])) || s[pos] == ';')) {
      ++pos;
    }
    if (pos >= s.size()) break;
    if (s[pos] != '{') fail(line, "expected '{' in set list");
    const auto close = s.find('}', pos);
    if (close == std::string::npos) fail(line, "missing '}' in set list");
    std::vector<std::string> group;
    std::stringstream ss(s.substr(pos + 1, close - pos - 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) fail(line, "empty entry in set list");
      group.push_back(item);
    }
    if (group.empty()) fail(line, "empty set in set list");
    groups.push_back(std::move(group));
    pos = close + 1;
  }
  return groups;
}

SystemMode parse_mode(const std::string& s, int line) {
  if (s == "component") return SystemMode::Component;
  if (s == "series") return SystemMode::Series;
  if (s == "parallel") return SystemMode::Parallel;
  if (s == "general") return SystemMode::General;
  fail(line, "unknown system mode '" + s + "'");
}

}  // namespace

ProblemConfig ProblemConfig::parse(const std::string& text) {
  ProblemConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  bool saw_mode = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      static const char* kSections[] = {"variables", "parameters", "limit_states", "system",
                                        "solver", "mvn", "mc", "outputs"};
      if (std::find_if(std::begin(kSections), std::end(kSections), [&](const char* s) {
            return section == s;
          }) == std::end(kSections)) {
        fail(line_no, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");
    if (value.empty()) fail(line_no, "empty value for '" + key + "'");
    if (section.empty()) fail(line_no, "key outside of a section");

    if (section == "variables") {
      for (const auto& v : cfg.variables) {
        if (v.name == key) fail(line_no, "duplicate variable '" + key + "'");
      }
      cfg.variables.push_back({key, parse_distribution(value, line_no)});
    } else if (section == "parameters") {
      if (cfg.parameters.count(key)) fail(line_no, "duplicate parameter '" + key + "'");
      cfg.parameters[key] = parse_real(value, line_no);
    } else if (section == "limit_states") {
      for (const auto& [name, text_] : cfg.limit_states) {
        (void)text_;
        if (name == key) fail(line_no, "duplicate limit state '" + key + "'");
      }
      cfg.limit_states.emplace_back(key, value);
    } else if (section == "system") {
      if (key == "mode") {
        cfg.mode = parse_mode(value, line_no);
        saw_mode = true;
      } else if (key == "cut_sets") {
        cfg.cut_set_refs = parse_groups(value, line_no);
      } else {
        fail(line_no, "unknown key '" + key + "' in [system]");
      }
    } else if (section == "solver") {
      if (key == "max_iter") {
        cfg.solver.max_iter = static_cast<int>(parse_int(value, line_no));
      } else if (key == "g_tol") {
        cfg.solver.g_tol = parse_real(value, line_no);
      } else if (key == "stat_tol") {
        cfg.solver.stat_tol = parse_real(value, line_no);
      } else if (key == "n_starts") {
        cfg.solver.n_starts = static_cast<int>(parse_int(value, line_no));
      } else if (key == "dedup_radius") {
        cfg.solver.dedup_radius = parse_real(value, line_no);
      } else if (key == "seed") {
        cfg.solver.seed = static_cast<std::uint64_t>(parse_int(value, line_no));
      } else if (key == "joint_linearization") {
        cfg.joint_linearization = parse_bool(value, line_no);
      } else {
        fail(line_no, "unknown key '" + key + "' in [solver]");
      }
    } else if (section == "mvn") {
      if (key == "n_samples") {
        cfg.mvn.n_samples = parse_int(value, line_no);
      } else if (key == "replicates") {
        cfg.mvn.replicates = static_cast<int>(parse_int(value, line_no));
      } else if (key == "seed") {
        cfg.mvn.seed = static_cast<std::uint64_t>(parse_int(value, line_no));
      } else {
        fail(line_no, "unknown key '" + key + "' in [mvn]");
      }
    } else if (section == "mc") {
      if (key == "enabled") {
        cfg.mc.enabled = parse_bool(value, line_no);
      } else if (key == "n_samples") {
        cfg.mc.n_samples = parse_int(value, line_no);
      } else if (key == "pick_freeze_samples") {
        cfg.mc.pick_freeze_samples = parse_int(value, line_no);
      } else if (key == "seed") {
        cfg.mc.seed = static_cast<std::uint64_t>(parse_int(value, line_no));
      } else {
        fail(line_no, "unknown key '" + key + "' in [mc]");
      }
    } else if (section == "outputs") {
      if (key == "closed_subsets") {
        cfg.closed_subset_refs = parse_groups(value, line_no);
      } else {
        fail(line_no, "unknown key '" + key + "' in [outputs]");
      }
    }
  }
  if (cfg.variables.empty()) throw ConfigError("config: no [variables] declared");
  if (cfg.limit_states.empty()) throw ConfigError("config: no [limit_states] declared");
  if (!saw_mode) throw ConfigError("config: [system] mode is required");
  return cfg;
}

ProblemConfig ProblemConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::vector<std::string> ProblemConfig::variable_names() const {
  std::vector<std::string> names;
  names.reserve(variables.size());
  for (const auto& v : variables) names.push_back(v.name);
  return names;
}

ReliabilityProblem ProblemConfig::build() const {
  ReliabilityProblem problem;
  for (const auto& v : variables) {
    if (parameters.count(v.name)) {
      throw ConfigError("config: '" + v.name + "' is both a variable and a parameter");
    }
    problem.inputs.names.push_back(v.name);
    problem.inputs.marginals.push_back(v.dist);
  }
  problem.inputs.validate();

  const auto names = variable_names();
  for (const auto& [lsf_name, text] : limit_states) {
    problem.limit_states.push_back(parse_limit_state(text, lsf_name, names, parameters));
  }

  const int m = problem.m();
  switch (mode) {
    case SystemMode::Component:
      if (m != 1) {
        throw ConfigError("config: component mode requires exactly one limit state");
      }
      problem.system = SystemDefinition::component();
      break;
    case SystemMode::Series:
      problem.system = SystemDefinition::series(m);
      break;
    case SystemMode::Parallel:
      problem.system = SystemDefinition::parallel(m);
      break;
    case SystemMode::General: {
      if (cut_set_refs.empty()) {
        throw ConfigError("config: general mode requires cut_sets");
      }
      std::vector<std::vector<int>> cuts;
      for (const auto& group : cut_set_refs) {
        std::vector<int> cut;
        for (const auto& item : group) {
          int idx = -1;
          if (!item.empty() && std::isdigit(static_cast<unsigned char>(item.front()))) {
            idx = static_cast<int>(std::stoll(item)) - 1;  // 1-based in the file
          } else {
            for (std::size_t k = 0; k < limit_states.size(); ++k) {
              if (limit_states[k].first == item) idx = static_cast<int>(k);
            }
          }
          if (idx < 0 || idx >= m) {
            throw ConfigError("config: cut set entry '" + item +
                              "' does not name a declared limit state");
          }
          cut.push_back(idx);
        }
        cuts.push_back(std::move(cut));
      }
      problem.system = SystemDefinition::general(m, std::move(cuts));
      break;
    }
  }
  problem.validate();
  return problem;
}

std::vector<std::vector<int>> ProblemConfig::closed_subsets() const {
  std::vector<std::vector<int>> out;
  for (const auto& group : closed_subset_refs) {
    std::vector<int> subset;
    for (const auto& item : group) {
      int idx = -1;
      for (std::size_t i = 0; i < variables.size(); ++i) {
        if (variables[i].name == item) idx = static_cast<int>(i);
      }
      if (idx < 0 && !item.empty() && std::isdigit(static_cast<unsigned char>(item.front()))) {
        const long long k = std::stoll(item);
        if (k >= 1 && k <= static_cast<long long>(variables.size())) idx = static_cast<int>(k - 1);
      }
      if (idx < 0) {
        throw ConfigError("config: closed_subsets entry '" + item +
                          "' does not name a declared variable");
      }
      subset.push_back(idx);
    }
    std::sort(subset.begin(), subset.end());
    subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
    out.push_back(std::move(subset));
  }
  return out;
}

}  // namespace relsens
