#include "relsens/system_def.hpp"

#include <algorithm>
#include <set>

#include "relsens/errors.hpp"

namespace relsens {

std::string to_string(SystemMode mode) {
  switch (mode) {
    case SystemMode::Component: return "component";
    case SystemMode::Series: return "series";
    case SystemMode::Parallel: return "parallel";
    case SystemMode::General: return "general";
  }
  return "?";
}

SystemDefinition SystemDefinition::component() {
  SystemDefinition s;
  s.mode = SystemMode::Component;
  s.m = 1;
  s.cut_sets = {{0}};
  return s;
}

SystemDefinition SystemDefinition::series(int m) {
  SystemDefinition s;
  s.mode = SystemMode::Series;
  s.m = m;
  for (int i = 0; i < m; ++i) s.cut_sets.push_back({i});
  return s;
}

SystemDefinition SystemDefinition::parallel(int m) {
  SystemDefinition s;
  s.mode = SystemMode::Parallel;
  s.m = m;
  s.cut_sets.resize(1);
  for (int i = 0; i < m; ++i) s.cut_sets[0].push_back(i);
  return s;
}

SystemDefinition SystemDefinition::general(int m, std::vector<std::vector<int>> cuts) {
  SystemDefinition s;
  s.mode = SystemMode::General;
  s.m = m;
  s.cut_sets = std::move(cuts);
  for (auto& c : s.cut_sets) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
  }
  return s;
}

void SystemDefinition::validate() const {
  if (m < 1) throw InvalidArgumentError("system: component count must be >= 1");
  if (cut_sets.empty()) throw InvalidArgumentError("system: no cut sets");
  for (const auto& c : cut_sets) {
    if (c.empty()) throw InvalidArgumentError("system: empty cut set");
    for (int idx : c) {
      if (idx < 0 || idx >= m) {
        throw InvalidArgumentError("system: cut-set index out of range 1.." + std::to_string(m));
      }
    }
  }
  const int k = K();
  switch (mode) {
    case SystemMode::Component:
      if (k != 1 || cut_sets[0].size() != 1) {
        throw InvalidArgumentError("system: component mode requires a single singleton cut set");
      }
      break;
    case SystemMode::Parallel:
      if (k != 1) {
        throw InvalidArgumentError("system: parallel mode requires exactly one cut set");
      }
      break;
    case SystemMode::Series: {
      if (k != m) {
        throw InvalidArgumentError("system: series mode requires one singleton cut set per component");
      }
      std::set<int> seen;
      for (const auto& c : cut_sets) {
        if (c.size() != 1) {
          throw InvalidArgumentError("system: series mode requires singleton cut sets");
        }
        seen.insert(c[0]);
      }
      if (static_cast<int>(seen.size()) != m) {
        throw InvalidArgumentError("system: series cut sets must cover each component once");
      }
      break;
    }
    case SystemMode::General:
      break;
  }
}

}  // namespace relsens
