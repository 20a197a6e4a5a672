#ifndef RELSENS_SYSTEM_DEF_HPP
#define RELSENS_SYSTEM_DEF_HPP

#include <string>
#include <vector>

namespace relsens {

enum class SystemMode { Component, Series, Parallel, General };

std::string to_string(SystemMode mode);

// Cut-set representation of the system failure event: the union over cut
// sets of the intersection of the component failures they contain.
struct SystemDefinition {
  SystemMode mode = SystemMode::Component;
  int m = 1;                               // component count
  std::vector<std::vector<int>> cut_sets;  // 0-based component indices

  int K() const { return static_cast<int>(cut_sets.size()); }

  static SystemDefinition component();
  static SystemDefinition series(int m);
  static SystemDefinition parallel(int m);
  static SystemDefinition general(int m, std::vector<std::vector<int>> cuts);

  // Checks the mode/cut-set consistency invariants; throws InvalidArgumentError.
  void validate() const;
};

}  // namespace relsens

#endif  // RELSENS_SYSTEM_DEF_HPP
