#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mmsf/mml/model.hpp"

namespace mmsf::mml {

// One broken rule. `rule` is a stable kebab-case name ("unfed-in-port",
// "payload-mismatch", ...); `subject` is the offending id.
struct Issue {
  std::string rule;
  std::string subject;
  std::string message;

  bool operator==(const Issue&) const = default;
};

// Checks every structural invariant of the model. Issues are data: this never
// throws, and an empty result guarantees classify_topology and emit_ssm succeed.
std::vector<Issue> validate(const ModelDescription& model);

enum class TopologyKind { kAcyclic, kCyclic };

struct TopologyReport {
  TopologyKind kind = TopologyKind::kAcyclic;
  // Submodel ids in a topological order (acyclic only).
  std::vector<std::string> order;
  // Strongly connected components with two or more members or a self-loop
  // (cyclic only). Members follow declaration order.
  std::vector<std::vector<std::string>> cycles;
};

// Conduits are edges; mappers sit on conduits and so collapse into them.
TopologyReport classify_topology(const ModelDescription& model);

enum class ScaleRelation { kSeparated, kAdjacent, kOverlapping };

std::string_view to_string(ScaleRelation relation);

struct ScaleComparison {
  ScaleRelation temporal = ScaleRelation::kOverlapping;
  double step_ratio = 1.0;
  // Same rule applied to (dx, extent); informational only.
  std::optional<ScaleRelation> spatial;
  std::optional<double> spatial_ratio;
};

inline constexpr double kScaleEpsilon = 1e-9;

// Let s be the scale with the finer step and l the coarser one. The pair is
// separated when s finishes within one step of l, adjacent when the two are
// equal to within kScaleEpsilon (relative), overlapping otherwise.
ScaleComparison scale_relation(const ScaleSpec& a, const ScaleSpec& b);

// Scale Separation Map as Graphviz DOT: one node per submodel sorted by id,
// one edge per conduit sorted by conduit id.
std::string emit_ssm(const ModelDescription& model);

}  // namespace mmsf::mml
