#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mmsf/error.hpp"
#include "mmsf/mml/model.hpp"
#include "mmsf/runtime/kernel.hpp"

namespace mmsf::runtime {

class PlanError : public Error {
 public:
  using Error::Error;
};

enum class ExecutionMode { kSequenced, kConcurrent };
std::string_view to_string(ExecutionMode mode);

struct ConduitBinding {
  mml::TransportHint transport = mml::TransportHint::kInproc;
  std::string from_site;
  std::string to_site;
  bool operator==(const ConduitBinding&) const = default;
};

struct ExecutionPlan {
  ExecutionMode mode = ExecutionMode::kSequenced;
  std::map<std::string, std::string> placements;
  std::map<std::string, ConduitBinding> conduit_bindings;
  // Messages a sender may have outstanding per conduit. Sequenced plans
  // ignore it: producers run to completion before their consumers start.
  std::size_t buffer_capacity = 1;
  // Sequenced: topological order. Concurrent: declaration order.
  std::vector<std::string> order;
};

using Deployment = std::map<std::string, std::string>;

struct PlanOptions {
  // When set, every placement must name one of these sites.
  std::optional<std::set<std::string>> sites;
  std::size_t buffer_capacity = 1;
};

// Places everything on one site.
Deployment single_site(const mml::ModelDescription& model, const std::string& site = "local");

// Parses "submodel=site" pairs separated by commas or newlines.
Deployment parse_deployment(std::string_view text);

// Throws PlanError for an invalid model, missing placement, unknown site,
// unregistered implementation key or unknown mapper kind.
ExecutionPlan build_plan(const mml::ModelDescription& model, const Deployment& deployment,
                         const KernelRegistry& registry, const PlanOptions& options = {});

std::string describe_plan(const mml::ModelDescription& model, const ExecutionPlan& plan);

}  // namespace mmsf::runtime
