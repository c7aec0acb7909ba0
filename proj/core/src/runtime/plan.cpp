#include "mmsf/runtime/plan.hpp"

#include <sstream>

#include "mmsf/mml/analysis.hpp"
#include "mmsf/runtime/mapper.hpp"

namespace mmsf::runtime {

std::string_view to_string(ExecutionMode mode) {
  return mode == ExecutionMode::kSequenced ? "sequenced" : "concurrent";
}

Deployment single_site(const mml::ModelDescription& model, const std::string& site) {
  Deployment d;
  for (const auto& sm : model.submodels) d[sm.id] = site;
  return d;
}

Deployment parse_deployment(std::string_view text) {
  Deployment d;
  std::string item;
  auto flush = [&] {
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    item = trim(item);
    if (item.empty() || item[0] == '#') {
      item.clear();
      return;
    }
    auto eq = item.find('=');
    if (eq == std::string::npos) throw PlanError("deployment entry '" + item + "' is not submodel=site");
    auto sm = trim(item.substr(0, eq));
    auto site = trim(item.substr(eq + 1));
    if (sm.empty() || site.empty()) throw PlanError("deployment entry '" + item + "' is not submodel=site");
    if (!d.emplace(sm, site).second) throw PlanError("submodel '" + sm + "' placed twice");
    item.clear();
  };
  for (char c : text) {
    if (c == ',' || c == '\n') {
      flush();
    } else {
      item.push_back(c);
    }
  }
  flush();
  return d;
}

ExecutionPlan build_plan(const mml::ModelDescription& model, const Deployment& deployment,
                         const KernelRegistry& registry, const PlanOptions& options) {
  if (auto issues = mml::validate(model); !issues.empty()) {
    std::string msg = "model '" + model.name + "' is invalid:";
    for (const auto& i : issues) msg += "\n  " + i.rule + " " + i.subject + ": " + i.message;
    throw PlanError(msg);
  }
  if (options.buffer_capacity < 1) throw PlanError("buffer capacity must be at least 1");
  ExecutionPlan plan;
  plan.buffer_capacity = options.buffer_capacity;
  for (const auto& sm : model.submodels) {
    auto it = deployment.find(sm.id);
    if (it == deployment.end()) throw PlanError("submodel '" + sm.id + "' has no placement");
    if (options.sites && !options.sites->count(it->second)) {
      throw PlanError("submodel '" + sm.id + "' placed on unknown site '" + it->second + "'");
    }
    if (!registry.contains(sm.implementation_key)) {
      throw PlanError("no kernel registered for implementation '" + sm.implementation_key + "' of submodel '" +
                      sm.id + "'");
    }
    plan.placements[sm.id] = it->second;
  }
  for (const auto& [id, site] : deployment) {
    if (!model.find_submodel(id)) throw PlanError("deployment names unknown submodel '" + id + "'");
  }
  for (const auto& m : model.mappers) {
    if (!is_known_mapper_kind(m.kind)) throw PlanError("mapper '" + m.id + "' has unknown kind '" + m.kind + "'");
  }
  for (const auto& c : model.conduits) {
    ConduitBinding b;
    b.from_site = plan.placements.at(c.from.submodel);
    b.to_site = plan.placements.at(c.to.submodel);
    if (b.from_site == b.to_site) {
      b.transport = mml::TransportHint::kInproc;
    } else {
      b.transport = c.transport == mml::TransportHint::kRelayed ? mml::TransportHint::kRelayed : mml::TransportHint::kTcp;
    }
    plan.conduit_bindings[c.id] = b;
  }
  auto topo = mml::classify_topology(model);
  if (topo.kind == mml::TopologyKind::kAcyclic) {
    plan.mode = ExecutionMode::kSequenced;
    plan.order = topo.order;
  } else {
    plan.mode = ExecutionMode::kConcurrent;
    for (const auto& sm : model.submodels) plan.order.push_back(sm.id);
  }
  return plan;
}

std::string describe_plan(const mml::ModelDescription& model, const ExecutionPlan& plan) {
  std::ostringstream out;
  out << "model " << model.name << "\n";
  out << "mode " << to_string(plan.mode) << "\n";
  out << "buffer_capacity " << plan.buffer_capacity << "\n";
  for (const auto& id : plan.order) out << "submodel " << id << " site " << plan.placements.at(id) << "\n";
  for (const auto& c : model.conduits) {
    const auto& b = plan.conduit_bindings.at(c.id);
    out << "conduit " << c.id << " " << mml::to_string(c.from) << " -> " << mml::to_string(c.to) << " "
        << mml::to_string(b.transport);
    if (b.from_site != b.to_site) out << " " << b.from_site << "->" << b.to_site;
    out << "\n";
  }
  return out.str();
}

}  // namespace mmsf::runtime
