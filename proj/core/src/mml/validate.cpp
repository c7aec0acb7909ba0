#include <map>
#include <set>

#include "mmsf/mml/analysis.hpp"

namespace mmsf::mml {

namespace {

bool binding_allowed(const PortSpec& port) {
  if (port.direction == PortDirection::kIn) {
    return port.binding == OperatorPhase::kFInit || port.binding == OperatorPhase::kB;
  }
  return port.binding == OperatorPhase::kOi || port.binding == OperatorPhase::kOf;
}

class Checker {
 public:
  explicit Checker(const ModelDescription& model) : model_(model) {}

  std::vector<Issue> run() {
    check_ids();
    for (const auto& sm : model_.submodels) check_submodel(sm);
    for (const auto& c : model_.conduits) check_conduit(c);
    check_feeds();
    return std::move(issues_);
  }

 private:
  void add(std::string rule, std::string subject, std::string message) {
    issues_.push_back({std::move(rule), std::move(subject), std::move(message)});
  }

  void check_ids() {
    std::set<std::string> seen;
    auto visit = [&](const std::string& id, const char* what) {
      if (id.empty()) add("empty-id", id, std::string(what) + " with empty id");
      if (id.find('.') != std::string::npos) {
        add("bad-id", id, std::string(what) + " id '" + id + "' must not contain '.'");
      }
      if (!seen.insert(std::string(what) + ":" + id).second) {
        add("duplicate-id", id, std::string(what) + " id '" + id + "' is declared twice");
      }
    };
    for (const auto& s : model_.submodels) visit(s.id, "submodel");
    for (const auto& m : model_.mappers) visit(m.id, "mapper");
    for (const auto& c : model_.conduits) visit(c.id, "conduit");
  }

  void check_submodel(const SubmodelSpec& sm) {
    const auto& s = sm.scale;
    if (!(s.dt > 0.0) || !(s.dt <= s.total_time)) {
      add("bad-scale", sm.id, "submodel '" + sm.id + "' needs 0 < dt <= total_time");
    }
    if (s.dx && (!s.extent || !(*s.dx > 0.0) || !(*s.dx <= *s.extent))) {
      add("bad-spatial-scale", sm.id, "submodel '" + sm.id + "' needs 0 < dx <= extent when dx is given");
    }
    if (sm.implementation_key.empty()) {
      add("missing-impl", sm.id, "submodel '" + sm.id + "' has no implementation key");
    }
    std::set<std::string> names;
    for (const auto& p : sm.ports) {
      if (!names.insert(p.name).second) {
        add("duplicate-port", sm.id + "." + p.name, "port '" + p.name + "' declared twice on '" + sm.id + "'");
      }
      if (!binding_allowed(p)) {
        add("bad-binding", sm.id + "." + p.name,
            std::string(to_string(p.direction)) + "-port '" + p.name + "' may not bind to " +
                std::string(to_string(p.binding)));
      }
      if (!p.type.dims.empty() && !is_grid(p.type.kind)) {
        add("bad-dims", sm.id + "." + p.name, "dims given for non-grid port '" + p.name + "'");
      }
    }
  }

  void check_conduit(const ConduitSpec& c) {
    const PortSpec* from = resolve(c, c.from);
    const PortSpec* to = resolve(c, c.to);
    const MapperSpec* mapper = nullptr;
    if (c.via) {
      mapper = model_.find_mapper(*c.via);
      if (!mapper) add("dangling-reference", c.id, "conduit '" + c.id + "' uses unknown mapper '" + *c.via + "'");
    }
    if (from && from->direction != PortDirection::kOut) {
      add("direction-mismatch", c.id, "conduit '" + c.id + "' starts at in-port " + to_string(c.from));
    }
    if (to && to->direction != PortDirection::kIn) {
      add("direction-mismatch", c.id, "conduit '" + c.id + "' ends at out-port " + to_string(c.to));
    }
    if (!from || !to || (c.via && !mapper)) return;
    if (mapper) {
      if (!compatible(from->type, mapper->in) || !compatible(mapper->out, to->type)) {
        add("payload-mismatch", c.id,
            "conduit '" + c.id + "' carries " + to_string(from->type) + " through mapper '" + mapper->id +
                "' (" + to_string(mapper->in) + " -> " + to_string(mapper->out) + ") into " +
                to_string(to->type));
      }
    } else if (!compatible(from->type, to->type)) {
      add("payload-mismatch", c.id,
          "conduit '" + c.id + "' joins " + to_string(from->type) + " to " + to_string(to->type) +
              " without a mapper");
    }
  }

  const PortSpec* resolve(const ConduitSpec& c, const Endpoint& ep) {
    const auto* sm = model_.find_submodel(ep.submodel);
    const PortSpec* port = sm ? sm->find_port(ep.port) : nullptr;
    if (!port) {
      add("dangling-reference", c.id, "conduit '" + c.id + "' references unknown endpoint " + to_string(ep));
    }
    return port;
  }

  void check_feeds() {
    std::map<std::pair<std::string, std::string>, int> feeds;
    for (const auto& c : model_.conduits) ++feeds[{c.to.submodel, c.to.port}];
    for (const auto& sm : model_.submodels) {
      for (const auto& p : sm.ports) {
        if (p.direction != PortDirection::kIn) continue;
        int n = feeds[{sm.id, p.name}];
        if (n == 0) {
          add("unfed-in-port", sm.id + "." + p.name, "in-port " + sm.id + "." + p.name + " has no conduit");
        } else if (n > 1) {
          add("multiply-fed-in-port", sm.id + "." + p.name,
              "in-port " + sm.id + "." + p.name + " is fed by " + std::to_string(n) + " conduits");
        }
      }
    }
  }

  const ModelDescription& model_;
  std::vector<Issue> issues_;
};

}  // namespace

std::vector<Issue> validate(const ModelDescription& model) { return Checker(model).run(); }

}  // namespace mmsf::mml
