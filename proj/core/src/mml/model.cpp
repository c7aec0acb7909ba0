#include "mmsf/mml/model.hpp"

#include <cmath>

namespace mmsf::mml {

std::string_view to_string(OperatorPhase phase) {
  switch (phase) {
    case OperatorPhase::kFInit: return "F_INIT";
    case OperatorPhase::kOi: return "O_I";
    case OperatorPhase::kS: return "S";
    case OperatorPhase::kB: return "B";
    case OperatorPhase::kOf: return "O_F";
  }
  return "?";
}

std::optional<OperatorPhase> operator_phase_from_string(std::string_view text) {
  for (auto p : {OperatorPhase::kFInit, OperatorPhase::kOi, OperatorPhase::kS,
                 OperatorPhase::kB, OperatorPhase::kOf}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

std::string_view to_string(PortDirection direction) {
  return direction == PortDirection::kIn ? "in" : "out";
}

std::string_view to_string(TransportHint hint) {
  switch (hint) {
    case TransportHint::kInproc: return "inproc";
    case TransportHint::kTcp: return "tcp";
    case TransportHint::kRelayed: return "relayed";
  }
  return "?";
}

std::optional<TransportHint> transport_hint_from_string(std::string_view text) {
  for (auto h : {TransportHint::kInproc, TransportHint::kTcp, TransportHint::kRelayed}) {
    if (to_string(h) == text) return h;
  }
  return std::nullopt;
}

std::size_t step_count(const ScaleSpec& scale) {
  if (!(scale.dt > 0.0) || !(scale.total_time > 0.0)) return 0;
  double ratio = scale.total_time / scale.dt;
  return static_cast<std::size_t>(std::ceil(ratio - 1e-9 * std::max(1.0, ratio)));
}

std::string to_string(const Endpoint& endpoint) {
  return endpoint.submodel + "." + endpoint.port;
}

const PortSpec* SubmodelSpec::find_port(std::string_view name) const {
  for (const auto& p : ports) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const SubmodelSpec* ModelDescription::find_submodel(std::string_view id) const {
  for (const auto& s : submodels) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

const MapperSpec* ModelDescription::find_mapper(std::string_view id) const {
  for (const auto& m : mappers) {
    if (m.id == id) return &m;
  }
  return nullptr;
}

const ConduitSpec* ModelDescription::find_conduit(std::string_view id) const {
  for (const auto& c : conduits) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

std::optional<std::size_t> ModelDescription::submodel_index(std::string_view id) const {
  for (std::size_t i = 0; i < submodels.size(); ++i) {
    if (submodels[i].id == id) return i;
  }
  return std::nullopt;
}

}  // namespace mmsf::mml
