#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmsf/error.hpp"
#include "mmsf/mml/payload.hpp"

namespace mmsf::mml {

// Submodel execution loop operators. O_F is the final observation variant of
// O_I; the loop is F_INIT, (O_I, S, B)*, O_F.
enum class OperatorPhase { kFInit, kOi, kS, kB, kOf };

std::string_view to_string(OperatorPhase phase);
std::optional<OperatorPhase> operator_phase_from_string(std::string_view text);

enum class PortDirection { kIn, kOut };

std::string_view to_string(PortDirection direction);

enum class TransportHint { kInproc, kTcp, kRelayed };

std::string_view to_string(TransportHint hint);
std::optional<TransportHint> transport_hint_from_string(std::string_view text);

// Temporal (and optionally spatial) scale of a submodel. Seconds and meters.
struct ScaleSpec {
  double dt = 1.0;
  double total_time = 1.0;
  std::optional<double> dx;
  std::optional<double> extent;

  bool operator==(const ScaleSpec&) const = default;
};

// Number of S-phases a submodel performs: ceil(total_time / dt), tolerant of
// representation error in the two decimal literals.
std::size_t step_count(const ScaleSpec& scale);

struct PortSpec {
  std::string name;
  PortDirection direction = PortDirection::kIn;
  OperatorPhase binding = OperatorPhase::kB;
  PayloadType type;

  bool operator==(const PortSpec&) const = default;
};

struct SubmodelSpec {
  std::string id;
  ScaleSpec scale;
  std::vector<PortSpec> ports;
  std::string implementation_key;

  const PortSpec* find_port(std::string_view name) const;
  bool operator==(const SubmodelSpec&) const = default;
};

struct MapperSpec {
  std::string id;
  std::string kind;
  PayloadType in;
  PayloadType out;

  bool operator==(const MapperSpec&) const = default;
};

struct Endpoint {
  std::string submodel;
  std::string port;

  bool operator==(const Endpoint&) const = default;
};

std::string to_string(const Endpoint& endpoint);

struct ConduitSpec {
  std::string id;
  Endpoint from;
  Endpoint to;
  std::optional<std::string> via;
  TransportHint transport = TransportHint::kInproc;

  bool operator==(const ConduitSpec&) const = default;
};

// Immutable after construction; shared freely across threads.
struct ModelDescription {
  std::string name;
  std::vector<SubmodelSpec> submodels;
  std::vector<MapperSpec> mappers;
  std::vector<ConduitSpec> conduits;

  const SubmodelSpec* find_submodel(std::string_view id) const;
  const MapperSpec* find_mapper(std::string_view id) const;
  const ConduitSpec* find_conduit(std::string_view id) const;
  std::optional<std::size_t> submodel_index(std::string_view id) const;

  bool operator==(const ModelDescription&) const = default;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class ReferenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmsf::mml
