#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmsf/error.hpp"

namespace mmsf::resman {

class ConflictError : public Error {
 public:
  using Error::Error;
};

class UnknownResource : public Error {
 public:
  using Error::Error;
};

class MappingError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class ScenarioError : public Error {
 public:
  ScenarioError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct ResourceSpec {
  std::string name;
  int cores = 1;
  // Phase name -> runtime multiplier relative to the reference machine.
  std::map<std::string, double> speed_factors;

  double speed_factor(const std::string& phase) const;
};

// Window [start, end) in seconds; no end means "until the last instance
// finishes".
struct Reservation {
  std::string id;
  std::string resource;
  int cores = 1;
  double start = 0.0;
  std::optional<double> end;
};

class ReservationBook {
 public:
  // Throws Error for cores < 1, a non-positive multiplier or a duplicate name.
  void add_resource(ResourceSpec resource);

  // Throws UnknownResource, or ConflictError when the cores of overlapping
  // reservations on the resource would exceed its capacity. Open-ended
  // windows overlap everything after their start.
  const Reservation& reserve(const std::string& id, const std::string& resource, int cores, double start,
                             std::optional<double> end);

  const ResourceSpec* find_resource(std::string_view name) const;
  const Reservation* find_reservation(std::string_view id) const;
  const std::vector<ResourceSpec>& resources() const { return resources_; }
  const std::vector<Reservation>& reservations() const { return reservations_; }

 private:
  std::vector<ResourceSpec> resources_;
  std::vector<Reservation> reservations_;
};

struct Phase {
  std::string name;
  double duration = 0.0;  // seconds at reference speed
  int cores = 1;          // 0 for an idle phase
  bool parallel = false;  // serialized across co-mapped instances
};

struct CycleProfile {
  std::string name;
  std::vector<Phase> phases;
};

struct Instance {
  std::string id;
  std::string profile;
  std::string reservation;
};

// Wait/notify mutual exclusion over the parallel section: one holder at a
// time, waiters granted in request order. Pure state machine shared by the
// simulator and LiveSignalGuard.
class SignalGuard {
 public:
  explicit SignalGuard(std::string name = "guard") : name_(std::move(name)) {}

  // True when granted immediately; otherwise the instance is queued.
  // Throws ProtocolError if the instance already holds or waits.
  bool request(const std::string& instance);
  // Returns the instance granted next, if any. Throws ProtocolError unless
  // `instance` holds the guard.
  std::optional<std::string> release(const std::string& instance);

  const std::optional<std::string>& holder() const { return holder_; }
  std::size_t waiting() const { return queue_.size(); }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::optional<std::string> holder_;
  std::deque<std::string> queue_;
};

// Thread-safe SignalGuard against wall time.
class LiveSignalGuard {
 public:
  explicit LiveSignalGuard(std::string name = "guard") : guard_(std::move(name)) {}

  // Blocks until granted; returns the seconds spent waiting.
  double acquire(const std::string& instance);
  void release(const std::string& instance);

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  SignalGuard guard_;
};

inline constexpr std::string_view kGuardWaitPhase = "guard-wait";

struct TimelineEntry {
  std::string instance;
  std::string reservation;
  int cycle = 0;
  std::string phase;  // kGuardWaitPhase for time spent waiting on the guard
  double start = 0.0;
  double end = 0.0;
  int cores = 0;
  bool parallel = false;

  bool operator==(const TimelineEntry&) const = default;
};

struct InstanceStats {
  std::string id;
  double completion = 0.0;   // seconds after the reservation start
  double cycle_time = 0.0;   // completion / cycles
  double reference_cycle = 0.0;
  double inflation = 0.0;    // cycle_time / reference_cycle - 1
  double guard_wait = 0.0;   // total
};

struct UsageReport {
  std::string scenario;
  int cycles = 0;
  std::vector<InstanceStats> instances;
  // Mean scaled seconds per instance and cycle, by phase name, in profile order.
  std::vector<std::pair<std::string, double>> phase_breakdown;
  double busy_core_s = 0.0;
  double reserved_core_s = 0.0;
  double usage_pct = 0.0;
  double makespan = 0.0;

  double max_cycle_time() const;
  double max_inflation() const;
};

struct Schedule {
  std::vector<TimelineEntry> timeline;
  UsageReport report;
};

// Busy core-seconds over reserved core-seconds, as a percentage. Guard waits
// and idle phases count as not busy; open-ended reservations end at
// `makespan`.
double usage(std::span<const TimelineEntry> timeline, std::span<const Reservation> reservations, double makespan);

// Discrete-event run of `cycles` macro-cycles per instance. Instances on the
// same reservation share one SignalGuard for their parallel phases.
// Throws MappingError for unmapped or inconsistent instances.
Schedule simulate_schedule(const ReservationBook& book, const std::vector<Instance>& instances,
                           const std::map<std::string, CycleProfile>& profiles, int cycles,
                           const std::string& scenario = "");

// Builds the report for a timeline recorded elsewhere (e.g. live runs).
UsageReport summarize(const std::string& scenario, std::span<const TimelineEntry> timeline,
                      const ReservationBook& book, const std::vector<Instance>& instances,
                      const std::map<std::string, CycleProfile>& profiles, int cycles);

struct Scenario {
  std::string name;
  ReservationBook book;
  std::map<std::string, CycleProfile> profiles;
  std::vector<Instance> instances;
  int cycles = 1;

  Schedule simulate() const;
};

// Grammar, one record per line, '#' to end of line is a comment:
//   scenario <name>
//   resource <name> cores=<n> [speed.<phase>=<x> ...]
//   reservation <id> resource=<name> cores=<n> start=<s> end=<s|auto>
//   phase <profile> <name> duration=<s> cores=<n> [parallel]
//   instance <id> profile=<name> reservation=<id>
//   cycles <n>
// Records before the first `scenario` line belong to a scenario named after
// the file. Throws ScenarioError.
std::vector<Scenario> parse_scenarios(std::string_view text, const std::string& default_name = "scenario");
std::vector<Scenario> load_scenarios(const std::filesystem::path& path);

std::string render_usage_table(std::span<const UsageReport> reports);

}  // namespace mmsf::resman
