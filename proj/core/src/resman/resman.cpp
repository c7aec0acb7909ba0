#include "mmsf/resman/resman.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

namespace mmsf::resman {
namespace {

constexpr double kTimeEps = 1e-9;

bool windows_overlap(const Reservation& a, double start, std::optional<double> end) {
  const double a_end = a.end.value_or(INFINITY);
  const double b_end = end.value_or(INFINITY);
  return a.start < b_end && start < a_end;
}

double scaled_duration(const ResourceSpec& resource, const Phase& phase) {
  return phase.duration * resource.speed_factor(phase.name);
}

struct Context {
  const ReservationBook& book;
  const std::vector<Instance>& instances;
  const std::map<std::string, CycleProfile>& profiles;

  const Reservation& reservation(const Instance& inst) const {
    const auto* r = book.find_reservation(inst.reservation);
    if (!r) throw MappingError("instance '" + inst.id + "' mapped to unknown reservation '" + inst.reservation + "'");
    return *r;
  }
  const ResourceSpec& resource(const Instance& inst) const { return *book.find_resource(reservation(inst).resource); }
  const CycleProfile& profile(const Instance& inst) const {
    auto it = profiles.find(inst.profile);
    if (it == profiles.end()) throw MappingError("instance '" + inst.id + "' uses unknown profile '" + inst.profile + "'");
    return it->second;
  }
};

void check_mapping(const Context& ctx) {
  std::set<std::string> ids;
  for (const auto& inst : ctx.instances) {
    if (!ids.insert(inst.id).second) throw MappingError("instance '" + inst.id + "' declared twice");
    const auto& res = ctx.reservation(inst);
    const auto& prof = ctx.profile(inst);
    if (prof.phases.empty()) throw MappingError("profile '" + prof.name + "' has no phases");
    for (const auto& ph : prof.phases) {
      if (!(ph.duration > 0)) throw MappingError("phase '" + ph.name + "' of '" + prof.name + "' needs a positive duration");
      if (ph.cores < 0 || ph.cores > res.cores) {
        throw MappingError("phase '" + ph.name + "' of '" + prof.name + "' uses " + std::to_string(ph.cores) +
                           " cores but reservation '" + res.id + "' has " + std::to_string(res.cores));
      }
    }
  }
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

double parse_number(std::string_view text, std::size_t line, const std::string& what) {
  double v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size() || text.empty() || !std::isfinite(v)) {
    throw ScenarioError(line, what + " '" + std::string(text) + "' is not a number");
  }
  return v;
}

int parse_int(std::string_view text, std::size_t line, const std::string& what) {
  int v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size() || text.empty()) {
    throw ScenarioError(line, what + " '" + std::string(text) + "' is not an integer");
  }
  return v;
}

}  // namespace

double ResourceSpec::speed_factor(const std::string& phase) const {
  auto it = speed_factors.find(phase);
  return it == speed_factors.end() ? 1.0 : it->second;
}

void ReservationBook::add_resource(ResourceSpec resource) {
  if (resource.cores < 1) throw Error("resource '" + resource.name + "' needs at least one core");
  for (const auto& [phase, f] : resource.speed_factors) {
    if (!(f > 0)) throw Error("speed factor for '" + phase + "' on '" + resource.name + "' must be positive");
  }
  if (find_resource(resource.name)) throw Error("resource '" + resource.name + "' declared twice");
  resources_.push_back(std::move(resource));
}

const Reservation& ReservationBook::reserve(const std::string& id, const std::string& resource, int cores,
                                            double start, std::optional<double> end) {
  const auto* res = find_resource(resource);
  if (!res) throw UnknownResource("unknown resource '" + resource + "'");
  if (find_reservation(id)) throw Error("reservation '" + id + "' declared twice");
  if (cores < 1) throw Error("reservation '" + id + "' needs at least one core");
  if (end && !(*end > start)) throw Error("reservation '" + id + "' has an empty window");
  if (cores > res->cores) {
    throw ConflictError("reservation '" + id + "' asks for " + std::to_string(cores) + " cores; '" + resource +
                        "' has " + std::to_string(res->cores));
  }
  // Peak load inside the new window: check at the start of every overlapping
  // window (piecewise-constant load changes only there).
  std::vector<double> probes{start};
  for (const auto& r : reservations_) {
    if (r.resource == resource && windows_overlap(r, start, end) && r.start > start) probes.push_back(r.start);
  }
  for (double t : probes) {
    int load = cores;
    for (const auto& r : reservations_) {
      if (r.resource == resource && r.start <= t && t < r.end.value_or(INFINITY)) load += r.cores;
    }
    if (load > res->cores) {
      throw ConflictError("reservation '" + id + "' would put " + std::to_string(load) + " cores on '" + resource +
                          "' (capacity " + std::to_string(res->cores) + ")");
    }
  }
  reservations_.push_back({id, resource, cores, start, end});
  return reservations_.back();
}

const ResourceSpec* ReservationBook::find_resource(std::string_view name) const {
  for (const auto& r : resources_) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const Reservation* ReservationBook::find_reservation(std::string_view id) const {
  for (const auto& r : reservations_) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

bool SignalGuard::request(const std::string& instance) {
  if (holder_ == instance) throw ProtocolError("'" + instance + "' already holds guard '" + name_ + "'");
  if (std::find(queue_.begin(), queue_.end(), instance) != queue_.end()) {
    throw ProtocolError("'" + instance + "' is already waiting on guard '" + name_ + "'");
  }
  if (!holder_) {
    holder_ = instance;
    return true;
  }
  queue_.push_back(instance);
  return false;
}

std::optional<std::string> SignalGuard::release(const std::string& instance) {
  if (holder_ != instance) throw ProtocolError("'" + instance + "' released guard '" + name_ + "' without holding it");
  holder_.reset();
  if (queue_.empty()) return std::nullopt;
  holder_ = queue_.front();
  queue_.pop_front();
  return holder_;
}

double LiveSignalGuard::acquire(const std::string& instance) {
  const auto t0 = std::chrono::steady_clock::now();
  std::unique_lock lock(mu_);
  if (!guard_.request(instance)) cv_.wait(lock, [&] { return guard_.holder() == instance; });
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void LiveSignalGuard::release(const std::string& instance) {
  {
    std::lock_guard lock(mu_);
    guard_.release(instance);
  }
  cv_.notify_all();
}

double UsageReport::max_cycle_time() const {
  double m = 0;
  for (const auto& i : instances) m = std::max(m, i.cycle_time);
  return m;
}

double UsageReport::max_inflation() const {
  double m = 0;
  for (const auto& i : instances) m = std::max(m, i.inflation);
  return m;
}

namespace {

// Busy core-seconds on one reservation, clamped to its width at every instant:
// a serial phase time-sharing cores with a guarded parallel section does not
// create extra capacity.
double clamped_busy(std::span<const TimelineEntry> timeline, const Reservation& r) {
  std::vector<std::pair<double, int>> deltas;
  for (const auto& e : timeline) {
    if (e.reservation != r.id || e.phase == kGuardWaitPhase || e.cores == 0) continue;
    deltas.emplace_back(e.start, e.cores);
    deltas.emplace_back(e.end, -e.cores);
  }
  std::sort(deltas.begin(), deltas.end());
  double busy = 0;
  int load = 0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    load += deltas[i].second;
    if (i + 1 < deltas.size()) busy += std::min(load, r.cores) * (deltas[i + 1].first - deltas[i].first);
  }
  return busy;
}

double reserved_core_s(std::span<const Reservation> reservations, double makespan) {
  double reserved = 0;
  for (const auto& r : reservations) reserved += r.cores * (r.end.value_or(std::max(makespan, r.start)) - r.start);
  return reserved;
}

}  // namespace

double usage(std::span<const TimelineEntry> timeline, std::span<const Reservation> reservations, double makespan) {
  double busy = 0;
  for (const auto& r : reservations) busy += clamped_busy(timeline, r);
  const double reserved = reserved_core_s(reservations, makespan);
  if (reserved <= 0) return 0.0;
  return 100.0 * busy / reserved;
}

UsageReport summarize(const std::string& scenario, std::span<const TimelineEntry> timeline,
                      const ReservationBook& book, const std::vector<Instance>& instances,
                      const std::map<std::string, CycleProfile>& profiles, int cycles) {
  Context ctx{book, instances, profiles};
  UsageReport rep;
  rep.scenario = scenario;
  rep.cycles = cycles;
  std::map<std::string, double> per_phase;
  std::vector<std::string> phase_order;
  for (const auto& inst : instances) {
    const auto& res = ctx.reservation(inst);
    InstanceStats st;
    st.id = inst.id;
    for (const auto& ph : ctx.profile(inst).phases) {
      st.reference_cycle += scaled_duration(ctx.resource(inst), ph);
      if (!per_phase.count(ph.name)) phase_order.push_back(ph.name);
      per_phase[ph.name];
    }
    double last = res.start;
    for (const auto& e : timeline) {
      if (e.instance != inst.id) continue;
      last = std::max(last, e.end);
      if (e.phase == kGuardWaitPhase) {
        st.guard_wait += e.end - e.start;
      } else {
        per_phase[e.phase] += e.end - e.start;
      }
    }
    st.completion = last - res.start;
    st.cycle_time = cycles > 0 ? st.completion / cycles : 0.0;
    st.inflation = st.reference_cycle > 0 && cycles > 0 ? st.cycle_time / st.reference_cycle - 1.0 : 0.0;
    rep.makespan = std::max(rep.makespan, last);
    rep.instances.push_back(st);
  }
  const double denom = static_cast<double>(std::max<std::size_t>(1, instances.size())) * std::max(1, cycles);
  for (const auto& name : phase_order) rep.phase_breakdown.emplace_back(name, per_phase[name] / denom);

  for (const auto& r : book.reservations()) rep.busy_core_s += clamped_busy(timeline, r);
  rep.reserved_core_s = reserved_core_s(book.reservations(), rep.makespan);
  rep.usage_pct = usage(timeline, book.reservations(), rep.makespan);
  return rep;
}

Schedule simulate_schedule(const ReservationBook& book, const std::vector<Instance>& instances,
                           const std::map<std::string, CycleProfile>& profiles, int cycles,
                           const std::string& scenario) {
  if (cycles < 0) throw MappingError("cycle count must be non-negative");
  Context ctx{book, instances, profiles};
  check_mapping(ctx);

  struct Cursor {
    int cycle = 0;
    std::size_t phase = 0;
    double wait_since = 0;
  };
  std::vector<Cursor> cursors(instances.size());
  std::map<std::string, SignalGuard> guards;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < instances.size(); ++i) index[instances[i].id] = i;

  enum class Kind { kStart, kEnd };
  struct Event {
    double time;
    std::uint64_t seq;
    Kind kind;
    std::size_t inst;
    bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
  };
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::uint64_t seq = 0;
  Schedule out;

  auto begin_phase = [&](std::size_t i, double t) {
    const auto& inst = instances[i];
    const auto& ph = ctx.profile(inst).phases[cursors[i].phase];
    const double dur = scaled_duration(ctx.resource(inst), ph);
    out.timeline.push_back({inst.id, inst.reservation, cursors[i].cycle, ph.name, t, t + dur, ph.cores, ph.parallel});
    events.push({t + dur, seq++, Kind::kEnd, i});
  };

  for (std::size_t i = 0; i < instances.size(); ++i) {
    events.push({ctx.reservation(instances[i]).start, seq++, Kind::kStart, i});
  }
  while (!events.empty()) {
    const auto ev = events.top();
    events.pop();
    const auto& inst = instances[ev.inst];
    auto& cur = cursors[ev.inst];
    const auto& prof = ctx.profile(inst);
    if (ev.kind == Kind::kStart) {
      if (cur.cycle >= cycles) continue;
      const auto& ph = prof.phases[cur.phase];
      if (ph.parallel) {
        auto& guard = guards.try_emplace(inst.reservation, inst.reservation).first->second;
        if (!guard.request(inst.id)) {
          cur.wait_since = ev.time;
          continue;
        }
      }
      begin_phase(ev.inst, ev.time);
    } else {
      const bool was_parallel = prof.phases[cur.phase].parallel;
      if (++cur.phase == prof.phases.size()) {
        cur.phase = 0;
        ++cur.cycle;
      }
      if (was_parallel) {
        if (auto next = guards.at(inst.reservation).release(inst.id)) {
          const auto j = index.at(*next);
          if (ev.time > cursors[j].wait_since) {
            out.timeline.push_back({instances[j].id, instances[j].reservation, cursors[j].cycle,
                                    std::string(kGuardWaitPhase), cursors[j].wait_since, ev.time, 0, false});
          }
          begin_phase(j, ev.time);
        }
      }
      events.push({ev.time, seq++, Kind::kStart, ev.inst});
    }
  }

  // Overruns, and oversubscription by unguarded phases. Guarded sections may
  // time-share cores with co-mapped serial phases.
  for (const auto& r : book.reservations()) {
    std::vector<std::pair<double, int>> deltas;
    for (const auto& e : out.timeline) {
      if (e.reservation != r.id || e.phase == kGuardWaitPhase) continue;
      if (r.end && e.end > *r.end + kTimeEps) {
        throw MappingError("instance '" + e.instance + "' runs past the end of reservation '" + r.id + "'");
      }
      if (e.parallel) continue;
      deltas.emplace_back(e.start, e.cores);
      deltas.emplace_back(e.end, -e.cores);
    }
    std::sort(deltas.begin(), deltas.end());
    int load = 0;
    for (const auto& [t, d] : deltas) {
      load += d;
      if (load > r.cores) {
        throw MappingError("reservation '" + r.id + "' oversubscribed: " + std::to_string(load) + " cores in use at t=" +
                           fixed(t, 3));
      }
    }
  }

  out.report = summarize(scenario, out.timeline, book, instances, profiles, cycles);
  return out;
}

Schedule Scenario::simulate() const { return simulate_schedule(book, instances, profiles, cycles, name); }

std::vector<Scenario> parse_scenarios(std::string_view text, const std::string& default_name) {
  std::vector<Scenario> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  auto current = [&]() -> Scenario& {
    if (out.empty()) {
      out.emplace_back();
      out.back().name = default_name;
    }
    return out.back();
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;

    std::map<std::string, std::string> kv;
    std::vector<std::string> flags;
    auto collect = [&](std::size_t from) {
      for (std::size_t i = from; i < tok.size(); ++i) {
        auto eq = tok[i].find('=');
        if (eq == std::string::npos) {
          flags.push_back(tok[i]);
        } else if (!kv.emplace(tok[i].substr(0, eq), tok[i].substr(eq + 1)).second) {
          throw ScenarioError(lineno, "duplicate key '" + tok[i].substr(0, eq) + "'");
        }
      }
    };
    auto need = [&](const std::string& key) -> const std::string& {
      auto it = kv.find(key);
      if (it == kv.end()) throw ScenarioError(lineno, tok[0] + " record needs " + key + "=");
      return it->second;
    };
    auto no_flags = [&] {
      if (!flags.empty()) throw ScenarioError(lineno, "unexpected token '" + flags.front() + "'");
    };
    const auto& kind = tok[0];
    try {
      if (kind == "scenario") {
        if (tok.size() != 2) throw ScenarioError(lineno, "expected 'scenario <name>'");
        out.emplace_back();
        out.back().name = tok[1];
      } else if (kind == "resource") {
        if (tok.size() < 2) throw ScenarioError(lineno, "resource needs a name");
        collect(2);
        no_flags();
        ResourceSpec r;
        r.name = tok[1];
        r.cores = parse_int(need("cores"), lineno, "cores");
        for (const auto& [k, v] : kv) {
          if (k == "cores") continue;
          if (k.rfind("speed.", 0) != 0 || k.size() == 6) throw ScenarioError(lineno, "unknown key '" + k + "'");
          r.speed_factors[k.substr(6)] = parse_number(v, lineno, k);
        }
        current().book.add_resource(std::move(r));
      } else if (kind == "reservation") {
        if (tok.size() < 2) throw ScenarioError(lineno, "reservation needs an id");
        collect(2);
        no_flags();
        for (const auto& [k, v] : kv) {
          if (k != "resource" && k != "cores" && k != "start" && k != "end") {
            throw ScenarioError(lineno, "unknown key '" + k + "'");
          }
        }
        const auto& end = need("end");
        std::optional<double> end_v;
        if (end != "auto") end_v = parse_number(end, lineno, "end");
        current().book.reserve(tok[1], need("resource"), parse_int(need("cores"), lineno, "cores"),
                               parse_number(need("start"), lineno, "start"), end_v);
      } else if (kind == "phase") {
        if (tok.size() < 3) throw ScenarioError(lineno, "expected 'phase <profile> <name> ...'");
        collect(3);
        for (const auto& f : flags) {
          if (f != "parallel") throw ScenarioError(lineno, "unexpected token '" + f + "'");
        }
        for (const auto& [k, v] : kv) {
          if (k != "duration" && k != "cores") throw ScenarioError(lineno, "unknown key '" + k + "'");
        }
        Phase ph;
        ph.name = tok[2];
        ph.duration = parse_number(need("duration"), lineno, "duration");
        ph.cores = parse_int(need("cores"), lineno, "cores");
        ph.parallel = !flags.empty();
        if (!(ph.duration > 0)) throw ScenarioError(lineno, "phase duration must be positive");
        if (ph.cores < 0) throw ScenarioError(lineno, "phase cores must be non-negative");
        auto& prof = current().profiles[tok[1]];
        prof.name = tok[1];
        prof.phases.push_back(ph);
      } else if (kind == "instance") {
        if (tok.size() < 2) throw ScenarioError(lineno, "instance needs an id");
        collect(2);
        no_flags();
        for (const auto& [k, v] : kv) {
          if (k != "profile" && k != "reservation") throw ScenarioError(lineno, "unknown key '" + k + "'");
        }
        current().instances.push_back({tok[1], need("profile"), need("reservation")});
      } else if (kind == "cycles") {
        if (tok.size() != 2) throw ScenarioError(lineno, "expected 'cycles <n>'");
        const int n = parse_int(tok[1], lineno, "cycles");
        if (n < 0) throw ScenarioError(lineno, "cycles must be non-negative");
        current().cycles = n;
      } else {
        throw ScenarioError(lineno, "unknown record '" + kind + "'");
      }
    } catch (const ScenarioError&) {
      throw;
    } catch (const Error& e) {
      throw ScenarioError(lineno, e.what());
    }
  }
  return out;
}

std::vector<Scenario> load_scenarios(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read scenario file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenarios(ss.str(), path.stem().string());
}

std::string render_usage_table(std::span<const UsageReport> reports) {
  // Simulated scenarios run for minutes; live desk runs for fractions of a second.
  auto secs = [](double v) { return fixed(v, std::abs(v) < 10 && v != 0 ? 3 : 1); };
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"scenario", "instances", "cycles", "cycle_s", "inflation_%", "guard_wait_s", "usage_%", "phases_s"});
  for (const auto& r : reports) {
    double wait = 0;
    for (const auto& i : r.instances) wait += i.guard_wait;
    const double denom = static_cast<double>(std::max<std::size_t>(1, r.instances.size())) * std::max(1, r.cycles);
    std::string phases;
    for (const auto& [name, seconds] : r.phase_breakdown) {
      if (!phases.empty()) phases += ",";
      phases += name + "=" + secs(seconds);
    }
    rows.push_back({r.scenario, std::to_string(r.instances.size()), std::to_string(r.cycles),
                    secs(r.max_cycle_time()), fixed(100.0 * r.max_inflation(), 1), secs(wait / denom),
                    fixed(r.usage_pct, 2), phases.empty() ? "-" : phases});
  }
  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      line += row[c];
      if (c + 1 < row.size()) line += std::string(width[c] - row[c].size() + 2, ' ');
    }
    out += line + "\n";
  }
  return out;
}

}  // namespace mmsf::resman
