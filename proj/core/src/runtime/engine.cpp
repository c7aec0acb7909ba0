#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <mutex>
#include <sstream>
#include <thread>

#include "mmsf/bytes.hpp"
#include "mmsf/runtime/mapper.hpp"
#include "mmsf/runtime/runtime.hpp"
#include "mmsf/transport/frame.hpp"
#include "mmsf/transport/relay.hpp"

namespace mmsf::runtime {
namespace {

using Clock = std::chrono::steady_clock;

std::int64_t ns_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count();
}

// Unwinds a kernel after the run was cancelled elsewhere.
struct Cancelled {};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum class Activity { kRunning, kBlocked, kDone };

struct KernelState {
  std::string id;
  std::atomic<Activity> activity{Activity::kRunning};
  mutable std::mutex mu;
  std::string blocked_on;

  void block(std::string what) {
    std::lock_guard lock(mu);
    blocked_on = std::move(what);
    activity = Activity::kBlocked;
  }
  void unblock() { activity = Activity::kRunning; }
  std::string describe() const {
    std::lock_guard lock(mu);
    return id + ": " + blocked_on;
  }
};

class Conduit;

struct RunShared {
  Clock::time_point t0 = Clock::now();
  std::atomic<bool> cancelled{false};
  std::atomic<std::uint64_t> progress{0};
  std::mutex mu;
  std::exception_ptr first_error;
  std::vector<MessageRecord> log;
  std::vector<Conduit*> conduits;
  perf::Recorder recorder;

  std::int64_t now_ns() const { return ns_between(t0, Clock::now()); }
  void bump() { progress.fetch_add(1, std::memory_order_relaxed); }
  void fail(std::exception_ptr e);
  void append(MessageRecord r) {
    std::lock_guard lock(mu);
    log.push_back(std::move(r));
  }
};

struct Cost {
  std::int64_t wait_ns = 0;
  std::int64_t io_ns = 0;
};

class Conduit {
 public:
  Conduit(const mml::ConduitSpec& spec, const mml::MapperSpec* mapper, std::size_t capacity, RunShared& shared)
      : spec_(spec), mapper_(mapper), capacity_(capacity), shared_(shared) {}

  ~Conduit() { shutdown(); }

  const mml::ConduitSpec& spec() const { return spec_; }

  void attach(std::unique_ptr<transport::Channel> tx, std::unique_ptr<transport::Channel> rx) {
    tx_ = std::move(tx);
    rx_ = std::move(rx);
    pump_ = std::thread([this] { pump(); });
  }

  Cost send(const std::string& sender, mml::Payload payload, KernelState& who) {
    Cost cost;
    const auto t0 = Clock::now();
    std::unique_lock lock(mu_);
    if (capacity_ > 0 && outstanding_ >= capacity_ && !shared_.cancelled) {
      who.block("send on conduit '" + spec_.id + "'");
      cv_.wait(lock, [&] { return outstanding_ < capacity_ || shared_.cancelled; });
      who.unblock();
    }
    if (shared_.cancelled) throw Cancelled{};
    const auto t1 = Clock::now();
    cost.wait_ns = ns_between(t0, t1);
    ++outstanding_;
    const auto iteration = next_iteration_++;
    const auto sent_at = shared_.now_ns();
    if (!tx_) {
      queue_.push_back(Message{spec_.id, sender, iteration, std::move(payload), sent_at, 0});
      lock.unlock();
      cv_.notify_all();
    } else {
      ++in_transit_;
      sent_at_[iteration] = sent_at;
      lock.unlock();
      auto frame = transport::encode_frame(spec_.id, iteration, payload);
      try {
        tx_->send_framed(frame);
      } catch (const transport::TransportError&) {
        if (shared_.cancelled) throw Cancelled{};
        throw;
      }
    }
    shared_.bump();
    cost.io_ns = ns_between(t1, Clock::now());
    return cost;
  }

  // nullopt once the conduit is closed and drained.
  std::optional<Message> take(KernelState& who, Cost& cost) {
    const auto t0 = Clock::now();
    std::unique_lock lock(mu_);
    if (queue_.empty() && !closed_ && !shared_.cancelled) {
      who.block("receive on conduit '" + spec_.id + "'");
      cv_.wait(lock, [&] { return !queue_.empty() || closed_ || shared_.cancelled; });
      who.unblock();
    }
    if (shared_.cancelled) throw Cancelled{};
    if (queue_.empty()) return std::nullopt;
    Message msg = std::move(queue_.front());
    queue_.pop_front();
    --outstanding_;
    lock.unlock();
    cv_.notify_all();
    shared_.bump();
    const auto t1 = Clock::now();
    cost.wait_ns = ns_between(t0, t1);
    const auto sent_kind = msg.payload.kind();
    if (mapper_) msg.payload = apply_mapper(*mapper_, msg.payload);
    msg.delivered_at_ns = shared_.now_ns();
    const auto body = msg.payload.encode();
    shared_.append(MessageRecord{spec_.id, spec_.from, spec_.to, msg.iteration, sent_kind, msg.payload.kind(),
                                 body.size(), bytes::fnv1a64(body), msg.sent_at_ns, msg.delivered_at_ns});
    cost.io_ns = ns_between(t1, Clock::now());
    return msg;
  }

  // True once a message is queued; false if the conduit closed empty.
  bool wait_ready(KernelState& who) {
    std::unique_lock lock(mu_);
    if (queue_.empty() && !closed_ && !shared_.cancelled) {
      who.block("next input on conduit '" + spec_.id + "'");
      cv_.wait(lock, [&] { return !queue_.empty() || closed_ || shared_.cancelled; });
      who.unblock();
    }
    if (shared_.cancelled) throw Cancelled{};
    return !queue_.empty();
  }

  void close_send() {
    if (!tx_) {
      {
        std::lock_guard lock(mu_);
        closed_ = true;
      }
      cv_.notify_all();
      shared_.bump();
      return;
    }
    {
      std::lock_guard lock(mu_);
      ++in_transit_;  // the end-of-channel marker
    }
    try {
      tx_->close_send();
    } catch (const transport::TransportError&) {
    }
  }

  std::size_t in_transit() const {
    std::lock_guard lock(mu_);
    return in_transit_;
  }

  // Wakes every waiter and tears down transport after a cancellation.
  void abort() {
    {
      std::lock_guard lock(mu_);
    }
    cv_.notify_all();
    if (tx_) tx_->close();
    if (rx_) rx_->close();
  }

  void shutdown() {
    if (pump_.joinable()) {
      if (tx_) tx_->close_send();
      pump_.join();
    }
    if (tx_) tx_->close();
    if (rx_) rx_->close();
  }

 private:
  void pump() {
    try {
      while (auto frame = rx_->recv_framed()) {
        auto view = transport::decode_frame(*frame);
        if (view.conduit_hash != transport::conduit_hash(spec_.id)) {
          throw transport::IoError("frame for another conduit arrived on '" + spec_.id + "'");
        }
        Message msg;
        msg.conduit = spec_.id;
        msg.sender = spec_.from.submodel;
        msg.iteration = view.iteration;
        msg.payload = transport::frame_payload(view);
        {
          std::lock_guard lock(mu_);
          if (auto it = sent_at_.find(view.iteration); it != sent_at_.end()) {
            msg.sent_at_ns = it->second;
            sent_at_.erase(it);
          }
          queue_.push_back(std::move(msg));
          --in_transit_;
        }
        cv_.notify_all();
        shared_.bump();
      }
    } catch (...) {
      if (!shared_.cancelled) shared_.fail(std::current_exception());
    }
    {
      std::lock_guard lock(mu_);
      closed_ = true;
      in_transit_ = 0;
    }
    cv_.notify_all();
    shared_.bump();
  }

  const mml::ConduitSpec& spec_;
  const mml::MapperSpec* mapper_;
  std::size_t capacity_;  // 0 = unbounded
  RunShared& shared_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Message> queue_;
  std::size_t outstanding_ = 0;
  std::size_t in_transit_ = 0;
  std::uint64_t next_iteration_ = 0;
  bool closed_ = false;
  std::map<std::uint64_t, std::int64_t> sent_at_;

  std::unique_ptr<transport::Channel> tx_;
  std::unique_ptr<transport::Channel> rx_;
  std::thread pump_;
};

void RunShared::fail(std::exception_ptr e) {
  {
    std::lock_guard lock(mu);
    if (!first_error) first_error = std::move(e);
  }
  cancelled = true;
  for (auto* c : conduits) c->abort();
}

struct PortBinding {
  const mml::PortSpec* spec = nullptr;
  std::vector<Conduit*> out;
  Conduit* in = nullptr;
};

class KernelRunner final : public KernelContext {
 public:
  KernelRunner(const mml::SubmodelSpec& spec, std::unique_ptr<Kernel> kernel, KernelState& state, RunShared& shared,
               Params params, std::uint64_t seed, std::optional<std::uint64_t> steps_override, double speed_factor,
               std::string output_dir)
      : spec_(spec),
        kernel_(std::move(kernel)),
        state_(state),
        shared_(shared),
        params_(std::move(params)),
        seed_(seed),
        steps_override_(steps_override),
        speed_factor_(speed_factor),
        output_dir_(std::move(output_dir)),
        buffer_(shared.recorder.buffer(spec.id)) {
    for (const auto& p : spec_.ports) ports_[p.name].spec = &p;
  }

  void bind_out(const std::string& port, Conduit* c) { ports_.at(port).out.push_back(c); }
  void bind_in(const std::string& port, Conduit* c) { ports_.at(port).in = c; }

  void run() {
    try {
      std::vector<Conduit*> gates;
      for (const auto& [name, b] : ports_) {
        if (b.spec->direction == mml::PortDirection::kIn && b.spec->binding == OperatorPhase::kFInit) {
          gates.push_back(b.in);
        }
      }
      if (gates.empty()) {
        run_instance(false);
      } else {
        while (ready(gates)) run_instance(true);
      }
      close_outputs();
    } catch (const Cancelled&) {
    } catch (...) {
      if (!shared_.cancelled) shared_.fail(std::current_exception());
    }
    state_.activity = Activity::kDone;
    shared_.bump();
  }

  const std::vector<OperatorPhase>& trace() const { return trace_; }
  std::map<std::string, std::vector<double>>& outputs() { return outputs_; }

  // KernelContext
  const std::string& kernel_id() const override { return spec_.id; }
  const mml::SubmodelSpec& spec() const override { return spec_; }
  OperatorPhase phase() const override { return phase_; }
  std::uint64_t iteration() const override { return iteration_; }
  std::uint64_t steps() const override { return steps_; }
  std::uint64_t instance() const override { return instance_; }
  std::uint64_t seed() const override { return seed_; }
  const Params& params() const override { return params_; }
  const std::string& output_dir() const override { return output_dir_; }
  void set_output(const std::string& name, std::vector<double> values) override { outputs_[name] = std::move(values); }
  std::int64_t now_ns() const override { return shared_.now_ns(); }

  void send(std::string_view port, mml::Payload payload) override {
    const auto& b = port_for(port, mml::PortDirection::kOut);
    check_phase(*b.spec, "send");
    if (!mml::compatible(payload.type(), b.spec->type)) {
      throw mml::TypeError("port '" + b.spec->name + "' of '" + spec_.id + "' carries " +
                           mml::to_string(b.spec->type) + ", got " + mml::to_string(payload.type()));
    }
    for (std::size_t i = 0; i < b.out.size(); ++i) {
      auto cost = b.out[i]->send(spec_.id, i + 1 == b.out.size() ? std::move(payload) : payload, state_);
      account(cost);
    }
  }

  Message receive(std::string_view port) override {
    const auto& b = port_for(port, mml::PortDirection::kIn);
    check_phase(*b.spec, "receive");
    Cost cost;
    auto msg = b.in->take(state_, cost);
    account(cost);
    if (!msg) {
      throw ClosedError("conduit '" + b.in->spec().id + "' closed before a message reached port '" + b.spec->name +
                        "' of '" + spec_.id + "'");
    }
    if (!mml::compatible(msg->payload.type(), b.spec->type)) {
      throw mml::TypeError("port '" + b.spec->name + "' of '" + spec_.id + "' expects " +
                           mml::to_string(b.spec->type) + ", got " + mml::to_string(msg->payload.type()));
    }
    if (b.spec->binding == OperatorPhase::kFInit) ++init_receives_;
    return std::move(*msg);
  }

 private:
  bool ready(const std::vector<Conduit*>& gates) {
    for (auto* c : gates) {
      if (!c->wait_ready(state_)) return false;
    }
    return true;
  }

  void run_instance(bool gated) {
    init_receives_ = 0;
    iteration_ = 0;
    steps_ = steps_override_ ? *steps_override_ : mml::step_count(spec_.scale);
    call(OperatorPhase::kFInit, &Kernel::f_init);
    if (gated && init_receives_ == 0) {
      throw KernelError(spec_.id, OperatorPhase::kFInit, "F_INIT input was not received");
    }
    for (std::uint64_t i = 0; i < steps_; ++i) {
      iteration_ = i;
      call(OperatorPhase::kOi, &Kernel::o_i);
      call(OperatorPhase::kS, &Kernel::s);
      call(OperatorPhase::kB, &Kernel::b);
    }
    iteration_ = steps_;
    call(OperatorPhase::kOf, &Kernel::o_f);
    ++instance_;
  }

  void call(OperatorPhase phase, void (Kernel::*fn)(KernelContext&)) {
    if (shared_.cancelled) throw Cancelled{};
    phase_ = phase;
    trace_.push_back(phase);
    coupling_in_phase_ = 0;
    const auto t0 = Clock::now();
    try {
      (kernel_.get()->*fn)(*this);
    } catch (const Cancelled&) {
      throw;
    } catch (const transport::TransportError&) {
      if (shared_.cancelled) throw Cancelled{};
      throw;
    } catch (const KernelError&) {
      throw;
    } catch (const std::exception& e) {
      if (shared_.cancelled) throw Cancelled{};
      throw KernelError(spec_.id, phase, e.what(), std::current_exception());
    } catch (...) {
      if (shared_.cancelled) throw Cancelled{};
      throw KernelError(spec_.id, phase, "unknown exception", std::current_exception());
    }
    const auto elapsed = ns_between(t0, Clock::now());
    const auto compute = std::max<std::int64_t>(0, elapsed - coupling_in_phase_);
    buffer_.record({spec_.id, phase, perf::SampleKind::kCompute,
                    static_cast<std::int64_t>(static_cast<double>(compute) * speed_factor_), iteration_});
  }

  void account(const Cost& cost) {
    buffer_.record({spec_.id, phase_, perf::SampleKind::kCouplingWait, cost.wait_ns, iteration_});
    buffer_.record({spec_.id, phase_, perf::SampleKind::kCouplingIo, cost.io_ns, iteration_});
    coupling_in_phase_ += cost.wait_ns + cost.io_ns;
  }

  const PortBinding& port_for(std::string_view port, mml::PortDirection dir) const {
    auto it = ports_.find(std::string(port));
    if (it == ports_.end()) throw PortError("submodel '" + spec_.id + "' has no port '" + std::string(port) + "'");
    if (it->second.spec->direction != dir) {
      throw PortError("port '" + std::string(port) + "' of '" + spec_.id + "' is an " +
                      std::string(mml::to_string(it->second.spec->direction)) + "-port");
    }
    return it->second;
  }

  void check_phase(const mml::PortSpec& port, const char* op) const {
    if (phase_ != port.binding) {
      throw PhaseError(std::string(op) + " on port '" + port.name + "' of '" + spec_.id + "' is bound to " +
                       std::string(mml::to_string(port.binding)) + " but was called during " +
                       std::string(mml::to_string(phase_)));
    }
  }

  void close_outputs() {
    for (auto& [name, b] : ports_) {
      for (auto* c : b.out) c->close_send();
    }
  }

  const mml::SubmodelSpec& spec_;
  std::unique_ptr<Kernel> kernel_;
  KernelState& state_;
  RunShared& shared_;
  Params params_;
  std::uint64_t seed_;
  std::optional<std::uint64_t> steps_override_;
  double speed_factor_;
  std::string output_dir_;
  perf::Recorder::Buffer& buffer_;
  std::map<std::string, PortBinding> ports_;

  OperatorPhase phase_ = OperatorPhase::kFInit;
  std::uint64_t iteration_ = 0;
  std::uint64_t steps_ = 0;
  std::uint64_t instance_ = 0;
  std::int64_t coupling_in_phase_ = 0;
  int init_receives_ = 0;
  std::vector<OperatorPhase> trace_;
  std::map<std::string, std::vector<double>> outputs_;
};

// Listener and relays backing the cross-site conduits of one run.
struct TransportFabric {
  std::unique_ptr<transport::Listener> listener;
  std::vector<std::unique_ptr<transport::Relay>> relays;

  std::pair<std::unique_ptr<transport::Channel>, std::unique_ptr<transport::Channel>> connect(
      const std::string& name, mml::TransportHint kind, const RunOptions& options) {
    if (!listener) listener = std::make_unique<transport::Listener>(transport::HostPort{}, std::nullopt, options.streams);
    transport::EndpointAddress address;
    if (kind == mml::TransportHint::kRelayed) {
      const int hops = std::max(1, options.relay_hops);
      std::vector<transport::HostPort> chain(static_cast<std::size_t>(hops));
      transport::HostPort next = listener->address();
      for (int i = hops - 1; i >= 0; --i) {
        relays.push_back(transport::run_relay({}, {{name, next}}));
        next = relays.back()->address();
        chain[static_cast<std::size_t>(i)] = next;
      }
      address = transport::EndpointAddress::relayed(name, chain, listener->address());
    } else {
      address = transport::EndpointAddress::tcp(name, listener->address());
    }
    auto tx = transport::open_channel(address, options.streams);
    auto rx = listener->accept(name, options.streams.connect_timeout);
    return {std::move(tx), std::move(rx)};
  }

  void stop() {
    for (auto& r : relays) r->stop();
    if (listener) listener->stop();
  }
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

DeadlockError::DeadlockError(std::vector<std::string> blocked)
    : Error([&] {
        std::sort(blocked.begin(), blocked.end());
        std::string msg = "deadlock: every live kernel is blocked with no message in flight";
        for (const auto& b : blocked) msg += "\n  " + b;
        return msg;
      }()),
      blocked_(std::move(blocked)) {}

std::string format_message_log(const std::vector<MessageRecord>& log) {
  std::ostringstream out;
  for (const auto& r : log) {
    out << r.conduit << ' ' << mml::to_string(r.from) << ' ' << mml::to_string(r.to) << ' ' << r.iteration << ' '
        << mml::to_string(r.sent_kind);
    if (r.kind != r.sent_kind) out << '>' << mml::to_string(r.kind);
    out << ' ' << r.bytes << ' ' << hex64(r.hash) << '\n';
  }
  return out.str();
}

bool legal_phase_order(const std::vector<OperatorPhase>& trace) {
  // States: 0 expect F_INIT, 1 after F_INIT or B, 2 after O_I, 3 after S, 4 after O_F.
  int state = 0;
  for (auto p : trace) {
    switch (state) {
      case 0:
      case 4:
        if (p != OperatorPhase::kFInit) return false;
        state = 1;
        break;
      case 1:
        if (p == OperatorPhase::kOi) {
          state = 2;
        } else if (p == OperatorPhase::kOf) {
          state = 4;
        } else {
          return false;
        }
        break;
      case 2:
        if (p != OperatorPhase::kS) return false;
        state = 3;
        break;
      case 3:
        if (p != OperatorPhase::kB) return false;
        state = 1;
        break;
    }
  }
  return state == 4;
}

RunResult run(const ExecutionPlan& plan, const mml::ModelDescription& model, const KernelRegistry& registry,
              const RunOptions& options) {
  options.streams.validate();
  RunShared shared;
  const std::size_t capacity = plan.mode == ExecutionMode::kSequenced ? 0 : plan.buffer_capacity;

  std::map<std::string, std::unique_ptr<Conduit>> conduits;
  for (const auto& c : model.conduits) {
    const mml::MapperSpec* mapper = c.via ? model.find_mapper(*c.via) : nullptr;
    auto conduit = std::make_unique<Conduit>(c, mapper, capacity, shared);
    shared.conduits.push_back(conduit.get());
    conduits[c.id] = std::move(conduit);
  }

  TransportFabric fabric;
  for (const auto& c : model.conduits) {
    const auto& binding = plan.conduit_bindings.at(c.id);
    if (binding.transport == mml::TransportHint::kInproc) continue;
    auto [tx, rx] = fabric.connect(c.id, binding.transport, options);
    if (options.link_shape && binding.from_site != binding.to_site) {
      tx = transport::shape_link(std::move(tx), *options.link_shape);
    }
    conduits.at(c.id)->attach(std::move(tx), std::move(rx));
  }

  std::vector<std::unique_ptr<KernelState>> states;
  std::vector<std::unique_ptr<KernelRunner>> runners;
  std::map<std::string, KernelRunner*> by_id;
  for (const auto& id : plan.order) {
    const auto* spec = model.find_submodel(id);
    Params params = options.params;
    if (auto it = options.kernel_params.find(id); it != options.kernel_params.end()) {
      for (const auto& [k, v] : it->second) params[k] = v;
    }
    const auto seed = splitmix64(options.seed ^ bytes::fnv1a64(bytes::as_bytes(id)));
    auto kernel = registry.create(spec->implementation_key, KernelSetup{spec, seed, &params});
    std::optional<std::uint64_t> steps;
    if (auto it = options.step_overrides.find(id); it != options.step_overrides.end()) steps = it->second;
    double factor = 1.0;
    if (auto it = options.speed_factors.find(plan.placements.at(id)); it != options.speed_factors.end()) {
      factor = it->second;
    }
    states.push_back(std::make_unique<KernelState>());
    states.back()->id = id;
    runners.push_back(std::make_unique<KernelRunner>(*spec, std::move(kernel), *states.back(), shared,
                                                     std::move(params), seed, steps, factor, options.output_dir));
    by_id[id] = runners.back().get();
  }
  for (const auto& c : model.conduits) {
    by_id.at(c.from.submodel)->bind_out(c.from.port, conduits.at(c.id).get());
    by_id.at(c.to.submodel)->bind_in(c.to.port, conduits.at(c.id).get());
  }

  const auto start = Clock::now();
  if (plan.mode == ExecutionMode::kSequenced) {
    for (auto& r : runners) {
      if (shared.cancelled) break;
      r->run();
    }
  } else {
    std::vector<std::thread> threads;
    for (auto& r : runners) threads.emplace_back([&r] { r->run(); });
    std::thread monitor([&] {
      std::uint64_t last_progress = ~0ULL;
      int quiet_polls = 0;
      std::optional<Clock::time_point> blocked_since;
      while (!shared.cancelled) {
        std::this_thread::sleep_for(options.deadlock_poll);
        bool any_live = false;
        bool all_blocked = true;
        for (const auto& s : states) {
          const auto a = s->activity.load();
          if (a == Activity::kDone) continue;
          any_live = true;
          if (a != Activity::kBlocked) all_blocked = false;
        }
        if (!any_live) return;
        if (!all_blocked) {
          quiet_polls = 0;
          blocked_since.reset();
          last_progress = ~0ULL;
          continue;
        }
        if (!blocked_since) blocked_since = Clock::now();
        std::size_t transit = 0;
        for (auto* c : shared.conduits) transit += c->in_transit();
        const auto p = shared.progress.load();
        quiet_polls = (transit == 0 && p == last_progress) ? quiet_polls + 1 : 0;
        last_progress = p;
        if (quiet_polls >= 3 || Clock::now() - *blocked_since >= options.watchdog) {
          std::vector<std::string> blocked;
          for (const auto& s : states) {
            if (s->activity.load() == Activity::kBlocked) blocked.push_back(s->describe());
          }
          shared.fail(std::make_exception_ptr(DeadlockError(std::move(blocked))));
          return;
        }
      }
    });
    for (auto& t : threads) t.join();
    monitor.join();
  }
  const auto wall_ns = ns_between(start, Clock::now());

  for (auto& [id, c] : conduits) c->shutdown();
  fabric.stop();
  if (shared.first_error) std::rethrow_exception(shared.first_error);

  RunResult result;
  result.wall_ns = wall_ns;
  result.samples = shared.recorder.samples();
  perf::AggregateOptions agg;
  agg.scenario = options.scenario.empty() ? model.name : options.scenario;
  agg.critical_kernel = options.critical_kernel;
  agg.usage_pct = options.usage_pct;
  agg.baseline_wall_ns = options.baseline_wall_ns;
  agg.generated_at = perf::wall_clock_now();
  result.report = perf::aggregate(result.samples, wall_ns, agg);
  result.messages = std::move(shared.log);
  for (auto& r : runners) {
    result.traces[r->kernel_id()] = r->trace();
    result.outputs[r->kernel_id()] = std::move(r->outputs());
  }
  return result;
}

}  // namespace mmsf::runtime
