#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mmsf/error.hpp"
#include "mmsf/mml/model.hpp"
#include "mmsf/mml/payload.hpp"

namespace mmsf::runtime {

using mml::OperatorPhase;

class PhaseError : public Error {
 public:
  using Error::Error;
};

// Port not declared on the submodel, or used in the wrong direction.
class PortError : public Error {
 public:
  using Error::Error;
};

// The sending side finished without providing the awaited message.
class ClosedError : public Error {
 public:
  using Error::Error;
};

class KernelError : public Error {
 public:
  KernelError(std::string kernel, OperatorPhase phase, const std::string& what, std::exception_ptr cause = nullptr)
      : Error("kernel '" + kernel + "' failed in " + std::string(mml::to_string(phase)) + ": " + what),
        kernel_(std::move(kernel)),
        phase_(phase),
        cause_(std::move(cause)) {}

  const std::string& kernel() const { return kernel_; }
  OperatorPhase phase() const { return phase_; }
  // Original exception thrown by the callback, if any.
  std::exception_ptr cause() const { return cause_; }

 private:
  std::string kernel_;
  OperatorPhase phase_;
  std::exception_ptr cause_;
};

class DuplicateKey : public Error {
 public:
  explicit DuplicateKey(const std::string& key) : Error("kernel '" + key + "' is already registered") {}
};

struct Message {
  std::string conduit;
  std::string sender;
  std::uint64_t iteration = 0;
  mml::Payload payload;
  std::int64_t sent_at_ns = 0;       // monotonic, relative to run start
  std::int64_t delivered_at_ns = 0;
};

using Params = std::map<std::string, std::string>;

double param_double(const Params& params, const std::string& key, double fallback);
std::int64_t param_int(const Params& params, const std::string& key, std::int64_t fallback);
std::string param_string(const Params& params, const std::string& key, const std::string& fallback);

// Handle passed to kernel callbacks. Valid only during the callback.
class KernelContext {
 public:
  virtual ~KernelContext() = default;

  virtual const std::string& kernel_id() const = 0;
  virtual const mml::SubmodelSpec& spec() const = 0;
  const mml::ScaleSpec& scale() const { return spec().scale; }
  virtual OperatorPhase phase() const = 0;

  // S-step index within the current instance; equals steps() during O_F.
  virtual std::uint64_t iteration() const = 0;
  virtual std::uint64_t steps() const = 0;
  // How many times the kernel has been (re)initialized, starting at 0.
  virtual std::uint64_t instance() const = 0;
  double time() const { return static_cast<double>(iteration()) * scale().dt; }

  virtual void send(std::string_view port, mml::Payload payload) = 0;
  virtual Message receive(std::string_view port) = 0;

  virtual std::uint64_t seed() const = 0;
  virtual const Params& params() const = 0;
  // Empty when the run writes no artifacts.
  virtual const std::string& output_dir() const = 0;
  virtual void set_output(const std::string& name, std::vector<double> values) = 0;
  // Monotonic nanoseconds since the run started.
  virtual std::int64_t now_ns() const = 0;
};

class Kernel {
 public:
  virtual ~Kernel() = default;
  virtual void f_init(KernelContext&) {}
  virtual void o_i(KernelContext&) {}
  virtual void s(KernelContext&) {}
  virtual void b(KernelContext&) {}
  virtual void o_f(KernelContext&) {}
};

struct KernelCallbacks {
  std::function<void(KernelContext&)> f_init;
  std::function<void(KernelContext&)> o_i;
  std::function<void(KernelContext&)> s;
  std::function<void(KernelContext&)> b;
  std::function<void(KernelContext&)> o_f;
};

struct KernelSetup {
  const mml::SubmodelSpec* spec = nullptr;
  std::uint64_t seed = 0;
  const Params* params = nullptr;
};

using KernelFactory = std::function<std::unique_ptr<Kernel>(const KernelSetup&)>;

class KernelRegistry {
 public:
  // Throws DuplicateKey.
  void register_kernel(const std::string& key, KernelFactory factory);
  // Stateless callbacks shared by every submodel using the key.
  void register_kernel(const std::string& key, KernelCallbacks callbacks);

  bool contains(const std::string& key) const;
  std::vector<std::string> keys() const;
  // Throws Error for an unknown key.
  std::unique_ptr<Kernel> create(const std::string& key, const KernelSetup& setup) const;

 private:
  std::map<std::string, KernelFactory> factories_;
};

}  // namespace mmsf::runtime
