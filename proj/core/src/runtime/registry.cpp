#include <charconv>
#include <cstdlib>

#include "mmsf/runtime/kernel.hpp"

namespace mmsf::runtime {
namespace {

class CallbackKernel final : public Kernel {
 public:
  explicit CallbackKernel(const KernelCallbacks& cb) : cb_(cb) {}
  void f_init(KernelContext& ctx) override { call(cb_.f_init, ctx); }
  void o_i(KernelContext& ctx) override { call(cb_.o_i, ctx); }
  void s(KernelContext& ctx) override { call(cb_.s, ctx); }
  void b(KernelContext& ctx) override { call(cb_.b, ctx); }
  void o_f(KernelContext& ctx) override { call(cb_.o_f, ctx); }

 private:
  static void call(const std::function<void(KernelContext&)>& f, KernelContext& ctx) {
    if (f) f(ctx);
  }
  const KernelCallbacks& cb_;
};

}  // namespace

double param_double(const Params& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  double v = 0;
  const auto& s = it->second;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw Error("parameter " + key + "='" + s + "' is not a number");
  return v;
}

std::int64_t param_int(const Params& params, const std::string& key, std::int64_t fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  std::int64_t v = 0;
  const auto& s = it->second;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw Error("parameter " + key + "='" + s + "' is not an integer");
  return v;
}

std::string param_string(const Params& params, const std::string& key, const std::string& fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void KernelRegistry::register_kernel(const std::string& key, KernelFactory factory) {
  if (!factories_.emplace(key, std::move(factory)).second) throw DuplicateKey(key);
}

void KernelRegistry::register_kernel(const std::string& key, KernelCallbacks callbacks) {
  auto shared = std::make_shared<KernelCallbacks>(std::move(callbacks));
  register_kernel(key, [shared](const KernelSetup&) -> std::unique_ptr<Kernel> {
    return std::make_unique<CallbackKernel>(*shared);
  });
}

bool KernelRegistry::contains(const std::string& key) const { return factories_.count(key) > 0; }

std::vector<std::string> KernelRegistry::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, f] : factories_) out.push_back(k);
  return out;
}

std::unique_ptr<Kernel> KernelRegistry::create(const std::string& key, const KernelSetup& setup) const {
  auto it = factories_.find(key);
  if (it == factories_.end()) throw Error("no kernel registered for '" + key + "'");
  return it->second(setup);
}

}  // namespace mmsf::runtime
