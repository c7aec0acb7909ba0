#include "mmsf/transport/relay.hpp"

#include <atomic>
#include <fstream>
#include <list>
#include <mutex>
#include <poll.h>
#include <sstream>
#include <sys/socket.h>
#include <thread>

#include "transport/handshake.hpp"
#include "transport/socket.hpp"

namespace mmsf::transport {

RelayRoute parse_relay_config(std::string_view text) {
  RelayRoute route;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string name, hop, extra;
    if (!(fields >> name)) continue;
    if (!(fields >> hop) || (fields >> extra)) {
      throw Error("relay config line " + std::to_string(lineno) + ": expected '<channel> <host>:<port>'");
    }
    HostPort next;
    try {
      next = parse_host_port(hop);
    } catch (const Error& e) {
      throw Error("relay config line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!route.emplace(name, next).second) {
      throw Error("relay config line " + std::to_string(lineno) + ": duplicate channel '" + name + "'");
    }
  }
  return route;
}

RelayRoute load_relay_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read relay config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_relay_config(ss.str());
}

struct Relay::State {
  HostPort address;
  RelayRoute route;
  RelayOptions options;
  net::Socket listener;

  struct Counters {
    std::atomic<std::uint64_t> forward{0};
    std::atomic<std::uint64_t> back{0};
  };
  // Built once from the route, never resized, so lookups need no lock.
  std::map<std::string, Counters> counters;

  struct Link {
    net::Socket upstream;
    net::Socket downstream;
  };

  std::mutex mu;
  std::list<Link> links;
  std::list<std::thread> workers;
  std::vector<std::string> errors;
  std::atomic<bool> stopping{false};
  std::atomic<bool> killed{false};
  std::thread acceptor;

  void log_error(std::string message) {
    std::lock_guard lock(mu);
    errors.push_back(std::move(message));
  }

  static void reply(const net::Socket& s, const std::string& line, std::chrono::milliseconds timeout) {
    try {
      net::write_all(s, bytes::as_bytes(line + "\n"), timeout);
    } catch (const IoError&) {
    }
  }

  void serve(Link& link) {
    std::string line;
    try {
      line = net::read_line(link.upstream, options.handshake_timeout);
    } catch (const IoError& e) {
      log_error(std::string("bad handshake: ") + e.what());
      return;
    }
    auto hello = parse_hello(line);
    if (!hello) {
      log_error("malformed handshake '" + line + "'");
      reply(link.upstream, "ERR malformed handshake", options.handshake_timeout);
      return;
    }
    auto it = route.find(hello->channel);
    if (it == route.end()) {
      log_error(RouteError("unknown channel '" + hello->channel + "' at relay " + address.to_string()).what());
      reply(link.upstream, "ERR unknown channel '" + hello->channel + "' at relay " + address.to_string(),
            options.handshake_timeout);
      return;
    }
    try {
      auto down = net::connect_tcp(it->second.host, it->second.port, options.connect_timeout);
      {
        std::lock_guard lock(mu);
        link.downstream = std::move(down);
      }
    } catch (const ConnectError&) {
      const auto msg = "relay hop " + it->second.to_string() + " unreachable from relay " + address.to_string();
      log_error(msg);
      reply(link.upstream, "ERR " + msg, options.handshake_timeout);
      return;
    }
    std::string answer;
    try {
      net::write_all(link.downstream, bytes::as_bytes(line + "\n"), options.handshake_timeout);
      answer = net::read_line(link.downstream, options.handshake_timeout);
    } catch (const IoError& e) {
      answer = "ERR handshake with " + it->second.to_string() + " failed: " + e.what();
      log_error(answer.substr(4));
    }
    reply(link.upstream, answer, options.handshake_timeout);
    if (answer != kHelloOk) return;
    splice(link, counters.at(hello->channel));
  }

  // Copies bytes in both directions until both sides have finished.
  void splice(Link& link, Counters& c) {
    std::vector<std::byte> buf(1 << 16);
    bool up_open = true, down_open = true;
    while ((up_open || down_open) && !stopping) {
      pollfd fds[2] = {{link.upstream.fd(), static_cast<short>(up_open ? POLLIN : 0), 0},
                       {link.downstream.fd(), static_cast<short>(down_open ? POLLIN : 0), 0}};
      int rc = ::poll(fds, 2, 200);
      if (rc < 0 && errno != EINTR) return;
      if (rc <= 0) continue;
      auto pump = [&](const net::Socket& from, const net::Socket& to, bool& open, std::atomic<std::uint64_t>& n) {
        ssize_t got = ::recv(from.fd(), buf.data(), buf.size(), MSG_DONTWAIT);
        if (got > 0) {
          net::write_all(to, std::span(buf).first(static_cast<std::size_t>(got)), net::kForever);
          n += static_cast<std::uint64_t>(got);
          return true;
        }
        if (got == 0) {
          open = false;
          to.shutdown_write();
          return true;
        }
        return errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK;
      };
      try {
        if (up_open && (fds[0].revents & (POLLIN | POLLHUP | POLLERR))) {
          if (!pump(link.upstream, link.downstream, up_open, c.forward)) return;
        }
        if (down_open && (fds[1].revents & (POLLIN | POLLHUP | POLLERR))) {
          if (!pump(link.downstream, link.upstream, down_open, c.back)) return;
        }
      } catch (const IoError&) {
        return;
      }
    }
  }

  void finish(std::list<Link>::iterator link) {
    std::lock_guard lock(mu);
    if (killed) {
      link->upstream.set_abortive_close();
      link->downstream.set_abortive_close();
    }
    links.erase(link);
  }

  void run() {
    while (!stopping) {
      auto s = net::accept_tcp(listener, std::chrono::milliseconds(100));
      if (!s.valid()) continue;
      std::lock_guard lock(mu);
      if (stopping) break;
      auto link = links.insert(links.end(), Link{std::move(s), {}});
      workers.emplace_back([this, link] {
        serve(*link);
        finish(link);
      });
    }
  }

  void shutdown(bool abrupt) {
    if (stopping.exchange(true)) return;
    killed = abrupt;
    listener.shutdown_both();
    if (acceptor.joinable()) acceptor.join();
    {
      std::lock_guard lock(mu);
      for (auto& l : links) {
        if (abrupt) {
          l.upstream.set_abortive_close();
          l.downstream.set_abortive_close();
        }
        l.upstream.shutdown_both();
        l.downstream.shutdown_both();
      }
    }
    std::list<std::thread> threads;
    {
      std::lock_guard lock(mu);
      threads.swap(workers);
    }
    for (auto& t : threads) t.join();
    listener.reset();
  }
};

Relay::Relay(HostPort listen, RelayRoute route, RelayOptions options) : state_(std::make_shared<State>()) {
  state_->listener = net::listen_tcp(listen.host, listen.port);
  state_->address = {listen.host, net::local_port(state_->listener)};
  state_->route = std::move(route);
  state_->options = options;
  for (const auto& [name, hop] : state_->route) state_->counters[name];
  state_->acceptor = std::thread([s = state_.get()] { s->run(); });
}

Relay::~Relay() { stop(); }

HostPort Relay::address() const { return state_->address; }
std::uint16_t Relay::port() const { return state_->address.port; }
const RelayRoute& Relay::route() const { return state_->route; }

std::uint64_t Relay::bytes_forwarded(const std::string& channel) const {
  auto it = state_->counters.find(channel);
  return it == state_->counters.end() ? 0 : it->second.forward.load();
}

std::uint64_t Relay::bytes_returned(const std::string& channel) const {
  auto it = state_->counters.find(channel);
  return it == state_->counters.end() ? 0 : it->second.back.load();
}

std::vector<std::string> Relay::errors() const {
  std::lock_guard lock(state_->mu);
  return state_->errors;
}

void Relay::kill() { state_->shutdown(true); }
void Relay::stop() { state_->shutdown(false); }

std::unique_ptr<Relay> run_relay(HostPort listen, RelayRoute route, RelayOptions options) {
  return std::make_unique<Relay>(std::move(listen), std::move(route), options);
}

}  // namespace mmsf::transport
