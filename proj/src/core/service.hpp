#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "reduction.hpp"
#include "scheduler.hpp"

namespace sparft {

struct ServiceConfig {
  std::filesystem::path manifest;
  std::filesystem::path state_dir;  // per-session checkpoints and decision logs; empty = in memory only
  SchedulerConfig scheduler;
  std::uint64_t checkpoint_interval = 1;  // reports between checkpoints
  std::string transport = "stdio";        // "stdio" or "tcp:<host>:<port>"
};

struct TcpEndpoint {
  std::string host;
  std::uint16_t port = 0;
};

// Parses "stdio" (returns nullopt) or "tcp:<host>:<port>".
std::optional<TcpEndpoint> parse_transport(std::string_view transport);

// Line-delimited JSON front end over independent scheduler sessions.
//
//   {"op":"next_batch","session":s}         -> {"step":t,"cluster":c,"ids":[...]}
//   {"op":"report","session":s,"step":t,"r_avg":r} -> {"ok":true}
//   {"op":"state","session":s}              -> {"R":[...],"n":[...],"step":t}
//   {"op":"peek","session":s}               -> {"step":t,"pending":{step,cluster,ids}|null,"R":[...],"n":[...]}
//   {"op":"shutdown"}                        -> {"ok":true}
//
// Failures answer {"error":reason,"message":text} and leave the session usable.
class Service {
 public:
  explicit Service(ServiceConfig config);
  Service(ServiceConfig config, ReducedSet reduced);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // One request line in, one response line out (no trailing newline).
  std::string handle(std::string_view line);

  bool shutting_down() const noexcept { return shutdown_; }
  void checkpoint_all();

  const ServiceConfig& config() const noexcept { return config_; }

 private:
  struct Session;

  Session& session(const std::string& id);
  void checkpoint(const std::string& id, Session& s);

  ServiceConfig config_;
  ReducedSet reduced_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;
  bool shutdown_ = false;
};

// Serves until shutdown or end of input; end of input checkpoints every session.
void serve_stream(Service& service, std::istream& in, std::ostream& out);

// Accepts connections one at a time on host:port. `on_listen` receives the
// bound port (useful with port 0). Returns when a client sends shutdown.
void serve_tcp(Service& service, const TcpEndpoint& endpoint,
               const std::function<void(std::uint16_t)>& on_listen = {});

// Blocks serving over the transport named in the config.
void serve(Service& service);

}  // namespace sparft
