#include "service.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <iostream>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "corpus.hpp"
#include "error.hpp"

namespace sparft {

using nlohmann::json;

namespace {

json error_response(std::string_view reason, std::string_view message) {
  return {{"error", reason}, {"message", message}};
}

// Messages can echo request bytes that are not valid UTF-8.
std::string wire(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

bool valid_session_id(const std::string& id) {
  if (id.empty() || id.size() > 128 || id.front() == '.') return false;
  for (char ch : id) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
                    ch == '_' || ch == '-' || ch == '.';
    if (!ok) return false;
  }
  return true;
}

void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  write_file(tmp, bytes);
  std::filesystem::rename(tmp, path);
}

}  // namespace

struct Service::Session {
  CurriculumScheduler scheduler;
  std::filesystem::path checkpoint_path;
  std::filesystem::path log_path;
  std::ofstream log;
};

std::optional<TcpEndpoint> parse_transport(std::string_view transport) {
  if (transport == "stdio") return std::nullopt;
  if (transport.substr(0, 4) != "tcp:")
    fail(ErrorCode::InvalidArgument, "transport must be 'stdio' or 'tcp:<host>:<port>', got '" +
                                         std::string(transport) + "'");
  const auto rest = transport.substr(4);
  const auto colon = rest.rfind(':');
  if (colon == std::string_view::npos || colon == 0)
    fail(ErrorCode::InvalidArgument, "tcp transport needs '<host>:<port>'");
  TcpEndpoint ep;
  ep.host = std::string(rest.substr(0, colon));
  const std::string port(rest.substr(colon + 1));
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(port, &used);
    if (used != port.size() || v > 65535) throw std::out_of_range("port");
    ep.port = static_cast<std::uint16_t>(v);
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidArgument, "invalid tcp port '" + port + "'");
  }
  return ep;
}

Service::Service(ServiceConfig config) : Service(config, load_reduced_set(config.manifest)) {}

Service::Service(ServiceConfig config, ReducedSet reduced) : config_(std::move(config)), reduced_(std::move(reduced)) {
  require(config_.checkpoint_interval >= 1, "checkpoint_interval must be at least 1");
  require(reduced_.cluster_count() >= 1, "manifest has no clusters");
  parse_transport(config_.transport);
  if (!config_.state_dir.empty()) std::filesystem::create_directories(config_.state_dir);
  // Constructing one scheduler up front surfaces config errors before serving.
  CurriculumScheduler probe(reduced_, config_.scheduler);
}

Service::~Service() = default;

Service::Session& Service::session(const std::string& id) {
  if (auto it = sessions_.find(id); it != sessions_.end()) return *it->second;
  if (!valid_session_id(id))
    throw ProtocolError("bad_session", "session id must be 1-128 characters of [A-Za-z0-9_.-] not starting with '.'");

  std::filesystem::path ckpt, log;
  if (!config_.state_dir.empty()) {
    ckpt = config_.state_dir / (id + ".checkpoint.json");
    log = config_.state_dir / (id + ".decisions.jsonl");
  }

  std::optional<CurriculumScheduler> sched;
  if (!ckpt.empty() && std::filesystem::exists(ckpt)) {
    sched.emplace(CurriculumScheduler::restore(reduced_, read_file(ckpt)));
    if (sched->config().batch_size != config_.scheduler.batch_size ||
        sched->config().epsilon != config_.scheduler.epsilon || sched->config().seed != config_.scheduler.seed)
      fail(ErrorCode::InvalidArgument, "checkpoint for session '" + id + "' was written with a different config");
  } else {
    sched.emplace(reduced_, config_.scheduler);
  }

  auto s = std::unique_ptr<Session>(new Session{std::move(*sched), ckpt, log, {}});
  if (!log.empty()) {
    // Keep only decisions the restored state already accounts for.
    std::string kept;
    if (std::filesystem::exists(log)) {
      std::istringstream in(read_file(log));
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (parse_decision_line(line).t < s->scheduler.state().step()) kept += line + "\n";
      }
    }
    atomic_write(log, kept);
    s->log.open(log, std::ios::app | std::ios::binary);
    if (!s->log) fail(ErrorCode::Io, "cannot open decision log '" + log.string() + "'");
  }
  auto& ref = *s;
  sessions_.emplace(id, std::move(s));
  return ref;
}

void Service::checkpoint(const std::string&, Session& s) {
  if (s.checkpoint_path.empty()) return;
  atomic_write(s.checkpoint_path, s.scheduler.checkpoint());
}

void Service::checkpoint_all() {
  for (auto& [id, s] : sessions_) checkpoint(id, *s);
}

std::string Service::handle(std::string_view line) {
  json req;
  try {
    req = json::parse(line);
  } catch (const json::parse_error& e) {
    return wire(error_response("bad_json", e.what()));
  }
  if (!req.is_object()) return wire(error_response("bad_request", "request must be a JSON object"));

  try {
    const auto op_it = req.find("op");
    if (op_it == req.end() || !op_it->is_string()) return wire(error_response("bad_request", "missing string 'op'"));
    const std::string op = *op_it;

    if (op == "shutdown") {
      checkpoint_all();
      shutdown_ = true;
      return wire(json{{"ok", true}});
    }
    if (op != "next_batch" && op != "report" && op != "state" && op != "peek")
      return wire(error_response("unknown_op", "unknown op '" + op + "'"));

    const auto sid = req.find("session");
    if (sid == req.end() || !sid->is_string())
      return wire(error_response("bad_request", "missing string 'session'"));
    const std::string id = *sid;
    Session& s = session(id);
    const BanditState& st = s.scheduler.state();

    if (op == "next_batch") {
      const BatchRequest b = s.scheduler.next_batch();
      return wire(json{{"step", b.step}, {"cluster", b.cluster}, {"ids", b.ids}});
    }
    if (op == "state") {
      return wire(json{{"R", std::vector<double>(st.reward().begin(), st.reward().end())},
                       {"n", std::vector<std::uint64_t>(st.pulls().begin(), st.pulls().end())},
                       {"step", st.step()}});
    }
    if (op == "peek") {
      const auto& p = s.scheduler.pending();
      return wire(json{{"step", st.step()},
                       {"pending", p ? json{{"step", p->step}, {"cluster", p->cluster}, {"ids", p->ids}} : json(nullptr)},
                       {"R", std::vector<double>(st.reward().begin(), st.reward().end())},
                       {"n", std::vector<std::uint64_t>(st.pulls().begin(), st.pulls().end())}});
    }

    // report
    const auto step = req.find("step");
    const auto r = req.find("r_avg");
    if (step == req.end() || !step->is_number_unsigned())
      return wire(error_response("bad_request", "report needs a nonnegative integer 'step'"));
    if (r == req.end() || !r->is_number())
      return wire(error_response("bad_request", "report needs a numeric 'r_avg'"));
    const DecisionRecord rec = s.scheduler.report(step->get<std::uint64_t>(), r->get<double>());
    if (s.log.is_open()) {
      s.log << to_json_line(rec) << '\n';
      s.log.flush();
    }
    if (s.scheduler.state().step() % config_.checkpoint_interval == 0) checkpoint(id, s);
    return wire(json{{"ok", true}});
  } catch (const ProtocolError& e) {
    return wire(error_response(e.reason(), e.what()));
  } catch (const Error& e) {
    return wire(error_response(e.code() == ErrorCode::InvalidArgument ? "bad_request" : "internal", e.what()));
  } catch (const std::exception& e) {
    return wire(error_response("internal", e.what()));
  }
}

void serve_stream(Service& service, std::istream& in, std::ostream& out) {
  std::string line;
  while (!service.shutting_down() && std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out << service.handle(line) << '\n';
    out.flush();
  }
  if (!service.shutting_down()) service.checkpoint_all();
}

namespace {

class Fd {
 public:
  explicit Fd(int fd = -1) : fd_(fd) {}
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const noexcept { return fd_; }

 private:
  int fd_;
};

bool send_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

void serve_connection(Service& service, int fd) {
  std::string buffer;
  char chunk[4096];
  while (!service.shutting_down()) {
    const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    while ((nl = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (!send_all(fd, service.handle(line) + "\n")) return;
      if (service.shutting_down()) return;
    }
  }
}

}  // namespace

void serve_tcp(Service& service, const TcpEndpoint& endpoint, const std::function<void(std::uint16_t)>& on_listen) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* found = nullptr;
  const std::string port = std::to_string(endpoint.port);
  if (int rc = ::getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &found); rc != 0)
    fail(ErrorCode::Io, "cannot resolve '" + endpoint.host + "': " + ::gai_strerror(rc));
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> addrs(found, &::freeaddrinfo);

  Fd listener(::socket(found->ai_family, found->ai_socktype, found->ai_protocol));
  if (listener.get() < 0) fail(ErrorCode::Io, std::string("socket: ") + std::strerror(errno));
  int yes = 1;
  ::setsockopt(listener.get(), SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  if (::bind(listener.get(), found->ai_addr, found->ai_addrlen) != 0)
    fail(ErrorCode::Io, "bind " + endpoint.host + ":" + port + ": " + std::strerror(errno));
  if (::listen(listener.get(), 8) != 0) fail(ErrorCode::Io, std::string("listen: ") + std::strerror(errno));

  sockaddr_storage bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(listener.get(), reinterpret_cast<sockaddr*>(&bound), &len);
  const std::uint16_t bound_port = ntohs(bound.ss_family == AF_INET6
                                             ? reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port
                                             : reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
  if (on_listen) on_listen(bound_port);

  while (!service.shutting_down()) {
    const int fd = ::accept(listener.get(), nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      service.checkpoint_all();
      fail(ErrorCode::Io, std::string("accept: ") + std::strerror(errno));
    }
    Fd conn(fd);
    serve_connection(service, conn.get());
    service.checkpoint_all();
  }
}

void serve(Service& service) {
  if (auto ep = parse_transport(service.config().transport)) {
    serve_tcp(service, *ep);
  } else {
    serve_stream(service, std::cin, std::cout);
  }
}

}  // namespace sparft
