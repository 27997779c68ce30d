#include "arena/docker_runtime.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <sstream>

#include <fmt/format.h>
#include <httplib.h>
#include <sys/socket.h>

#include "arena/error.hpp"
#include "http_util.hpp"

namespace arena {

using json = nlohmann::json;

namespace {

constexpr const char* kApi = "/v1.41";

std::string docker_error_message(const std::string& body) {
  try {
    auto j = json::parse(body);
    if (j.contains("message")) return j.at("message").get<std::string>();
  } catch (const json::exception&) {
  }
  return body;
}

// "2024-03-01T10:20:30.123456789Z" -> ms since Unix epoch.
Instant parse_docker_time(const std::string& text) {
  std::tm tm{};
  std::istringstream in(text);
  in >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
  if (in.fail()) return Instant{0};
  auto secs = static_cast<std::int64_t>(timegm(&tm));
  std::int64_t ms = 0;
  if (auto dot = text.find('.'); dot != std::string::npos) {
    auto frac = text.substr(dot + 1, 3);
    while (frac.size() < 3) frac += '0';
    if (std::all_of(frac.begin(), frac.end(), ::isdigit)) ms = std::stoll(frac);
  }
  return Instant{secs * 1000 + ms};
}

}  // namespace

DockerEndpoint DockerEndpoint::parse(const std::string& text) {
  DockerEndpoint ep;
  if (text.empty()) return ep;
  if (text.starts_with("unix://")) {
    ep.kind = Kind::UnixSocket;
    ep.socket_path = text.substr(7);
    if (ep.socket_path.empty()) throw Error(ErrorKind::Validation, "empty unix socket path");
    return ep;
  }
  std::string rest;
  if (text.starts_with("tcp://")) {
    rest = text.substr(6);
  } else if (text.starts_with("http://")) {
    rest = text.substr(7);
  } else {
    throw Error(ErrorKind::Validation, fmt::format("unsupported docker endpoint '{}'", text));
  }
  if (auto slash = rest.find('/'); slash != std::string::npos) rest.resize(slash);
  auto colon = rest.rfind(':');
  ep.kind = Kind::Tcp;
  ep.host = rest.substr(0, colon);
  try {
    ep.port = colon == std::string::npos ? 2375 : std::stoi(rest.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorKind::Validation, fmt::format("bad port in docker endpoint '{}'", text));
  }
  if (ep.host.empty()) throw Error(ErrorKind::Validation, fmt::format("no host in '{}'", text));
  return ep;
}

DockerEndpoint DockerEndpoint::from_env() {
  const char* env = std::getenv("ARENA_DOCKER_HOST");
  return parse(env ? env : "");
}

json docker_create_body(const ContainerConfig& cfg) {
  json binds = json::array();
  for (const auto& m : cfg.mounts) {
    binds.push_back(m.host_path.string() + ":" + m.container_path + (m.read_only ? ":ro" : ""));
  }
  json ports = json::object();
  for (const auto& p : cfg.port_bindings) {
    ports[fmt::format("{}/tcp", p.container_port)].push_back({{"HostPort", std::to_string(p.host_port)}});
  }
  json host_config{{"Binds", binds},
                   {"NanoCpus", static_cast<std::int64_t>(std::llround(cfg.cpus * 1e9))},
                   {"Memory", static_cast<std::int64_t>(cfg.memory_mib) * 1048576},
                   {"NetworkMode", cfg.network},
                   {"PortBindings", ports}};
  return json{{"Image", cfg.image.str()}, {"Env", cfg.env}, {"Labels", cfg.labels}, {"HostConfig", host_config}};
}

DockerRuntime::DockerRuntime(DockerEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

DockerRuntime::Reply DockerRuntime::call(const std::string& method, const std::string& path,
                                         const std::string& body, int read_timeout_s) {
  std::unique_ptr<httplib::Client> client;
  httplib::Headers headers;
  if (endpoint_.kind == DockerEndpoint::Kind::UnixSocket) {
    client = std::make_unique<httplib::Client>(endpoint_.socket_path, 80);
    client->set_address_family(AF_UNIX);
    headers.emplace("Host", "localhost");
  } else {
    client = std::make_unique<httplib::Client>(endpoint_.host, endpoint_.port);
  }
  client->set_connection_timeout(5);
  client->set_read_timeout(read_timeout_s);

  const auto full = kApi + path;
  httplib::Result res;
  if (method == "GET") {
    res = client->Get(full, headers);
  } else if (method == "POST") {
    res = client->Post(full, headers, body, "application/json");
  } else if (method == "DELETE") {
    res = client->Delete(full, headers);
  } else {
    throw std::logic_error("unsupported method " + method);
  }
  if (!res) {
    throw Error(ErrorKind::RuntimeUnavailable,
                fmt::format("{} {}: {}", method, full, httplib::to_string(res.error())));
  }
  return {res->status, res->body};
}

std::string DockerRuntime::ensure_network(const std::string& name) {
  auto got = call("GET", "/networks/" + detail::url_encode(name));
  if (got.status == 200) return json::parse(got.body).value("Id", name);
  auto made = call("POST", "/networks/create", json{{"Name", name}, {"Driver", "bridge"}}.dump());
  if (made.status == 201 || made.status == 200) return json::parse(made.body).value("Id", name);
  throw Error(ErrorKind::RuntimeUnavailable,
              fmt::format("network create {}: HTTP {} {}", name, made.status, docker_error_message(made.body)));
}

void DockerRuntime::remove_network(const std::string& name) {
  auto res = call("DELETE", "/networks/" + detail::url_encode(name));
  if (res.status == 204 || res.status == 200 || res.status == 404) return;
  throw Error(ErrorKind::RuntimeUnavailable,
              fmt::format("network remove {}: HTTP {} {}", name, res.status, docker_error_message(res.body)));
}

std::vector<std::string> DockerRuntime::list_networks(std::string_view name_prefix) {
  auto res = call("GET", "/networks");
  if (res.status != 200) throw Error(ErrorKind::RuntimeUnavailable, fmt::format("list networks: HTTP {}", res.status));
  std::vector<std::string> out;
  try {
    for (const auto& n : json::parse(res.body)) {
      auto name = n.value("Name", "");
      if (name.starts_with(name_prefix)) out.push_back(name);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::RuntimeUnavailable, e.what());
  }
  std::sort(out.begin(), out.end());
  return out;
}

ContainerHandle DockerRuntime::create(const ContainerConfig& cfg) {
  check_container_config(cfg);
  auto res = call("POST", "/containers/create?name=" + detail::url_encode(cfg.name), docker_create_body(cfg).dump());
  switch (res.status) {
    case 200:
    case 201: break;
    case 404: throw Error(ErrorKind::ImageMissing, cfg.image.str());
    case 409: throw Error(ErrorKind::NameConflict, cfg.name);
    default:
      throw Error(ErrorKind::RuntimeUnavailable,
                  fmt::format("create {}: HTTP {} {}", cfg.name, res.status, docker_error_message(res.body)));
  }
  try {
    return {json::parse(res.body).at("Id").get<std::string>(), cfg.name};
  } catch (const json::exception& e) {
    throw Error(ErrorKind::RuntimeUnavailable, std::string("create reply: ") + e.what());
  }
}

void DockerRuntime::start(const ContainerHandle& h) {
  auto res = call("POST", "/containers/" + h.id + "/start");
  if (res.status == 204 || res.status == 200) return;
  if (res.status == 304) throw Error(ErrorKind::AlreadyRunning, h.name);
  if (res.status == 404) throw Error(ErrorKind::NotFound, h.name);
  throw Error(ErrorKind::RuntimeUnavailable,
              fmt::format("start {}: HTTP {} {}", h.name, res.status, docker_error_message(res.body)));
}

void DockerRuntime::stop(const ContainerHandle& h, int grace_s) {
  auto res = call("POST", fmt::format("/containers/{}/stop?t={}", h.id, grace_s), {}, grace_s + 30);
  if (res.status == 204 || res.status == 304 || res.status == 200) return;
  if (res.status == 404) throw Error(ErrorKind::NotFound, h.name);
  throw Error(ErrorKind::RuntimeUnavailable,
              fmt::format("stop {}: HTTP {} {}", h.name, res.status, docker_error_message(res.body)));
}

void DockerRuntime::remove(const ContainerHandle& h) {
  auto res = call("DELETE", "/containers/" + h.id + "?force=false");
  if (res.status == 204 || res.status == 200 || res.status == 404) return;
  if (res.status == 409) throw Error(ErrorKind::StillRunning, h.name);
  throw Error(ErrorKind::RuntimeUnavailable,
              fmt::format("remove {}: HTTP {} {}", h.name, res.status, docker_error_message(res.body)));
}

ContainerStatus DockerRuntime::inspect(const ContainerHandle& h) {
  auto res = call("GET", "/containers/" + h.id + "/json");
  if (res.status == 404) return ContainerStatus::not_found();
  if (res.status != 200) {
    throw Error(ErrorKind::RuntimeUnavailable, fmt::format("inspect {}: HTTP {}", h.name, res.status));
  }
  try {
    const auto state = json::parse(res.body).at("State");
    const auto status = state.value("Status", "");
    if (status == "created") return ContainerStatus::created();
    if (status == "running" || status == "paused" || status == "restarting") {
      return ContainerStatus::running(parse_docker_time(state.value("StartedAt", "")));
    }
    return ContainerStatus::exited(state.value("ExitCode", 0));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::RuntimeUnavailable, std::string("inspect reply: ") + e.what());
  }
}

std::vector<ContainerHandle> DockerRuntime::list_filtered(const std::string& label_filter) {
  auto filters = json{{"label", json::array({label_filter})}}.dump();
  auto res = call("GET", "/containers/json?all=true&filters=" + detail::url_encode(filters));
  if (res.status != 200) throw Error(ErrorKind::RuntimeUnavailable, fmt::format("list: HTTP {}", res.status));
  std::vector<ContainerHandle> out;
  try {
    for (const auto& c : json::parse(res.body)) {
      std::string name;
      if (c.contains("Names") && !c.at("Names").empty()) name = c.at("Names").at(0).get<std::string>();
      if (!name.empty() && name.front() == '/') name.erase(0, 1);
      out.push_back({c.at("Id").get<std::string>(), name});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::RuntimeUnavailable, std::string("list reply: ") + e.what());
  }
  return out;
}

std::vector<ContainerHandle> DockerRuntime::list_by_label(const std::string& key, const std::string& value) {
  return list_filtered(key + "=" + value);
}

std::vector<ContainerHandle> DockerRuntime::list_with_label(const std::string& key) { return list_filtered(key); }

}  // namespace arena
