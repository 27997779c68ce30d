#pragma once

#include <memory>
#include <mutex>
#include <string>

#include <json.hpp>

#include "arena/runtime.hpp"

namespace arena {

struct DockerEndpoint {
  enum class Kind { UnixSocket, Tcp };
  Kind kind = Kind::UnixSocket;
  std::string socket_path = "/var/run/docker.sock";
  std::string host;
  int port = 0;

  // Accepts "unix:///path", "tcp://host:port" and "http://host:port".
  static DockerEndpoint parse(const std::string& text);
  static DockerEndpoint from_env();  // ARENA_DOCKER_HOST or the default socket
};

// Request body for POST /containers/create.
nlohmann::json docker_create_body(const ContainerConfig& cfg);

// Docker Engine API v1.41 client covering exactly the Runtime surface.
class DockerRuntime final : public Runtime {
 public:
  explicit DockerRuntime(DockerEndpoint endpoint);

  std::string ensure_network(const std::string& name) override;
  void remove_network(const std::string& name) override;
  std::vector<std::string> list_networks(std::string_view name_prefix) override;
  ContainerHandle create(const ContainerConfig& cfg) override;
  void start(const ContainerHandle& h) override;
  void stop(const ContainerHandle& h, int grace_s) override;
  void remove(const ContainerHandle& h) override;
  ContainerStatus inspect(const ContainerHandle& h) override;
  std::vector<ContainerHandle> list_by_label(const std::string& key, const std::string& value) override;
  std::vector<ContainerHandle> list_with_label(const std::string& key) override;

 private:
  struct Reply {
    int status = 0;
    std::string body;
  };

  Reply call(const std::string& method, const std::string& path, const std::string& body = {},
             int read_timeout_s = 30);
  std::vector<ContainerHandle> list_filtered(const std::string& label_filter);

  DockerEndpoint endpoint_;
};

}  // namespace arena
