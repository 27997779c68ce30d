#include "arena/fake_registry.hpp"

#include <fmt/format.h>
#include <httplib.h>

#include "arena/digest.hpp"

namespace arena {

FakeRegistry::FakeRegistry() : server_(std::make_unique<httplib::Server>()) {
  server_->set_pre_routing_handler([this](const httplib::Request&, httplib::Response&) {
    ++hits_;
    return httplib::Server::HandlerResponse::Unhandled;
  });

  server_->Get("/bots", [this](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(mutex_);
    if (listing_override_) {
      res.set_content(*listing_override_, "application/json");
      return;
    }
    std::vector<BotMetadata> list;
    for (const auto& name : order_) list.push_back(bots_.at(name).meta);
    res.set_content(render_bot_list(list), "application/json");
  });

  server_->Get(R"(/bin/([A-Za-z0-9_-]+))", [this](const httplib::Request& req, httplib::Response& res) {
    ++binary_hits_;
    std::lock_guard lock(mutex_);
    auto it = bots_.find(req.matches[1].str());
    if (it == bots_.end()) {
      res.status = 404;
      return;
    }
    const auto& body = it->second.served_bytes ? *it->second.served_bytes : it->second.bytes;
    res.set_content(body, "application/octet-stream");
  });

  port_ = server_->bind_to_any_port("127.0.0.1");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

FakeRegistry::~FakeRegistry() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

BotMetadata FakeRegistry::add_bot(const std::string& name, Race race, BotType type, std::string bytes) {
  BotMetadata meta{name, race, type, fmt::format("{}/bin/{}", url(), name), sha256_hex(bytes)};
  std::lock_guard lock(mutex_);
  if (!bots_.contains(name)) order_.push_back(name);
  bots_[name] = Entry{meta, std::move(bytes), std::nullopt};
  return meta;
}

void FakeRegistry::corrupt_binary(const std::string& name, std::string bytes) {
  std::lock_guard lock(mutex_);
  bots_.at(name).served_bytes = std::move(bytes);
}

void FakeRegistry::override_listing(std::string raw_json) {
  std::lock_guard lock(mutex_);
  listing_override_ = std::move(raw_json);
}

std::string FakeRegistry::url() const { return fmt::format("http://127.0.0.1:{}", port_); }

void FakeRegistry::reset_hits() {
  hits_ = 0;
  binary_hits_ = 0;
}

}  // namespace arena
