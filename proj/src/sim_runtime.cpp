#include "arena/sim_runtime.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>

#include "arena/error.hpp"

namespace arena {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string_view to_string(SimEventKind kind) {
  switch (kind) {
    case SimEventKind::NetworkCreated: return "network-created";
    case SimEventKind::NetworkRemoved: return "network-removed";
    case SimEventKind::CreateFailed: return "create-failed";
    case SimEventKind::Created: return "created";
    case SimEventKind::StartFailed: return "start-failed";
    case SimEventKind::Started: return "started";
    case SimEventKind::FileWritten: return "file-written";
    case SimEventKind::Exited: return "exited";
    case SimEventKind::Stopped: return "stopped";
    case SimEventKind::Removed: return "removed";
  }
  return "?";
}

namespace {

std::chrono::milliseconds seconds_to_ms(double s) {
  return std::chrono::milliseconds(std::llround(std::max(0.0, s) * 1000.0));
}

int slot_label(const ContainerConfig& cfg) {
  auto it = cfg.labels.find(kSlotLabel);
  if (it == cfg.labels.end()) return -1;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    return -1;
  }
}

std::string game_label(const ContainerConfig& cfg) {
  auto it = cfg.labels.find(kGameLabel);
  return it == cfg.labels.end() ? std::string() : it->second;
}

// JSON mapping for persistence.

json to_json_config(const ContainerConfig& c) {
  json mounts = json::array();
  for (const auto& m : c.mounts) {
    mounts.push_back({{"host", m.host_path.string()}, {"container", m.container_path}, {"ro", m.read_only}});
  }
  json ports = json::array();
  for (const auto& p : c.port_bindings) ports.push_back({p.container_port, p.host_port});
  return {{"name", c.name},   {"image", c.image.name}, {"tag", c.image.tag}, {"env", c.env},
          {"mounts", mounts}, {"network", c.network},  {"cpus", c.cpus},     {"memory_mib", c.memory_mib},
          {"ports", ports},   {"labels", c.labels}};
}

ContainerConfig config_from_json(const json& j) {
  ContainerConfig c;
  c.name = j.at("name");
  c.image = {j.at("image"), j.at("tag")};
  c.env = j.at("env").get<std::vector<std::string>>();
  for (const auto& m : j.at("mounts")) {
    c.mounts.push_back({fs::path(m.at("host").get<std::string>()), m.at("container"), m.at("ro")});
  }
  c.network = j.at("network");
  c.cpus = j.at("cpus");
  c.memory_mib = j.at("memory_mib");
  for (const auto& p : j.at("ports")) c.port_bindings.push_back({p.at(0), p.at(1)});
  c.labels = j.at("labels").get<std::map<std::string, std::string>>();
  return c;
}

json to_json_plan(const ContainerPlan& p) {
  json files = json::array();
  for (const auto& f : p.files_to_write) {
    json jf{{"path", f.container_path}, {"bytes", f.bytes}};
    if (f.at_s) jf["at_s"] = *f.at_s;
    files.push_back(jf);
  }
  return {{"run_duration_s", p.run_duration_s},
          {"exit_code", p.exit_code},
          {"files", files},
          {"fail_create", p.fail_create},
          {"fail_start", p.fail_start}};
}

ContainerPlan plan_from_json(const json& j) {
  ContainerPlan p;
  p.run_duration_s = j.at("run_duration_s");
  p.exit_code = j.at("exit_code");
  for (const auto& f : j.at("files")) {
    SimFile sf{f.at("path"), f.at("bytes"), std::nullopt};
    if (f.contains("at_s")) sf.at_s = f.at("at_s").get<double>();
    p.files_to_write.push_back(std::move(sf));
  }
  p.fail_create = j.at("fail_create");
  p.fail_start = j.at("fail_start");
  return p;
}

}  // namespace

SimRuntime::SimRuntime(SimScript script) : script_(std::move(script)) {}

void SimRuntime::set_script(SimScript script) {
  std::lock_guard lock(mutex_);
  script_ = std::move(script);
}

void SimRuntime::set_plan(const std::string& container_name, ContainerPlan plan) {
  std::lock_guard lock(mutex_);
  script_.plans[container_name] = std::move(plan);
}

void SimRuntime::set_available(bool available) {
  std::lock_guard lock(mutex_);
  available_ = available;
}

void SimRuntime::set_known_images(std::optional<std::set<std::string>> images) {
  std::lock_guard lock(mutex_);
  known_images_ = std::move(images);
}

Instant SimRuntime::now() const {
  std::lock_guard lock(mutex_);
  return now_;
}

void SimRuntime::require_available() const {
  if (!available_) throw Error(ErrorKind::RuntimeUnavailable, "simulated daemon is down");
}

SimRuntime::Container* SimRuntime::find(const ContainerHandle& h) {
  auto it = containers_.find(h.id);
  return it == containers_.end() ? nullptr : &it->second;
}

const SimRuntime::Container* SimRuntime::find(const ContainerHandle& h) const {
  auto it = containers_.find(h.id);
  return it == containers_.end() ? nullptr : &it->second;
}

std::string SimRuntime::next_id() {
  auto a = splitmix64(script_.seed ^ (++counter_ * 0x9e3779b97f4a7c15ULL));
  auto b = splitmix64(a);
  return fmt::format("{:016x}{:016x}", a, b);
}

void SimRuntime::record(SimEventKind kind, const Container& c, int exit_code, std::string detail) {
  events_.push_back({now_, kind, c.config.name, game_label(c.config), slot_label(c.config), c.config.cpus,
                     exit_code, std::move(detail)});
}

void SimRuntime::write_file(Container& c, std::size_t index) {
  if (c.written[index]) return;
  c.written[index] = true;
  const auto& file = c.plan.files_to_write[index];
  // Longest container-side mount prefix wins.
  const Mount* best = nullptr;
  for (const auto& m : c.config.mounts) {
    const auto& cp = m.container_path;
    bool under = file.container_path.size() > cp.size() && file.container_path.compare(0, cp.size(), cp) == 0 &&
                 file.container_path[cp.size()] == '/';
    if (under && (!best || cp.size() > best->container_path.size())) best = &m;
  }
  if (!best) {
    record(SimEventKind::FileWritten, c, 0, "unmounted:" + file.container_path);
    return;
  }
  if (best->read_only) {
    record(SimEventKind::FileWritten, c, 0, "read-only:" + file.container_path);
    return;
  }
  auto rel = fs::path(file.container_path.substr(best->container_path.size() + 1)).lexically_normal();
  if (rel.empty() || *rel.begin() == "..") {
    record(SimEventKind::FileWritten, c, 0, "escape:" + file.container_path);
    return;
  }
  auto host = best->host_path / rel;
  std::error_code ec;
  fs::create_directories(host.parent_path(), ec);
  std::ofstream out(host, std::ios::binary | std::ios::trunc);
  out.write(file.bytes.data(), static_cast<std::streamsize>(file.bytes.size()));
  record(SimEventKind::FileWritten, c, 0, file.container_path);
}

void SimRuntime::exit_container(Container& c, int code, SimEventKind kind) {
  c.status = ContainerStatus::exited(code);
  record(kind, c, code);
}

void SimRuntime::advance(std::chrono::milliseconds d) {
  std::lock_guard lock(mutex_);
  if (d.count() < 0) return;
  const Instant target = now_ + d;

  // (time, seq, order, index): order 0 = timed file, 1 = exit.
  using Due = std::tuple<Instant, std::uint64_t, int, std::size_t, std::string>;
  std::vector<Due> due;
  for (auto& [id, c] : containers_) {
    if (c.status.state != ContainerStatus::State::Running) continue;
    for (std::size_t i = 0; i < c.plan.files_to_write.size(); ++i) {
      const auto& f = c.plan.files_to_write[i];
      if (!f.at_s || c.written[i]) continue;
      auto at = c.started_at + seconds_to_ms(std::min(*f.at_s, c.plan.run_duration_s));
      if (at <= target) due.emplace_back(at, c.seq, 0, i, id);
    }
    auto exit_at = c.started_at + seconds_to_ms(c.plan.run_duration_s);
    if (exit_at <= target) due.emplace_back(exit_at, c.seq, 1, 0, id);
  }
  std::sort(due.begin(), due.end());
  for (const auto& [at, seq, order, index, id] : due) {
    auto& c = containers_.at(id);
    if (c.status.state != ContainerStatus::State::Running) continue;
    now_ = std::max(now_, at);
    if (order == 0) {
      write_file(c, index);
    } else {
      for (std::size_t i = 0; i < c.plan.files_to_write.size(); ++i) {
        if (!c.plan.files_to_write[i].at_s) write_file(c, i);
      }
      exit_container(c, c.plan.exit_code, SimEventKind::Exited);
    }
  }
  now_ = target;
}

std::vector<SimEvent> SimRuntime::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

void SimRuntime::clear_events() {
  std::lock_guard lock(mutex_);
  events_.clear();
}

std::optional<ContainerConfig> SimRuntime::config_of(const ContainerHandle& h) const {
  std::lock_guard lock(mutex_);
  if (const auto* c = find(h)) return c->config;
  return std::nullopt;
}

std::size_t SimRuntime::container_count() const {
  std::lock_guard lock(mutex_);
  return containers_.size();
}

std::set<int> SimRuntime::bound_host_ports() const {
  std::lock_guard lock(mutex_);
  std::set<int> ports;
  for (const auto& [id, c] : containers_) {
    for (const auto& b : c.config.port_bindings) ports.insert(b.host_port);
  }
  return ports;
}

std::string SimRuntime::ensure_network(const std::string& name) {
  std::lock_guard lock(mutex_);
  require_available();
  if (auto it = networks_.find(name); it != networks_.end()) return it->second;
  auto id = next_id();
  networks_.emplace(name, id);
  events_.push_back({now_, SimEventKind::NetworkCreated, name, {}, -1, 0.0, 0, id});
  return id;
}

void SimRuntime::remove_network(const std::string& name) {
  std::lock_guard lock(mutex_);
  require_available();
  if (networks_.erase(name) > 0) {
    events_.push_back({now_, SimEventKind::NetworkRemoved, name, {}, -1, 0.0, 0, {}});
  }
}

std::vector<std::string> SimRuntime::list_networks(std::string_view name_prefix) {
  std::lock_guard lock(mutex_);
  require_available();
  std::vector<std::string> out;
  for (const auto& [name, id] : networks_) {
    if (name.starts_with(name_prefix)) out.push_back(name);
  }
  return out;
}

ContainerHandle SimRuntime::create(const ContainerConfig& cfg) {
  std::lock_guard lock(mutex_);
  require_available();
  check_container_config(cfg);
  for (const auto& [id, c] : containers_) {
    if (c.config.name == cfg.name) throw Error(ErrorKind::NameConflict, cfg.name);
  }
  if (known_images_ && !known_images_->contains(cfg.image.str())) {
    throw Error(ErrorKind::ImageMissing, cfg.image.str());
  }
  ContainerPlan plan;
  if (auto it = script_.plans.find(cfg.name); it != script_.plans.end()) {
    plan = it->second;
  } else if (script_.fallback) {
    plan = script_.fallback(cfg);
  }
  if (plan.fail_create) {
    events_.push_back({now_, SimEventKind::CreateFailed, cfg.name, game_label(cfg), slot_label(cfg), cfg.cpus, 0,
                       "injected"});
    throw Error(ErrorKind::RuntimeUnavailable, fmt::format("create {} failed (injected)", cfg.name));
  }
  Container c;
  c.seq = counter_;
  c.handle = {next_id(), cfg.name};
  c.config = cfg;
  c.plan = std::move(plan);
  c.status = ContainerStatus::created();
  c.written.assign(c.plan.files_to_write.size(), false);
  auto handle = c.handle;
  auto& stored = containers_.emplace(handle.id, std::move(c)).first->second;
  record(SimEventKind::Created, stored);
  return handle;
}

void SimRuntime::start(const ContainerHandle& h) {
  std::lock_guard lock(mutex_);
  require_available();
  auto* c = find(h);
  if (!c) throw Error(ErrorKind::NotFound, h.name);
  if (c->status.state != ContainerStatus::State::Created) {
    throw Error(ErrorKind::AlreadyRunning, fmt::format("{} is {}", h.name, describe(c->status)));
  }
  if (c->plan.fail_start) {
    record(SimEventKind::StartFailed, *c, 0, "injected");
    throw Error(ErrorKind::RuntimeUnavailable, fmt::format("start {} failed (injected)", h.name));
  }
  c->status = ContainerStatus::running(now_);
  c->started_at = now_;
  record(SimEventKind::Started, *c);
  // Zero-length plans finish immediately.
  if (c->plan.run_duration_s <= 0.0) {
    for (std::size_t i = 0; i < c->plan.files_to_write.size(); ++i) write_file(*c, i);
    exit_container(*c, c->plan.exit_code, SimEventKind::Exited);
  } else {
    for (std::size_t i = 0; i < c->plan.files_to_write.size(); ++i) {
      const auto& f = c->plan.files_to_write[i];
      if (f.at_s && *f.at_s <= 0.0) write_file(*c, i);
    }
  }
}

void SimRuntime::stop(const ContainerHandle& h, int /*grace_s*/) {
  std::lock_guard lock(mutex_);
  require_available();
  auto* c = find(h);
  if (!c) throw Error(ErrorKind::NotFound, h.name);
  switch (c->status.state) {
    case ContainerStatus::State::Running: exit_container(*c, 143, SimEventKind::Stopped); break;
    case ContainerStatus::State::Created: exit_container(*c, 0, SimEventKind::Stopped); break;
    default: break;
  }
}

void SimRuntime::remove(const ContainerHandle& h) {
  std::lock_guard lock(mutex_);
  require_available();
  auto* c = find(h);
  if (!c) return;
  if (c->status.state == ContainerStatus::State::Running) throw Error(ErrorKind::StillRunning, h.name);
  record(SimEventKind::Removed, *c);
  containers_.erase(h.id);
}

ContainerStatus SimRuntime::inspect(const ContainerHandle& h) {
  std::lock_guard lock(mutex_);
  require_available();
  if (const auto* c = find(h)) return c->status;
  return ContainerStatus::not_found();
}

std::vector<ContainerHandle> SimRuntime::list_by_label(const std::string& key, const std::string& value) {
  std::lock_guard lock(mutex_);
  require_available();
  std::vector<const Container*> hits;
  for (const auto& [id, c] : containers_) {
    auto it = c.config.labels.find(key);
    if (it != c.config.labels.end() && it->second == value) hits.push_back(&c);
  }
  std::sort(hits.begin(), hits.end(), [](auto* a, auto* b) { return a->seq < b->seq; });
  std::vector<ContainerHandle> out;
  for (const auto* c : hits) out.push_back(c->handle);
  return out;
}

std::vector<ContainerHandle> SimRuntime::list_with_label(const std::string& key) {
  std::lock_guard lock(mutex_);
  require_available();
  std::vector<const Container*> hits;
  for (const auto& [id, c] : containers_) {
    if (c.config.labels.contains(key)) hits.push_back(&c);
  }
  std::sort(hits.begin(), hits.end(), [](auto* a, auto* b) { return a->seq < b->seq; });
  std::vector<ContainerHandle> out;
  for (const auto* c : hits) out.push_back(c->handle);
  return out;
}

void SimRuntime::save_state(const fs::path& path) const {
  std::lock_guard lock(mutex_);
  json containers = json::array();
  for (const auto& [id, c] : containers_) {
    containers.push_back({{"seq", c.seq},
                          {"id", c.handle.id},
                          {"config", to_json_config(c.config)},
                          {"plan", to_json_plan(c.plan)},
                          {"state", std::string(to_string(c.status.state))},
                          {"since_ms", c.status.since.count()},
                          {"exit_code", c.status.exit_code},
                          {"started_at_ms", c.started_at.count()},
                          {"written", c.written}});
  }
  json doc{{"now_ms", now_.count()},
           {"counter", counter_},
           {"seed", script_.seed},
           {"networks", networks_},
           {"containers", containers}};
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    out << doc.dump(2) << "\n";
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

void SimRuntime::load_state(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return;
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Io, fmt::format("corrupt sim state {}: {}", path.string(), e.what()));
  }
  std::lock_guard lock(mutex_);
  try {
    now_ = Instant(doc.at("now_ms").get<std::int64_t>());
    counter_ = doc.at("counter");
    script_.seed = doc.at("seed");
    networks_ = doc.at("networks").get<std::map<std::string, std::string>>();
    containers_.clear();
    for (const auto& j : doc.at("containers")) {
      Container c;
      c.seq = j.at("seq");
      c.config = config_from_json(j.at("config"));
      c.handle = {j.at("id"), c.config.name};
      c.plan = plan_from_json(j.at("plan"));
      auto state = j.at("state").get<std::string>();
      int code = j.at("exit_code");
      if (state == "Running") {
        c.status = ContainerStatus::running(Instant(j.at("since_ms").get<std::int64_t>()));
      } else if (state == "Exited") {
        c.status = ContainerStatus::exited(code);
      } else {
        c.status = ContainerStatus::created();
      }
      c.started_at = Instant(j.at("started_at_ms").get<std::int64_t>());
      c.written = j.at("written").get<std::vector<bool>>();
      c.written.resize(c.plan.files_to_write.size(), false);
      containers_.emplace(c.handle.id, std::move(c));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, fmt::format("corrupt sim state {}: {}", path.string(), e.what()));
  }
}

ContainerPlan default_game_plan(const ContainerConfig& cfg, std::uint64_t seed) {
  const auto game = cfg.env_value("GAME_NAME");
  int slot = 0;
  int players = 2;
  try {
    slot = std::stoi(cfg.env_value("PLAYER_SLOT"));
    players = std::max(1, std::stoi(cfg.env_value("NUM_PLAYERS")));
  } catch (const std::exception&) {
  }
  const auto h = splitmix64(seed ^ fnv1a(game));
  const int winner = static_cast<int>(h % static_cast<std::uint64_t>(players));
  const double duration = 20.0 + static_cast<double>((h >> 16) % 40);
  // Fastest game speed runs roughly 24 frames per second.
  const auto frames = static_cast<std::int64_t>(duration * 24.0);
  const auto score = [&](int salt) {
    return static_cast<std::int64_t>(splitmix64(h + static_cast<std::uint64_t>(slot * 16 + salt)) % 5000);
  };

  ContainerPlan plan;
  plan.run_duration_s = duration;
  plan.exit_code = 0;
  const std::string write = mount_point::kWrite;
  if (slot == 0) plan.files_to_write.push_back({write + "/" + host_ready_file_name(game), "ready\n", 1.0});
  json result{{"slot", slot},
              {"is_winner", slot == winner},
              {"is_crashed", false},
              {"frame_count", frames},
              {"building_score", score(1)},
              {"razing_score", score(2)},
              {"unit_score", score(3)},
              {"kill_score", score(4)}};
  plan.files_to_write.push_back({write + "/logs/bot.log", fmt::format("{} slot {} done\n", game, slot), std::nullopt});
  plan.files_to_write.push_back({write + "/" + result_file_name(game), result.dump(), std::nullopt});
  return plan;
}

SimScript default_game_script(std::uint64_t seed) {
  SimScript script;
  script.seed = seed;
  script.fallback = [seed](const ContainerConfig& cfg) { return default_game_plan(cfg, seed); };
  return script;
}

}  // namespace arena
