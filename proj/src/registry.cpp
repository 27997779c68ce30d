#include "arena/registry.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "arena/digest.hpp"
#include "arena/error.hpp"
#include "http_util.hpp"

namespace arena {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace detail {

UrlParts split_url(std::string_view url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorKind::Validation, fmt::format("url '{}' has no scheme", url));
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

std::string url_encode(std::string_view text) {
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += fmt::format("%{:02X}", c);
    }
  }
  return out;
}

}  // namespace detail

namespace {

std::string join_path(const std::string& base, const std::string& leaf) {
  if (!base.empty() && base.back() == '/') return base + leaf;
  return base + "/" + leaf;
}

std::string require_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw Error(ErrorKind::Protocol, fmt::format("bot entry missing string field '{}'", key));
  }
  return it->get<std::string>();
}

httplib::Result get(const std::string& url, httplib::Headers headers = {}) {
  auto parts = detail::split_url(url);
  httplib::Client client(parts.origin);
  client.set_connection_timeout(5);
  client.set_read_timeout(60);
  auto res = client.Get(parts.path, headers);
  if (!res) {
    throw Error(ErrorKind::Network,
                fmt::format("GET {} failed: {}", url, httplib::to_string(res.error())));
  }
  if (res->status != 200) {
    throw Error(ErrorKind::Network, fmt::format("GET {} returned HTTP {}", url, res->status));
  }
  return res;
}

std::int64_t to_epoch_ms(std::chrono::system_clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
}

struct CacheEntry {
  std::string sha256;
  std::string name;
  std::string bot_file;
  std::int64_t fetched_at_ms = 0;
};

std::vector<CacheEntry> read_cache_entries(const fs::path& cache_dir) {
  std::vector<CacheEntry> entries;
  std::error_code ec;
  if (!fs::is_directory(cache_dir, ec)) return entries;
  for (const auto& dir : fs::directory_iterator(cache_dir)) {
    if (!dir.is_directory() || !is_sha256_hex(dir.path().filename().string())) continue;
    std::ifstream in(dir.path() / "meta.json");
    if (!in) continue;
    try {
      auto j = json::parse(in);
      entries.push_back({dir.path().filename().string(), j.at("name").get<std::string>(),
                         j.at("bot_file").get<std::string>(), j.at("fetched_at_ms").get<std::int64_t>()});
    } catch (const json::exception&) {
      continue;
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const CacheEntry& a, const CacheEntry& b) { return a.sha256 < b.sha256; });
  return entries;
}

}  // namespace

std::vector<BotMetadata> parse_bot_list(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Protocol, std::string("bot list is not JSON: ") + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorKind::Protocol, "bot list must be a JSON array");
  std::vector<BotMetadata> bots;
  for (const auto& item : doc) {
    if (!item.is_object()) throw Error(ErrorKind::Protocol, "bot entry must be an object");
    BotMetadata meta;
    meta.name = require_string(item, "name");
    if (meta.name.empty()) throw Error(ErrorKind::Protocol, "bot name empty");
    try {
      meta.race = parse_race(require_string(item, "race"));
      meta.bot_type = parse_bot_type(require_string(item, "botType"));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Protocol) throw;
      throw Error(ErrorKind::Protocol, e.detail());
    }
    meta.binary_url = require_string(item, "binaryUrl");
    meta.sha256 = require_string(item, "sha256");
    if (!is_sha256_hex(meta.sha256)) {
      throw Error(ErrorKind::Protocol, fmt::format("bot '{}' sha256 is not 64 hex chars", meta.name));
    }
    bots.push_back(std::move(meta));
  }
  return bots;
}

std::string render_bot_list(const std::vector<BotMetadata>& bots) {
  json doc = json::array();
  for (const auto& b : bots) {
    doc.push_back({{"name", b.name},
                   {"race", std::string(to_string(b.race))},
                   {"botType", std::string(extension_of(b.bot_type))},
                   {"binaryUrl", b.binary_url},
                   {"sha256", b.sha256}});
  }
  return doc.dump();
}

RegistryClient::RegistryClient(std::string registry_url, TimeSource now)
    : registry_url_(std::move(registry_url)), now_(std::move(now)) {
  if (!now_) now_ = [] { return std::chrono::system_clock::now(); };
}

std::vector<BotMetadata> RegistryClient::list_bots() const {
  auto res = get(join_path(registry_url_, "bots"));
  return parse_bot_list(res->body);
}

std::mutex& RegistryClient::digest_mutex(const std::string& sha256) {
  std::lock_guard lock(table_mutex_);
  auto& slot = digest_mutexes_[sha256];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

std::optional<BotPackage> find_cached(const BotMetadata& meta, const fs::path& cache_dir) {
  auto dir = cache_dir / meta.sha256;
  auto binary = dir / meta.bot_file();
  std::error_code ec;
  if (!fs::is_regular_file(binary, ec)) return std::nullopt;
  if (sha256_file(binary) != meta.sha256) return std::nullopt;
  BotPackage pkg{meta, binary, {}};
  std::ifstream in(dir / "meta.json");
  if (in) {
    try {
      auto j = json::parse(in);
      pkg.fetched_at = std::chrono::system_clock::time_point(
          std::chrono::milliseconds(j.at("fetched_at_ms").get<std::int64_t>()));
    } catch (const json::exception&) {
    }
  }
  return pkg;
}

BotPackage RegistryClient::fetch_bot(const BotMetadata& meta, const fs::path& cache_dir) {
  if (!is_sha256_hex(meta.sha256)) throw Error(ErrorKind::Protocol, "sha256 is not 64 hex chars");
  if (!is_identifier(meta.name)) {
    throw Error(ErrorKind::Validation, fmt::format("bot name '{}' not usable as a path", meta.name));
  }
  std::lock_guard lock(digest_mutex(meta.sha256));
  if (auto hit = find_cached(meta, cache_dir)) return *hit;

  std::string url = meta.binary_url;
  if (!url.empty() && url.front() == '/') url = detail::split_url(registry_url_).origin + url;
  auto res = get(url);
  if (!res->has_header("Content-Length")) {
    throw Error(ErrorKind::Protocol, "binary response lacks Content-Length");
  }
  if (sha256_hex(res->body) != meta.sha256) {
    throw Error(ErrorKind::ChecksumMismatch,
                fmt::format("bot '{}' payload does not hash to {}", meta.name, meta.sha256));
  }

  // Stage everything in a sibling temp dir and rename it into place, so the
  // final <sha256>/ directory only ever appears complete.
  std::error_code ec;
  fs::create_directories(cache_dir, ec);
  if (ec) throw Error(ErrorKind::Io, fmt::format("create {}: {}", cache_dir.string(), ec.message()));
  auto stage = cache_dir / fmt::format(".{}.partial", meta.sha256);
  fs::remove_all(stage, ec);
  fs::create_directories(stage, ec);
  if (ec) throw Error(ErrorKind::Io, fmt::format("create {}: {}", stage.string(), ec.message()));
  auto fetched_at = now_();
  {
    std::ofstream out(stage / meta.bot_file(), std::ios::binary);
    out.write(res->body.data(), static_cast<std::streamsize>(res->body.size()));
    std::ofstream side(stage / "meta.json");
    side << json{{"name", meta.name},
                 {"bot_file", meta.bot_file()},
                 {"race", std::string(to_string(meta.race))},
                 {"sha256", meta.sha256},
                 {"fetched_at_ms", to_epoch_ms(fetched_at)}}
                .dump(2);
    if (!out || !side) {
      fs::remove_all(stage, ec);
      throw Error(ErrorKind::Io, "write to cache failed");
    }
  }
  auto final_dir = cache_dir / meta.sha256;
  fs::remove_all(final_dir, ec);
  fs::rename(stage, final_dir, ec);
  if (ec) {
    fs::remove_all(stage, ec);
    throw Error(ErrorKind::Io, fmt::format("rename into {} failed", final_dir.string()));
  }
  return BotPackage{meta, final_dir / meta.bot_file(), fetched_at};
}

std::size_t purge_cache(const fs::path& cache_dir, int keep_latest_n_per_bot) {
  if (keep_latest_n_per_bot < 1) throw Error(ErrorKind::Validation, "keep_latest_n_per_bot must be ≥ 1");
  std::map<std::string, std::vector<CacheEntry>> by_name;
  for (auto& e : read_cache_entries(cache_dir)) by_name[e.name].push_back(std::move(e));
  std::size_t removed = 0;
  for (auto& [name, versions] : by_name) {
    std::sort(versions.begin(), versions.end(), [](const CacheEntry& a, const CacheEntry& b) {
      if (a.fetched_at_ms != b.fetched_at_ms) return a.fetched_at_ms > b.fetched_at_ms;
      return a.sha256 < b.sha256;
    });
    for (std::size_t i = static_cast<std::size_t>(keep_latest_n_per_bot); i < versions.size(); ++i) {
      std::error_code ec;
      fs::remove_all(cache_dir / versions[i].sha256, ec);
      if (ec) throw Error(ErrorKind::Io, ec.message());
      ++removed;
    }
  }
  return removed;
}

std::vector<std::string> audit_cache(const fs::path& cache_dir) {
  std::vector<std::string> bad;
  for (const auto& e : read_cache_entries(cache_dir)) {
    auto binary = cache_dir / e.sha256 / e.bot_file;
    std::error_code ec;
    if (!fs::is_regular_file(binary, ec) || sha256_file(binary) != e.sha256) bad.push_back(e.sha256);
  }
  return bad;
}

}  // namespace arena
