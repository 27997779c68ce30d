#include <gtest/gtest.h>

#include <thread>

#include "arena/digest.hpp"
#include "arena/error.hpp"
#include "arena/fake_registry.hpp"
#include "arena/registry.hpp"
#include "support/fixtures.hpp"

namespace arena {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

// Directory snapshot: relative path -> contents.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = testing::read_file(e.path());
    else out[fs::relative(e.path(), dir).generic_string() + "/"] = "";
  }
  return out;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ErrorKind::Io;
}

TEST(Digest, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_TRUE(is_sha256_hex(sha256_hex("x")));
  EXPECT_FALSE(is_sha256_hex("ABC"));
  TempDir tmp;
  testing::write_file(tmp.path() / "f", "abc");
  EXPECT_EQ(sha256_file(tmp.path() / "f"), sha256_hex("abc"));
}

TEST(BotList, ParseRenderRoundTrip) {
  std::vector<BotMetadata> bots = {
      {"Alpha", Race::Zerg, BotType::BwapiModule, "http://h/bin/Alpha", sha256_hex("a")},
      {"Beta", Race::Protoss, BotType::JavaClient, "http://h/bin/Beta", sha256_hex("b")},
  };
  EXPECT_EQ(parse_bot_list(render_bot_list(bots)), bots);
}

TEST(BotList, SchemaViolationsAreProtocolErrors) {
  const char* bad[] = {
      "{}",
      "[{\"name\":\"a\"}]",
      "[{\"name\":\"a\",\"race\":\"Elf\",\"botType\":\"dll\",\"binaryUrl\":\"u\",\"sha256\":\"x\"}]",
      "not json",
  };
  for (const char* text : bad) EXPECT_EQ(kind_of([&] { parse_bot_list(text); }), ErrorKind::Protocol) << text;
}

class RegistryTest : public ::testing::Test {
 protected:
  FakeRegistry registry;
  TempDir tmp;
  fs::path cache() const { return tmp.path() / "cache"; }
};

TEST_F(RegistryTest, ListsBots) {
  auto a = registry.add_bot("Alpha", Race::Terran, BotType::BwapiModule, "AAAA");
  auto b = registry.add_bot("Beta", Race::Zerg, BotType::JavaClient, "BBBB");
  RegistryClient client(registry.url());
  EXPECT_EQ(client.list_bots(), (std::vector<BotMetadata>{a, b}));
  EXPECT_EQ(a.sha256, sha256_hex("AAAA"));
}

TEST_F(RegistryTest, FetchThenWarmCacheMakesNoRequests) {
  auto meta = registry.add_bot("Alpha", Race::Terran, BotType::BwapiModule, std::string(100000, 'q'));
  RegistryClient client(registry.url());
  auto pkg = client.fetch_bot(meta, cache());
  EXPECT_EQ(pkg.local_path, cache() / meta.sha256 / "Alpha.dll");
  EXPECT_EQ(sha256_file(pkg.local_path), meta.sha256);
  EXPECT_EQ(registry.binary_hits(), 1u);
  registry.reset_hits();
  auto again = client.fetch_bot(meta, cache());
  EXPECT_EQ(again.local_path, pkg.local_path);
  EXPECT_EQ(registry.total_hits(), 0u);
  ASSERT_TRUE(find_cached(meta, cache()).has_value());
}

TEST_F(RegistryTest, CorruptPayloadLeavesCacheUntouched) {
  auto good = registry.add_bot("Alpha", Race::Terran, BotType::BwapiModule, "good");
  auto bad = registry.add_bot("Beta", Race::Terran, BotType::BwapiModule, "beta");
  registry.corrupt_binary("Beta", "tampered");
  RegistryClient client(registry.url());
  client.fetch_bot(good, cache());
  auto before = snapshot(cache());
  EXPECT_EQ(kind_of([&] { client.fetch_bot(bad, cache()); }), ErrorKind::ChecksumMismatch);
  EXPECT_EQ(snapshot(cache()), before);
  EXPECT_TRUE(audit_cache(cache()).empty());
  EXPECT_FALSE(find_cached(bad, cache()).has_value());
}

TEST_F(RegistryTest, UnreachableRegistryIsNetworkError) {
  std::string url;
  {
    FakeRegistry gone;
    url = gone.url();
  }
  RegistryClient client(url);
  EXPECT_EQ(kind_of([&] { client.list_bots(); }), ErrorKind::Network);
  BotMetadata meta{"X", Race::Zerg, BotType::BwapiModule, url + "/bin/X", sha256_hex("x")};
  EXPECT_EQ(kind_of([&] { client.fetch_bot(meta, cache()); }), ErrorKind::Network);
  EXPECT_TRUE(snapshot(cache()).empty() || audit_cache(cache()).empty());
}

TEST_F(RegistryTest, MalformedListingIsProtocolError) {
  registry.override_listing("[{\"name\": 5}]");
  RegistryClient client(registry.url());
  EXPECT_EQ(kind_of([&] { client.list_bots(); }), ErrorKind::Protocol);
}

TEST_F(RegistryTest, AuditDetectsTamperedCacheEntry) {
  auto meta = registry.add_bot("Alpha", Race::Terran, BotType::BwapiModule, "good");
  RegistryClient client(registry.url());
  auto pkg = client.fetch_bot(meta, cache());
  testing::write_file(pkg.local_path, "evil");
  EXPECT_EQ(audit_cache(cache()), std::vector<std::string>{meta.sha256});
  EXPECT_FALSE(find_cached(meta, cache()).has_value());
}

TEST_F(RegistryTest, ConcurrentFetchesOfOneDigestDownloadOnce) {
  auto meta = registry.add_bot("Alpha", Race::Terran, BotType::BwapiModule, std::string(200000, 'z'));
  RegistryClient client(registry.url());
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&] { client.fetch_bot(meta, cache()); });
  for (auto& t : threads) t.join();
  EXPECT_EQ(registry.binary_hits(), 1u);
  EXPECT_TRUE(audit_cache(cache()).empty());
}

TEST_F(RegistryTest, PurgeKeepsNewestVersions) {
  using namespace std::chrono;
  system_clock::time_point t{};
  RegistryClient client(registry.url(), [&] { return t += hours(1); });
  std::vector<BotMetadata> versions;
  for (int v = 0; v < 4; ++v) {
    versions.push_back(registry.add_bot("Alpha", Race::Terran, BotType::BwapiModule, "v" + std::to_string(v)));
    client.fetch_bot(versions.back(), cache());
  }
  auto other = registry.add_bot("Beta", Race::Zerg, BotType::BwapiModule, "b");
  client.fetch_bot(other, cache());
  EXPECT_EQ(purge_cache(cache(), 2), 2u);
  EXPECT_FALSE(find_cached(versions[0], cache()));
  EXPECT_FALSE(find_cached(versions[1], cache()));
  EXPECT_TRUE(find_cached(versions[2], cache()));
  EXPECT_TRUE(find_cached(versions[3], cache()));
  EXPECT_TRUE(find_cached(other, cache()));
  EXPECT_EQ(purge_cache(cache(), 2), 0u);
}

}  // namespace
}  // namespace arena
