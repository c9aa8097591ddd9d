#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "xrf/client/client.hpp"
#include "xrf/server/server.hpp"

namespace xrf::testing {

/// RSA-2048 key #index. Keys are generated once and kept under the build
/// tree, so only the first test run pays for generation.
const crypto::PrivateKey& test_key(std::size_t index);

/// Reuses a handful of key pairs under a fresh kid per acquire. Lets tests
/// issue thousands of tokens without generating thousands of keys.
class CyclingKeySource final : public server::KeySource {
public:
    explicit CyclingKeySource(std::size_t first_key = 100, std::size_t count = 4);
    crypto::KeyPair acquire() override;

    std::size_t acquired() const { return acquired_.load(); }

private:
    std::vector<crypto::PrivateKey> keys_;
    std::atomic<std::size_t> acquired_{0};
};

/// KPIMON serves /metrics (read) and /control (read, write); TRAFFIC-STEER
/// serves /policy (read, write).
PermissionsMatrix test_permissions();
OfferingVocabulary test_vocabulary();

/// Principal #i uses test_key(i) under a fixed UUID.
Uuid principal(std::size_t index);
crypto::TrustStore trust_for(std::size_t principals);

/// Server key is test_key(0).
const crypto::PrivateKey& server_key();

/// A clock tests can move.
struct TestClock {
    std::atomic<UnixSeconds> now{1'700'000'000};
    std::function<UnixSeconds()> fn() {
        return [this] { return now.load(); };
    }
};

/// Test keys, trust for principals 1..n, test permissions, cycling token keys.
server::ServerOptions test_server_options(std::size_t principals = 8, int workers = 4);

/// Loopback server on a free port with test keys and permissions.
struct ServerHarness {
    explicit ServerHarness(std::size_t principals = 8, int workers = 4,
                           std::shared_ptr<server::KeySource> keys = nullptr, TestClock* clock = nullptr,
                           std::ostream* access_log = nullptr);
    explicit ServerHarness(server::ServerOptions options);
    ~ServerHarness();

    HostPort address() const { return HostPort{"127.0.0.1", server->port()}; }

    std::unique_ptr<server::XrfServer> server;
};

/// Client config for principal #index against `server`.
client::ClientConfig client_config(std::size_t index, const HostPort& server, const std::string& name,
                                   const std::string& offering, const std::string& endpoint_address = "127.0.0.1:1");

/// Files a deployment needs, written from the cached test keys into `dir`:
/// server.pem, server.pub.pem, trust_store.json (principals 1..n), one
/// <uuid>.pem per principal, permissions.json and offerings.json.
struct Deployment {
    std::filesystem::path dir;
    std::filesystem::path principal_key(std::size_t index) const;
};
Deployment write_deployment(const std::filesystem::path& dir, std::size_t principals);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& label);

}  // namespace xrf::testing
