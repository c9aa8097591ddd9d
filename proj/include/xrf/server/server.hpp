#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>

#include "xrf/core/net.hpp"
#include "xrf/server/registry.hpp"

namespace xrf::server {

/// Flat settings as they arrive from the command line or a config file.
struct ServerConfig {
    std::string listen = "127.0.0.1:8080";
    int workers = 4;
    std::int64_t token_ttl = 300;
    std::filesystem::path permissions;
    std::filesystem::path trust_store;
    std::filesystem::path offerings;
    std::filesystem::path key;
    std::string issuer = "xrf";
    std::size_t key_pool = 16;
};

/// Delivers `updated` to `consumer`'s ProfileUpdate endpoint. Returns false
/// on any delivery failure.
using Notifier = std::function<bool(const XAppProfile& consumer, const XAppProfile& updated)>;

/// PUT http://<consumer.endpointAddress>/profileUpdate with the profile JSON.
bool http_notify(const XAppProfile& consumer, const XAppProfile& updated);

struct ServerOptions {
    HostPort listen{"127.0.0.1", 0};
    int workers = 4;
    RegistryOptions registry;
    crypto::PrivateKey server_key;
    crypto::TrustStore trust;
    OfferingVocabulary vocabulary;
    PermissionsMatrix permissions;
    std::shared_ptr<KeySource> keys;
    /// One JSON line per request; null disables the log.
    std::ostream* access_log = nullptr;
    std::function<UnixSeconds()> clock = unix_now;
    Notifier notifier = http_notify;
    std::chrono::milliseconds sweep_interval{1000};
};

/// Reads every file named by `config`. Errors name the offending file.
ServerOptions load_server_options(const ServerConfig& config);

struct OperationStats {
    std::uint64_t count = 0;
    std::uint64_t failures = 0;
    double wall_seconds = 0;
    double cpu_seconds = 0;
};

struct ServerStats {
    /// Keyed by endpoint path.
    std::map<std::string, OperationStats> operations;
    std::uint64_t requests = 0;
    /// Arrival of the first request to the last successful token issuance.
    std::optional<double> processing_span_seconds;
    std::uint64_t notifications_sent = 0;
    std::uint64_t notifications_failed = 0;

    double handler_cpu_seconds() const;
    Json to_json() const;
};

/// HTTP front end over a Registry: the seven endpoints, request accounting,
/// the grant sweeper and profile-update fan-out.
class XrfServer {
public:
    explicit XrfServer(ServerOptions options);
    ~XrfServer();

    XrfServer(const XrfServer&) = delete;
    XrfServer& operator=(const XrfServer&) = delete;

    /// Binds and starts serving on `workers` threads. Throws Error(Io) when
    /// the address cannot be bound.
    void start();
    void stop();

    int port() const;
    std::string url() const;

    Registry& registry();
    const Registry& registry() const;

    ServerStats stats() const;
    void reset_stats();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace xrf::server
