#pragma once

#include <memory>

#include "xrf/client/client.hpp"
#include "xrf/client/validator.hpp"

namespace xrf::client {

struct ListenerOptions {
    HostPort listen{"127.0.0.1", 0};
    int workers = 4;
    ValidationMode mode = ValidationMode::SelfContained;
};

struct ProviderStats {
    std::uint64_t requests = 0;
    std::uint64_t accepted = 0;
    std::uint64_t denied = 0;
    /// Whole service handler, validation included.
    double handler_wall_seconds = 0;
    double handler_cpu_seconds = 0;
    /// validate_incoming alone.
    double verify_wall_seconds = 0;
    double verify_cpu_seconds = 0;
};

/// The sidecar's inbound HTTP side: PUT /profileUpdate plus the demo service
/// endpoints GET /metrics (read) and POST /control (write), both guarded by
/// bearer-token validation.
class ClientListener {
public:
    ClientListener(HostPort server, ListenerOptions options);
    ~ClientListener();

    ClientListener(const ClientListener&) = delete;
    ClientListener& operator=(const ClientListener&) = delete;

    /// Binds; the address is known from here on so it can go into the profile.
    void start();
    void stop();
    /// Requests are answered 503 until a client is attached.
    void attach(XrfClient& owner);

    int port() const;
    std::string address() const;

    void set_mode(ValidationMode mode);
    ValidationMode mode() const;
    TokenValidator& validator();

    ProviderStats stats() const;
    void reset_stats();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// HTTP status the listener answers for a denial.
int deny_status(DenyReason reason) noexcept;

}  // namespace xrf::client
