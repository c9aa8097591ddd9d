#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "xrf/core/error.hpp"
#include "xrf/core/model.hpp"
#include "xrf/core/net.hpp"
#include "xrf/crypto/jwt.hpp"
#include "xrf/crypto/rsa.hpp"

namespace xrf::client {

enum class ClientState { Created, Authenticated, Registered, Discovered, ServiceReady };

std::string_view to_string(ClientState state) noexcept;

struct ProfileSeed {
    std::string name;
    std::string offering;
    std::string location;
    std::string endpoint_address;
};

struct ClientConfig {
    HostPort server;
    /// Identity in the server's trust store.
    Uuid principal;
    crypto::PrivateKey own_key;
    crypto::PublicKey server_key;
    ProfileSeed profile;
    /// Pre-assigned instance id; random when unset.
    std::optional<Uuid> instance_id;

    std::string desired_offering;
    std::string desired_location;
    Scope desired_scope = Scope::Read;
    std::string desired_endpoint = "/metrics";
};

struct StepTiming {
    std::string step;
    double wall_seconds = 0;
    double cpu_seconds = 0;
};

/// A startup step failed. `http_status` is 0 for local or transport errors.
class StartupError : public Error {
public:
    StartupError(std::string step, Errc code, int http_status, const std::string& what)
        : Error(code, step + ": " + what), step_(std::move(step)), http_status_(http_status) {}

    const std::string& step() const noexcept { return step_; }
    int http_status() const noexcept { return http_status_; }

private:
    std::string step_;
    int http_status_;
};

struct ServiceResponse {
    int status = 0;
    std::string body;
};

enum class Method { Get, Post };

class HttpClientPool;

/// Drives one xApp through authentication, registration, discovery and token
/// acquisition, then issues service requests with the held token.
class XrfClient {
public:
    explicit XrfClient(ClientConfig config);
    ~XrfClient();

    XrfClient(const XrfClient&) = delete;
    XrfClient& operator=(const XrfClient&) = delete;

    /// Runs the four steps in order; throws StartupError naming the step.
    void startup();

    void authenticate();
    void register_profile();
    std::vector<XAppProfile> discover();
    void request_token();

    /// Sends a partial profile update for this client's own profile.
    int update_own_profile(const Json& fields);

    ServiceResponse request_service(const XAppProfile& target, std::string_view endpoint, Method method,
                                    const crypto::SignedToken& token);
    /// Uses the selected provider and held token; refuses locally (Forbidden)
    /// once the provider has been reported suspended.
    ServiceResponse request_service(std::string_view endpoint, Method method);

    /// Applies a pushed provider profile. Returns the HTTP status to answer.
    int handle_profile_update_push(const Json& update);

    ClientState state() const;
    std::vector<ClientState> history() const;
    std::vector<StepTiming> timings() const;

    const XAppProfile& profile() const noexcept { return profile_; }
    const Uuid& principal() const noexcept { return config_.principal; }
    std::optional<XAppProfile> provider() const;
    std::optional<crypto::SignedToken> token() const;
    bool token_usable() const;
    const std::string& session() const noexcept { return session_; }

private:
    void advance(ClientState next);
    void record(const std::string& step, double wall, double cpu);

    ClientConfig config_;
    XAppProfile profile_;
    std::unique_ptr<HttpClientPool> http_;
    std::string session_;

    mutable std::mutex mutex_;
    std::vector<ClientState> history_{ClientState::Created};
    std::vector<StepTiming> timings_;
    std::vector<XAppProfile> candidates_;
    std::optional<XAppProfile> provider_;
    std::optional<crypto::SignedToken> token_;
    UnixSeconds token_exp_ = 0;
    bool token_usable_ = false;
    std::map<std::string, std::unique_ptr<HttpClientPool>> service_pools_;
};

}  // namespace xrf::client
