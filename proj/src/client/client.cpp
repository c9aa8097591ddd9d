#include "xrf/client/client.hpp"

#include <map>

#include "http_pool.hpp"
#include "xrf/core/cpu_time.hpp"
#include "xrf/core/wire.hpp"
#include "xrf/crypto/challenge.hpp"

namespace xrf::client {
namespace {

constexpr const char* kStepAuth = "initial-authentication";
constexpr const char* kStepRegister = "registration";
constexpr const char* kStepDiscover = "discovery";
constexpr const char* kStepToken = "access-token";

[[noreturn]] void fail_from_response(const std::string& step, const httplib::Result& res) {
    if (!res) {
        throw StartupError(step, Errc::Unavailable, 0, "transport error: " + httplib::to_string(res.error()));
    }
    Errc code = Errc::Unavailable;
    std::string message = "HTTP " + std::to_string(res->status);
    const auto body = Json::parse(res->body, nullptr, false);
    if (body.is_object()) {
        code = wire::errc_from_name(body.value("error", ""), code);
        message += " " + body.value("message", "");
    }
    throw StartupError(step, code, res->status, message);
}

Json parse_json(const std::string& step, const std::string& text) {
    auto doc = Json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw StartupError(step, Errc::Malformed, 200, "response is not JSON");
    return doc;
}

}  // namespace

std::string_view to_string(ClientState state) noexcept {
    switch (state) {
        case ClientState::Created: return "CREATED";
        case ClientState::Authenticated: return "AUTHENTICATED";
        case ClientState::Registered: return "REGISTERED";
        case ClientState::Discovered: return "DISCOVERED";
        case ClientState::ServiceReady: return "SERVICE_READY";
    }
    return "CREATED";
}

XrfClient::XrfClient(ClientConfig config)
    : config_(std::move(config)), http_(std::make_unique<HttpClientPool>(config_.server)) {
    profile_.instance_id = config_.instance_id.value_or(Uuid::random());
    profile_.name = config_.profile.name;
    profile_.offering = config_.profile.offering;
    profile_.location = config_.profile.location;
    profile_.endpoint_address = config_.profile.endpoint_address;
    validate_profile(profile_);
    if (!config_.own_key.valid() || !config_.server_key.valid()) {
        throw Error(Errc::InvalidArgument, "client needs its own private key and the server public key");
    }
}

XrfClient::~XrfClient() = default;

void XrfClient::advance(ClientState next) {
    std::lock_guard lock(mutex_);
    if (static_cast<int>(next) != static_cast<int>(history_.back()) + 1) {
        throw Error(Errc::InvalidArgument, std::string("cannot move from ") + std::string(to_string(history_.back())) +
                                               " to " + std::string(to_string(next)));
    }
    history_.push_back(next);
}

void XrfClient::record(const std::string& step, double wall, double cpu) {
    std::lock_guard lock(mutex_);
    timings_.push_back(StepTiming{step, wall, cpu});
}

void XrfClient::startup() {
    authenticate();
    register_profile();
    if (discover().empty()) {
        throw StartupError(kStepDiscover, Errc::NoCandidate, 200,
                           "no provider offers " + config_.desired_offering + " at " + config_.desired_location);
    }
    request_token();
}

void XrfClient::authenticate() {
    if (state() != ClientState::Created) throw StartupError(kStepAuth, Errc::InvalidArgument, 0, "already authenticated");
    Stopwatch watch;
    const auto nonce = crypto::generate_nonce();
    const auto challenge = crypto::build_challenge(nonce, config_.own_key, config_.server_key);
    const Json body{{"principal", config_.principal.str()}, {"challenge", challenge.payload}};

    auto conn = http_->lease();
    auto res = conn->Post(wire::kInitialAuthentication, body.dump(), "application/json");
    if (!res || res->status != 200) fail_from_response(kStepAuth, res);

    const auto reply = parse_json(kStepAuth, res->body);
    const crypto::ChallengeEnvelope counter{reply.value("counter", "")};
    if (!crypto::verify_counter(counter, config_.own_key, config_.server_key, nonce)) {
        throw StartupError(kStepAuth, Errc::SignatureInvalid, 200, "server counter-challenge failed verification");
    }
    session_ = reply.value("session", "");
    if (session_.empty()) throw StartupError(kStepAuth, Errc::Malformed, 200, "no session credential");
    record(kStepAuth, watch.wall_seconds(), watch.cpu_seconds());
    advance(ClientState::Authenticated);
}

void XrfClient::register_profile() {
    if (state() != ClientState::Authenticated) {
        throw StartupError(kStepRegister, Errc::Unauthenticated, 0, "authenticate before registering");
    }
    Stopwatch watch;
    auto conn = http_->lease();
    auto res = conn->Put(wire::kRegistration, {{wire::kSessionHeader, session_}}, Json(profile_).dump(),
                         "application/json");
    if (!res || res->status != 200) fail_from_response(kStepRegister, res);
    profile_.status = XAppStatus::Available;
    record(kStepRegister, watch.wall_seconds(), watch.cpu_seconds());
    advance(ClientState::Registered);
}

std::vector<XAppProfile> XrfClient::discover() {
    if (state() != ClientState::Registered) throw StartupError(kStepDiscover, Errc::InvalidArgument, 0, "register first");
    Stopwatch watch;
    const httplib::Params params{{"xAppOffering", config_.desired_offering},
                                 {"xAppLocation", config_.desired_location},
                                 {"requester", profile_.instance_id.str()}};
    auto conn = http_->lease();
    auto res = conn->Get(wire::kDiscovery, params, httplib::Headers{});
    if (!res || res->status != 200) fail_from_response(kStepDiscover, res);

    std::vector<XAppProfile> found;
    try {
        found = parse_json(kStepDiscover, res->body).get<std::vector<XAppProfile>>();
    } catch (const Error& e) {
        throw StartupError(kStepDiscover, e.code(), 200, e.what());
    }
    record(kStepDiscover, watch.wall_seconds(), watch.cpu_seconds());
    if (found.empty()) return found;

    {
        std::lock_guard lock(mutex_);
        candidates_ = found;
        provider_ = select_provider(candidates_);
    }
    advance(ClientState::Discovered);
    return found;
}

void XrfClient::request_token() {
    if (state() != ClientState::Discovered) throw StartupError(kStepToken, Errc::InvalidArgument, 0, "discover first");
    Stopwatch watch;
    const auto target = provider();
    const Json body{{"consumer", profile_.instance_id.str()},
                    {"provider", target->instance_id.str()},
                    {"endpoint", config_.desired_endpoint},
                    {"scope", to_string(config_.desired_scope)}};
    auto conn = http_->lease();
    auto res = conn->Post(wire::kAccessToken, {{wire::kSessionHeader, session_}}, body.dump(), "application/json");
    if (!res || res->status != 200) fail_from_response(kStepToken, res);

    const auto reply = parse_json(kStepToken, res->body);
    crypto::SignedToken token{reply.value("access_token", "")};
    try {
        crypto::decode_header(token);
    } catch (const Error& e) {
        throw StartupError(kStepToken, Errc::Malformed, 200, e.what());
    }
    {
        std::lock_guard lock(mutex_);
        token_ = std::move(token);
        token_exp_ = unix_now() + reply.value("expires_in", std::int64_t{0});
        token_usable_ = true;
    }
    record(kStepToken, watch.wall_seconds(), watch.cpu_seconds());
    advance(ClientState::ServiceReady);
}

int XrfClient::update_own_profile(const Json& fields) {
    Json body = fields;
    body["xAppInstanceID"] = profile_.instance_id.str();
    auto conn = http_->lease();
    auto res = conn->Put(wire::kProfileUpdateHandler, {{wire::kSessionHeader, session_}}, body.dump(),
                         "application/json");
    if (!res) throw Error(Errc::Unavailable, "transport error: " + httplib::to_string(res.error()));
    return res->status;
}

ServiceResponse XrfClient::request_service(const XAppProfile& target, std::string_view endpoint, Method method,
                                           const crypto::SignedToken& token) {
    HttpClientPool* pool = nullptr;
    {
        std::lock_guard lock(mutex_);
        auto& slot = service_pools_[target.endpoint_address];
        if (!slot) slot = std::make_unique<HttpClientPool>(HostPort::parse(target.endpoint_address));
        pool = slot.get();
    }

    const httplib::Headers headers{{"Authorization", "Bearer " + token.compact}};
    auto conn = pool->lease();
    const std::string path(endpoint);
    auto res = method == Method::Get ? conn->Get(path, headers) : conn->Post(path, headers, "{}", "application/json");
    if (!res) throw Error(Errc::Unavailable, "transport error: " + httplib::to_string(res.error()));
    return ServiceResponse{res->status, res->body};
}

ServiceResponse XrfClient::request_service(std::string_view endpoint, Method method) {
    XAppProfile target;
    crypto::SignedToken token;
    {
        std::lock_guard lock(mutex_);
        if (history_.back() != ClientState::ServiceReady || !provider_ || !token_) {
            throw Error(Errc::InvalidArgument, "client is not SERVICE_READY");
        }
        if (!token_usable_) throw Error(Errc::Forbidden, "provider is suspended; held token is unusable");
        target = *provider_;
        token = *token_;
    }
    return request_service(target, endpoint, method, token);
}

int XrfClient::handle_profile_update_push(const Json& update) {
    if (!update.is_object() || !update.contains("xAppInstanceID") || !update["xAppInstanceID"].is_string()) return 400;
    const auto id = Uuid::parse(update["xAppInstanceID"].get<std::string>());
    if (!id) return 400;

    std::lock_guard lock(mutex_);
    if (!provider_ || provider_->instance_id != *id) return 404;
    XAppProfile merged = *provider_;
    try {
        if (update.contains("xAppInstanceName")) merged.name = update.at("xAppInstanceName").get<std::string>();
        if (update.contains("xAppOffering")) merged.offering = update.at("xAppOffering").get<std::string>();
        if (update.contains("xAppLocation")) merged.location = update.at("xAppLocation").get<std::string>();
        if (update.contains("endpointAddress")) merged.endpoint_address = update.at("endpointAddress").get<std::string>();
        if (update.contains("xAppLoad")) merged.load = update.at("xAppLoad").get<std::int64_t>();
        if (update.contains("xAppStatus")) {
            auto status = parse_status(update.at("xAppStatus").get<std::string>());
            if (!status) return 400;
            merged.status = *status;
        }
    } catch (const Json::exception&) {
        return 400;
    }
    provider_ = merged;
    if (merged.status == XAppStatus::Suspended || merged.status == XAppStatus::Deregistered) token_usable_ = false;
    return 200;
}

ClientState XrfClient::state() const {
    std::lock_guard lock(mutex_);
    return history_.back();
}

std::vector<ClientState> XrfClient::history() const {
    std::lock_guard lock(mutex_);
    return history_;
}

std::vector<StepTiming> XrfClient::timings() const {
    std::lock_guard lock(mutex_);
    return timings_;
}

std::optional<XAppProfile> XrfClient::provider() const {
    std::lock_guard lock(mutex_);
    return provider_;
}

std::optional<crypto::SignedToken> XrfClient::token() const {
    std::lock_guard lock(mutex_);
    return token_;
}

bool XrfClient::token_usable() const {
    std::lock_guard lock(mutex_);
    return token_usable_ && token_ && unix_now() < token_exp_;
}

}  // namespace xrf::client
