#include "xrf/client/validator.hpp"

#include <algorithm>

#include "http_pool.hpp"
#include "xrf/core/error.hpp"
#include "xrf/core/wire.hpp"

namespace xrf::client {

std::string_view to_string(ValidationMode mode) noexcept {
    return mode == ValidationMode::SelfContained ? "SELF_CONTAINED" : "REMOTE_INTROSPECTION";
}

std::optional<ValidationMode> parse_mode(std::string_view text) {
    if (text == "SELF_CONTAINED" || text == "self-contained") return ValidationMode::SelfContained;
    if (text == "REMOTE_INTROSPECTION" || text == "remote-introspection") return ValidationMode::RemoteIntrospection;
    return std::nullopt;
}

std::string_view to_string(DenyReason reason) noexcept {
    switch (reason) {
        case DenyReason::None: return "none";
        case DenyReason::Malformed: return "malformed";
        case DenyReason::UnknownKid: return "unknown-kid";
        case DenyReason::BadSignature: return "bad-signature";
        case DenyReason::Expired: return "expired";
        case DenyReason::WrongAudience: return "wrong-audience";
        case DenyReason::Inactive: return "inactive";
        case DenyReason::Unavailable: return "unavailable";
    }
    return "none";
}

std::optional<crypto::SignedToken> parse_bearer(std::string_view authorization) {
    constexpr std::string_view kPrefix = "Bearer ";
    if (!authorization.starts_with(kPrefix)) return std::nullopt;
    const auto token = authorization.substr(kPrefix.size());
    if (token.empty() || std::any_of(token.begin(), token.end(), [](char c) { return c == ' ' || c == '\t'; })) {
        return std::nullopt;
    }
    return crypto::SignedToken{std::string(token)};
}

std::optional<crypto::PublicKey> KidCache::find(const Uuid& kid) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(kid);
    if (it == entries_.end()) return std::nullopt;
    return it->second.key;
}

void KidCache::insert(const Uuid& kid, crypto::PublicKey key, UnixSeconds fetched_at) {
    std::unique_lock lock(mutex_);
    if (capacity_ == 0) return;
    if (!entries_.contains(kid) && entries_.size() >= capacity_) {
        auto oldest = std::min_element(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) {
            return a.second.sequence < b.second.sequence;
        });
        entries_.erase(oldest);
    }
    entries_.insert_or_assign(kid, Entry{std::move(key), fetched_at, next_sequence_++});
}

std::size_t KidCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

void KidCache::clear() {
    std::unique_lock lock(mutex_);
    entries_.clear();
}

TokenValidator::TokenValidator(HostPort server, std::size_t cache_capacity)
    : http_(std::make_unique<HttpClientPool>(std::move(server))), cache_(cache_capacity) {}

TokenValidator::~TokenValidator() = default;

void TokenValidator::reset_counters() {
    jwks_fetches_ = 0;
    introspections_ = 0;
}

Verdict TokenValidator::validate_incoming(std::string_view authorization, ValidationMode mode, const Uuid& own_id,
                                          UnixSeconds now) {
    auto token = parse_bearer(authorization);
    if (!token) return Verdict::deny(DenyReason::Malformed);
    return mode == ValidationMode::SelfContained ? self_contained(*token, own_id, now) : remote(*token, own_id);
}

Verdict TokenValidator::self_contained(const crypto::SignedToken& token, const Uuid& own_id, UnixSeconds now) {
    TokenHeader header;
    try {
        header = crypto::decode_header(token);
    } catch (const Error&) {
        return Verdict::deny(DenyReason::Malformed);
    }

    auto key = cache_.find(header.kid);
    if (!key) {
        std::lock_guard lock(fetch_mutex_);
        key = cache_.find(header.kid);
        if (!key) {
            jwks_fetches_.fetch_add(1);
            auto conn = http_->lease();
            auto res = conn->Get(std::string(wire::kJwks) + "?kid=" + header.kid.str());
            if (!res) return Verdict::deny(DenyReason::Unavailable);
            if (res->status == 404) return Verdict::deny(DenyReason::UnknownKid);
            if (res->status != 200) return Verdict::deny(DenyReason::Unavailable);
            try {
                const auto jwks = Json::parse(res->body);
                auto jwk = crypto::find_jwk(jwks, header.kid);
                if (!jwk) return Verdict::deny(DenyReason::UnknownKid);
                key = crypto::public_key_from_jwk(*jwk);
            } catch (const std::exception&) {
                return Verdict::deny(DenyReason::Unavailable);
            }
            cache_.insert(header.kid, *key, now);
        }
    }

    try {
        return Verdict::accept(crypto::verify_jwt(token, *key, own_id, now));
    } catch (const Error& e) {
        switch (e.code()) {
            case Errc::Expired: return Verdict::deny(DenyReason::Expired);
            case Errc::AudienceMismatch: return Verdict::deny(DenyReason::WrongAudience);
            case Errc::SignatureInvalid: return Verdict::deny(DenyReason::BadSignature);
            default: return Verdict::deny(DenyReason::Malformed);
        }
    }
}

Verdict TokenValidator::remote(const crypto::SignedToken& token, const Uuid& own_id) {
    introspections_.fetch_add(1);
    auto conn = http_->lease();
    auto res = conn->Post(wire::kIntrospection, Json{{"token", token.compact}}.dump(), "application/json");
    if (!res) return Verdict::deny(DenyReason::Unavailable);
    if (res->status == 400) return Verdict::deny(DenyReason::Malformed);
    if (res->status != 200) return Verdict::deny(DenyReason::Unavailable);
    try {
        const auto body = Json::parse(res->body);
        if (!body.value("active", false)) return Verdict::deny(DenyReason::Inactive);
        TokenClaims claims;
        from_json(body, claims);
        if (claims.aud != own_id) return Verdict::deny(DenyReason::WrongAudience);
        return Verdict::accept(std::move(claims));
    } catch (const std::exception&) {
        return Verdict::deny(DenyReason::Unavailable);
    }
}

}  // namespace xrf::client
