#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include "xrf/core/model.hpp"
#include "xrf/core/net.hpp"
#include "xrf/crypto/jwt.hpp"

namespace xrf::client {

enum class ValidationMode { SelfContained, RemoteIntrospection };

std::string_view to_string(ValidationMode mode) noexcept;
std::optional<ValidationMode> parse_mode(std::string_view text);

enum class DenyReason {
    None,
    Malformed,
    UnknownKid,
    BadSignature,
    Expired,
    WrongAudience,
    Inactive,
    Unavailable,
};

std::string_view to_string(DenyReason reason) noexcept;

struct Verdict {
    bool accepted = false;
    std::optional<TokenClaims> claims;
    DenyReason reason = DenyReason::None;

    static Verdict accept(TokenClaims claims) { return Verdict{true, std::move(claims), DenyReason::None}; }
    static Verdict deny(DenyReason reason) { return Verdict{false, std::nullopt, reason}; }
};

/// kid -> public key fetched from the JWKS endpoint. Safe for concurrent
/// readers and writers. When full, the oldest entry gives way.
class KidCache {
public:
    explicit KidCache(std::size_t capacity = 10000) : capacity_(capacity) {}

    std::optional<crypto::PublicKey> find(const Uuid& kid) const;
    void insert(const Uuid& kid, crypto::PublicKey key, UnixSeconds fetched_at);
    std::size_t size() const;
    void clear();

private:
    struct Entry {
        crypto::PublicKey key;
        UnixSeconds fetched_at = 0;
        std::uint64_t sequence = 0;
    };

    std::size_t capacity_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<Uuid, Entry> entries_;
    std::uint64_t next_sequence_ = 0;
};

class HttpClientPool;

/// Inbound token validation for a provider, in either mode. Fails closed:
/// anything other than a positive verification is a denial.
class TokenValidator {
public:
    explicit TokenValidator(HostPort server, std::size_t cache_capacity = 10000);
    ~TokenValidator();

    TokenValidator(const TokenValidator&) = delete;
    TokenValidator& operator=(const TokenValidator&) = delete;

    /// `authorization` is the raw Authorization header value.
    Verdict validate_incoming(std::string_view authorization, ValidationMode mode, const Uuid& own_id,
                              UnixSeconds now = unix_now());

    std::uint64_t jwks_fetches() const noexcept { return jwks_fetches_.load(); }
    std::uint64_t introspections() const noexcept { return introspections_.load(); }
    KidCache& cache() noexcept { return cache_; }
    void reset_counters();

private:
    Verdict self_contained(const crypto::SignedToken& token, const Uuid& own_id, UnixSeconds now);
    Verdict remote(const crypto::SignedToken& token, const Uuid& own_id);

    std::unique_ptr<HttpClientPool> http_;
    KidCache cache_;
    std::mutex fetch_mutex_;
    std::atomic<std::uint64_t> jwks_fetches_{0};
    std::atomic<std::uint64_t> introspections_{0};
};

/// "Bearer <token>" -> token; nullopt for anything else.
std::optional<crypto::SignedToken> parse_bearer(std::string_view authorization);

}  // namespace xrf::client
