#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xrf/core/model.hpp"
#include "xrf/crypto/challenge.hpp"
#include "xrf/crypto/jwt.hpp"
#include "xrf/crypto/trust_store.hpp"
#include "xrf/server/key_source.hpp"

namespace xrf::server {

struct RegistryOptions {
    std::string issuer = "xrf";
    std::int64_t token_ttl = 300;
    std::int64_t session_ttl = 600;
    /// Keys of expired tokens stay resolvable (JWKS, introspection) this long.
    std::int64_t key_retention = 300;
};

struct AuthResult {
    crypto::ChallengeEnvelope counter;
    std::string session;
    UnixSeconds session_expires = 0;
};

struct TokenRequest {
    Uuid consumer;
    Uuid provider;
    std::string endpoint;
    Scope scope = Scope::Read;
};

struct IssuedToken {
    crypto::SignedToken token;
    TokenClaims claims;
    Uuid kid;
};

struct Introspection {
    bool active = false;
    std::optional<TokenClaims> claims;
};

struct ProfileUpdateResult {
    XAppProfile profile;
    /// Current profiles of every consumer of the updated provider.
    std::vector<XAppProfile> consumers;
};

/// The in-memory store behind the server endpoints. One coarse reader/writer
/// lock guards all mutable state; RSA work runs outside it. Every call takes
/// `now` explicitly so expiry is testable without sleeping.
class Registry {
public:
    Registry(RegistryOptions options, crypto::PrivateKey server_key, crypto::TrustStore trust,
             OfferingVocabulary vocabulary, PermissionsMatrix permissions, std::shared_ptr<KeySource> keys);

    /// Opens the client's challenge and answers with a counter plus a session
    /// credential. Errors: UnknownPrincipal, Malformed, DecryptFailed,
    /// SignatureInvalid.
    AuthResult authenticate(const Uuid& principal, const crypto::ChallengeEnvelope& challenge, UnixSeconds now);

    /// Throws Unauthenticated for unknown or expired sessions.
    Uuid session_principal(std::string_view session, UnixSeconds now) const;

    /// Upsert; stored status becomes AVAILABLE and the server-side load is
    /// kept. Errors: Unauthenticated, InvalidArgument, Conflict (owned by
    /// another principal).
    void register_profile(std::string_view session, XAppProfile profile, UnixSeconds now);

    /// Merges name/offering/status/location/endpointAddress from `update`.
    /// xAppLoad is server-accounted and ignored. Errors: Malformed, NotFound,
    /// Unauthenticated, Forbidden, InvalidArgument.
    ProfileUpdateResult update_profile(std::string_view session, const Json& update, UnixSeconds now);

    /// AVAILABLE profiles whose offering and location match exactly,
    /// excluding `requester`.
    std::vector<XAppProfile> discover(std::string_view offering, std::string_view location,
                                      std::optional<Uuid> requester) const;

    /// Errors: Unauthenticated, Forbidden (scope not allowed or consumer not
    /// owned by the session), NotFound, Conflict (live WRITE grant),
    /// InvalidArgument.
    IssuedToken issue_token(std::string_view session, const TokenRequest& request, UnixSeconds now);

    /// Malformed tokens throw; everything else answers active/inactive.
    Introspection introspect(const crypto::SignedToken& token, UnixSeconds now) const;

    /// {"keys": [jwk]} for `kid`. Throws NotFound.
    Json jwks(const Uuid& kid) const;

    /// Releases grants and load for tokens with exp <= now; returns how many.
    std::size_t expire_grants(UnixSeconds now);

    std::optional<XAppProfile> profile(const Uuid& id) const;
    std::set<Uuid> consumers_of(const Uuid& provider) const;
    std::vector<XAppProfile> profiles() const;
    /// Claims of every token not yet released by expire_grants.
    std::vector<TokenClaims> outstanding_tokens() const;
    std::optional<ExclusiveGrant> grant(const Uuid& provider, const std::string& endpoint) const;
    std::size_t known_keys() const;

    const RegistryOptions& options() const noexcept { return options_; }

private:
    struct Entry {
        XAppProfile profile;
        Uuid owner;
    };
    struct Session {
        Uuid principal;
        UnixSeconds exp = 0;
    };
    struct TokenRecord {
        crypto::KeyPair key;
        TokenClaims claims;
        bool released = false;
    };

    Uuid session_principal_locked(std::string_view session, UnixSeconds now) const;
    void check_token_request_locked(const Uuid& principal, const TokenRequest& request, UnixSeconds now) const;
    std::size_t expire_locked(UnixSeconds now);
    void release_locked(const Uuid& kid, TokenRecord& record);

    RegistryOptions options_;
    crypto::PrivateKey server_key_;
    crypto::TrustStore trust_;
    OfferingVocabulary vocabulary_;
    std::shared_ptr<KeySource> keys_;

    mutable std::shared_mutex mutex_;
    PermissionsMatrix permissions_;
    std::unordered_map<Uuid, Entry> profiles_;
    std::unordered_map<Uuid, std::set<Uuid>> consumers_of_;
    std::unordered_map<Uuid, TokenRecord> tokens_;
    std::multimap<UnixSeconds, Uuid> expiry_queue_;
    std::multimap<UnixSeconds, Uuid> purge_queue_;
    std::unordered_map<std::string, Session> sessions_;
};

}  // namespace xrf::server
