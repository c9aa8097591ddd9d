#pragma once

#include <optional>
#include <string>

#include "xrf/core/model.hpp"
#include "xrf/crypto/rsa.hpp"

namespace xrf::crypto {

/// Compact JWS: base64url(header) "." base64url(payload) "." base64url(sig).
struct SignedToken {
    std::string compact;

    friend bool operator==(const SignedToken&, const SignedToken&) = default;
};

/// Signs `claims` with RS256 under `key`; the header carries key.kid.
/// Throws Error(InvalidArgument) if the claims are not valid at `issued_at`.
SignedToken issue_jwt(const TokenClaims& claims, const KeyPair& key, UnixSeconds issued_at = unix_now());

/// Structure check plus header parse. Does not touch the signature.
/// Throws Error(Malformed).
TokenHeader decode_header(const SignedToken& token);

/// Returns the claims iff the signature verifies under `key`, exp > now, and
/// (when given) aud == expected_aud. Each failure has its own Errc:
/// Malformed, SignatureInvalid, Expired, AudienceMismatch.
TokenClaims verify_jwt(const SignedToken& token, const PublicKey& key, std::optional<Uuid> expected_aud,
                       UnixSeconds now);

/// RFC 7517 RSA JWK: {"kty","kid","use","alg","n","e"}.
Json jwks_entry(const KeyPair& key);
Json jwks_entry(const Uuid& kid, const PublicKey& key);

/// Rebuilds the public key from a JWK's n/e. Throws Error(Malformed).
PublicKey public_key_from_jwk(const Json& jwk);

/// Picks the entry for `kid` out of {"keys": [...]}; nullopt when absent.
std::optional<Json> find_jwk(const Json& jwks, const Uuid& kid);

}  // namespace xrf::crypto
