#include "xrf/crypto/jwt.hpp"


#include "xrf/core/error.hpp"

namespace xrf::crypto {
namespace {

struct Parts {
    std::string_view header;
    std::string_view payload;
    std::string_view signature;
    std::string_view signing_input;
};

Parts split(const SignedToken& token) {
    const std::string_view text = token.compact;
    const auto first = text.find('.');
    if (first == std::string_view::npos) throw Error(Errc::Malformed, "token has no '.' separators");
    const auto second = text.find('.', first + 1);
    if (second == std::string_view::npos || text.find('.', second + 1) != std::string_view::npos) {
        throw Error(Errc::Malformed, "token must have exactly three segments");
    }
    Parts parts;
    parts.header = text.substr(0, first);
    parts.payload = text.substr(first + 1, second - first - 1);
    parts.signature = text.substr(second + 1);
    parts.signing_input = text.substr(0, second);
    if (parts.header.empty() || parts.payload.empty() || parts.signature.empty()) {
        throw Error(Errc::Malformed, "token has an empty segment");
    }
    return parts;
}

Bytes decode_segment(std::string_view segment, const char* what) {
    auto bytes = base64url_decode(segment);
    if (!bytes) throw Error(Errc::Malformed, std::string(what) + " is not base64url");
    return std::move(*bytes);
}

Json parse_segment(std::string_view segment, const char* what) {
    const Bytes bytes = decode_segment(segment, what);
    Json doc = Json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw Error(Errc::Malformed, std::string(what) + " is not a JSON object");
    return doc;
}

TokenHeader parse_header(std::string_view segment) {
    const Json doc = parse_segment(segment, "header");
    TokenHeader header;
    try {
        header.alg = doc.at("alg").get<std::string>();
        header.typ = doc.at("typ").get<std::string>();
        header.kid = Uuid::from_string(doc.at("kid").get<std::string>());
    } catch (const Json::exception&) {
        throw Error(Errc::Malformed, "header lacks alg/typ/kid");
    }
    if (header.alg != "RS256") throw Error(Errc::Malformed, "unsupported alg '" + header.alg + "'");
    if (header.typ != "JWT") throw Error(Errc::Malformed, "unsupported typ '" + header.typ + "'");
    return header;
}

std::string json_segment(const Json& doc) { return base64url_encode(to_bytes(doc.dump())); }

}  // namespace

SignedToken issue_jwt(const TokenClaims& claims, const KeyPair& key, UnixSeconds issued_at) {
    validate_claims(claims, issued_at);
    const Json header{{"alg", "RS256"}, {"typ", "JWT"}, {"kid", key.kid.str()}};
    std::string compact = json_segment(header);
    compact.push_back('.');
    compact += json_segment(Json(claims));
    const Bytes signature = sign_sha256(key.private_key, to_bytes(compact));
    compact.push_back('.');
    compact += base64url_encode(signature);
    return SignedToken{std::move(compact)};
}

TokenHeader decode_header(const SignedToken& token) { return parse_header(split(token).header); }

TokenClaims verify_jwt(const SignedToken& token, const PublicKey& key, std::optional<Uuid> expected_aud,
                       UnixSeconds now) {
    const Parts parts = split(token);
    parse_header(parts.header);
    const Bytes signature = decode_segment(parts.signature, "signature");
    // The payload must be canonical base64url even though it is covered by
    // the signature as text; reject before verifying so errors stay Malformed.
    const Json payload = parse_segment(parts.payload, "payload");

    if (!verify_sha256(key, to_bytes(parts.signing_input), signature)) {
        throw Error(Errc::SignatureInvalid, "token signature does not verify");
    }
    TokenClaims claims;
    from_json(payload, claims);
    if (now >= claims.exp) throw Error(Errc::Expired, "token expired");
    if (expected_aud && claims.aud != *expected_aud) {
        throw Error(Errc::AudienceMismatch, "token audience is " + claims.aud.str());
    }
    return claims;
}

Json jwks_entry(const Uuid& kid, const PublicKey& key) {
    return Json{{"kty", "RSA"},
                {"kid", kid.str()},
                {"use", "sig"},
                {"alg", "RS256"},
                {"n", base64url_encode(key.modulus())},
                {"e", base64url_encode(key.exponent())}};
}

Json jwks_entry(const KeyPair& key) { return jwks_entry(key.kid, key.public_key); }

PublicKey public_key_from_jwk(const Json& jwk) {
    if (!jwk.is_object() || jwk.value("kty", "") != "RSA") throw Error(Errc::Malformed, "JWK is not an RSA key");
    auto n = base64url_decode(jwk.value("n", ""));
    auto e = base64url_decode(jwk.value("e", ""));
    if (!n || !e || n->empty() || e->empty()) throw Error(Errc::Malformed, "JWK n/e are not base64url");
    return PublicKey::from_components(*n, *e);
}

std::optional<Json> find_jwk(const Json& jwks, const Uuid& kid) {
    if (!jwks.is_object() || !jwks.contains("keys") || !jwks["keys"].is_array()) return std::nullopt;
    const auto wanted = kid.str();
    for (const auto& entry : jwks["keys"]) {
        if (entry.is_object() && entry.value("kid", "") == wanted) return entry;
    }
    return std::nullopt;
}

}  // namespace xrf::crypto
