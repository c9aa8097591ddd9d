#include "xrf/crypto/challenge.hpp"

#include <openssl/crypto.h>

#include <json.hpp>

#include "xrf/core/error.hpp"

namespace xrf::crypto {
namespace {

using Json = nlohmann::json;

constexpr std::size_t kContentKeySize = 32;

Bytes field(const Json& doc, const char* name) {
    auto it = doc.find(name);
    if (it == doc.end() || !it->is_string()) {
        throw Error(Errc::Malformed, std::string("envelope field '") + name + "' missing");
    }
    auto decoded = base64_decode(it->get_ref<const std::string&>());
    if (!decoded) throw Error(Errc::Malformed, std::string("envelope field '") + name + "' is not Base64");
    return std::move(*decoded);
}

Json parse_object(std::span<const std::uint8_t> bytes, const char* what) {
    Json doc = Json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw Error(Errc::Malformed, std::string(what) + " is not a JSON object");
    return doc;
}

}  // namespace

Bytes generate_nonce() { return random_bytes(kNonceSize); }

ChallengeEnvelope build_challenge(std::span<const std::uint8_t> nonce, const PrivateKey& signer,
                                  const PublicKey& recipient) {
    if (nonce.size() != kNonceSize) throw Error(Errc::InvalidArgument, "nonce must be 32 bytes");
    const Bytes signature = sign_sha256(signer, nonce);
    const Json inner{{"m", base64_encode(nonce)}, {"sig", base64_encode(signature)}};

    const Bytes content_key = random_bytes(kContentKeySize);
    const AeadBox box = aes256gcm_seal(content_key, to_bytes(inner.dump()));
    const Bytes wrapped_key = oaep_encrypt(recipient, content_key);

    const Json outer{{"ek", base64_encode(wrapped_key)},
                     {"iv", base64_encode(box.iv)},
                     {"ct", base64_encode(box.ciphertext)}};
    return ChallengeEnvelope{base64_encode(to_bytes(outer.dump()))};
}

Bytes open_challenge(const ChallengeEnvelope& envelope, const PrivateKey& own, const PublicKey& sender) {
    auto outer_bytes = base64_decode(envelope.payload);
    if (!outer_bytes) throw Error(Errc::Malformed, "envelope is not Base64");
    const Json outer = parse_object(*outer_bytes, "envelope");

    const Bytes wrapped_key = field(outer, "ek");
    AeadBox box{field(outer, "iv"), field(outer, "ct")};

    const Bytes content_key = oaep_decrypt(own, wrapped_key);
    const Bytes inner_bytes = aes256gcm_open(content_key, box);

    const Json inner = parse_object(inner_bytes, "challenge body");
    Bytes nonce = field(inner, "m");
    const Bytes signature = field(inner, "sig");
    if (nonce.size() != kNonceSize) throw Error(Errc::Malformed, "nonce must be 32 bytes");
    if (!verify_sha256(sender, nonce, signature)) {
        throw Error(Errc::SignatureInvalid, "challenge signature does not verify");
    }
    return nonce;
}

ChallengeEnvelope build_counter(std::span<const std::uint8_t> nonce, const PrivateKey& own, const PublicKey& peer) {
    return build_challenge(nonce, own, peer);
}

bool verify_counter(const ChallengeEnvelope& envelope, const PrivateKey& own, const PublicKey& peer,
                    std::span<const std::uint8_t> expected_nonce) {
    try {
        const Bytes nonce = open_challenge(envelope, own, peer);
        return nonce.size() == expected_nonce.size() &&
               CRYPTO_memcmp(nonce.data(), expected_nonce.data(), nonce.size()) == 0;
    } catch (const Error&) {
        return false;
    }
}

}  // namespace xrf::crypto
