#pragma once

#include <string>

#include "xrf/crypto/rsa.hpp"

namespace xrf::crypto {

constexpr std::size_t kNonceSize = 32;

/// Base64 (standard, padded) of the JSON object {"ek","iv","ct"}.
///
/// `ct` is AES-256-GCM over the inner JSON {"m","sig"} with the tag appended;
/// `ek` is the 32-byte content key wrapped with RSA-OAEP(SHA-256) under the
/// recipient's public key; `sig` is RS256 over the raw nonce bytes.
struct ChallengeEnvelope {
    std::string payload;

    friend bool operator==(const ChallengeEnvelope&, const ChallengeEnvelope&) = default;
};

Bytes generate_nonce();

/// Signs `nonce` with the sender's private key and seals nonce+signature for
/// the recipient. Throws Error(InvalidArgument) if the nonce is not 32 bytes.
ChallengeEnvelope build_challenge(std::span<const std::uint8_t> nonce, const PrivateKey& signer,
                                  const PublicKey& recipient);

/// Returns the nonce iff the envelope decrypts under `own` and the signature
/// verifies under `sender`. Errors: Malformed, DecryptFailed, SignatureInvalid.
Bytes open_challenge(const ChallengeEnvelope& envelope, const PrivateKey& own, const PublicKey& sender);

/// Responder side: echo the recovered nonce signed with the responder's key.
ChallengeEnvelope build_counter(std::span<const std::uint8_t> nonce, const PrivateKey& own, const PublicKey& peer);

/// Initiator side: true iff the counter opens, its signature is the peer's and
/// the nonce equals the one this side sent. Never throws on bad input.
bool verify_counter(const ChallengeEnvelope& envelope, const PrivateKey& own, const PublicKey& peer,
                    std::span<const std::uint8_t> expected_nonce);

}  // namespace xrf::crypto
