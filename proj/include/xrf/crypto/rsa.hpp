#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "xrf/core/uuid.hpp"
#include "xrf/crypto/base64.hpp"

typedef struct evp_pkey_st EVP_PKEY;

namespace xrf::crypto {

namespace detail {
struct PkeyDeleter {
    void operator()(EVP_PKEY* key) const noexcept;
};
}  // namespace detail

/// Shared, immutable handle to an OpenSSL key. Copies alias the same key;
/// concurrent use from several threads is fine since nothing mutates it.
using PkeyHandle = std::shared_ptr<EVP_PKEY>;

class PublicKey {
public:
    PublicKey() = default;
    explicit PublicKey(PkeyHandle key) : key_(std::move(key)) {}

    static PublicKey from_pem(std::string_view pem);
    /// Rebuilds an RSA public key from big-endian modulus and exponent.
    static PublicKey from_components(std::span<const std::uint8_t> modulus, std::span<const std::uint8_t> exponent);

    std::string to_pem() const;
    Bytes modulus() const;
    Bytes exponent() const;
    int bits() const;

    bool valid() const noexcept { return key_ != nullptr; }
    EVP_PKEY* get() const noexcept { return key_.get(); }

    friend bool operator==(const PublicKey& a, const PublicKey& b);

private:
    PkeyHandle key_;
};

class PrivateKey {
public:
    PrivateKey() = default;
    explicit PrivateKey(PkeyHandle key) : key_(std::move(key)) {}

    static PrivateKey generate(int bits = 2048);
    static PrivateKey from_pem(std::string_view pem);
    static PrivateKey load(const std::filesystem::path& path);

    /// PKCS#8 PEM, unencrypted.
    std::string to_pem() const;
    PublicKey public_key() const;
    int bits() const;

    bool valid() const noexcept { return key_ != nullptr; }
    EVP_PKEY* get() const noexcept { return key_.get(); }

private:
    PkeyHandle key_;
};

/// RSA key pair plus the identifier tokens carry in their `kid` header.
struct KeyPair {
    Uuid kid;
    PrivateKey private_key;
    PublicKey public_key;
};

/// Fresh pair with a fresh kid. Throws Error(Crypto) if the RNG or the
/// key generator fails.
KeyPair generate_keypair(int bits = 2048);

/// RSASSA-PKCS1-v1_5 with SHA-256.
Bytes sign_sha256(const PrivateKey& key, std::span<const std::uint8_t> message);
bool verify_sha256(const PublicKey& key, std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature);

/// RSA-OAEP with SHA-256 for both the digest and MGF1.
Bytes oaep_encrypt(const PublicKey& key, std::span<const std::uint8_t> plaintext);
/// Throws Error(DecryptFailed) on any padding or key mismatch.
Bytes oaep_decrypt(const PrivateKey& key, std::span<const std::uint8_t> ciphertext);

struct AeadBox {
    Bytes iv;          // 12 bytes
    Bytes ciphertext;  // ciphertext || 16-byte tag
};

AeadBox aes256gcm_seal(std::span<const std::uint8_t> key, std::span<const std::uint8_t> plaintext);
/// Throws Error(DecryptFailed) when the tag does not authenticate.
Bytes aes256gcm_open(std::span<const std::uint8_t> key, const AeadBox& box);

Bytes random_bytes(std::size_t count);

std::string sha256_hex(std::span<const std::uint8_t> data);

}  // namespace xrf::crypto
