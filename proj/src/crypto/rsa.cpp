#include "xrf/crypto/rsa.hpp"

#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/param_build.h>
#include <openssl/pem.h>
#include <openssl/rand.h>

#include <fstream>
#include <sstream>

#include "xrf/core/error.hpp"

namespace xrf::crypto {

void detail::PkeyDeleter::operator()(EVP_PKEY* key) const noexcept { EVP_PKEY_free(key); }

namespace {

constexpr std::size_t kGcmIvSize = 12;
constexpr std::size_t kGcmTagSize = 16;

struct CtxDeleter {
    void operator()(EVP_PKEY_CTX* ctx) const noexcept { EVP_PKEY_CTX_free(ctx); }
};
struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* ctx) const noexcept { EVP_MD_CTX_free(ctx); }
};
struct CipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX* ctx) const noexcept { EVP_CIPHER_CTX_free(ctx); }
};
struct BioDeleter {
    void operator()(BIO* bio) const noexcept { BIO_free(bio); }
};
struct BnDeleter {
    void operator()(BIGNUM* bn) const noexcept { BN_free(bn); }
};
struct ParamBldDeleter {
    void operator()(OSSL_PARAM_BLD* bld) const noexcept { OSSL_PARAM_BLD_free(bld); }
};
struct ParamDeleter {
    void operator()(OSSL_PARAM* params) const noexcept { OSSL_PARAM_free(params); }
};

using PkeyCtx = std::unique_ptr<EVP_PKEY_CTX, CtxDeleter>;
using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;
using Bio = std::unique_ptr<BIO, BioDeleter>;
using Bignum = std::unique_ptr<BIGNUM, BnDeleter>;

PkeyHandle wrap(EVP_PKEY* key) { return PkeyHandle(key, detail::PkeyDeleter{}); }

[[noreturn]] void fail(Errc code, const std::string& what) {
    const unsigned long err = ERR_get_error();
    ERR_clear_error();
    if (err == 0) throw Error(code, what);
    char buf[256];
    ERR_error_string_n(err, buf, sizeof buf);
    throw Error(code, what + ": " + buf);
}

void require_rsa(EVP_PKEY* key) {
    if (key == nullptr || EVP_PKEY_base_id(key) != EVP_PKEY_RSA) {
        throw Error(Errc::InvalidArgument, "expected an RSA key");
    }
}

Bytes bn_param(EVP_PKEY* key, const char* name) {
    BIGNUM* raw = nullptr;
    if (EVP_PKEY_get_bn_param(key, name, &raw) != 1) fail(Errc::Crypto, std::string("cannot read ") + name);
    Bignum bn(raw);
    Bytes out(static_cast<std::size_t>(BN_num_bytes(bn.get())));
    BN_bn2bin(bn.get(), out.data());
    return out;
}

std::string bio_to_string(BIO* bio) {
    char* data = nullptr;
    const long len = BIO_get_mem_data(bio, &data);
    return std::string(data, static_cast<std::size_t>(len));
}

}  // namespace

PublicKey PublicKey::from_pem(std::string_view pem) {
    Bio bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
    EVP_PKEY* key = PEM_read_bio_PUBKEY(bio.get(), nullptr, nullptr, nullptr);
    if (key == nullptr) fail(Errc::Malformed, "cannot parse public key PEM");
    auto handle = wrap(key);
    require_rsa(key);
    return PublicKey(std::move(handle));
}

PublicKey PublicKey::from_components(std::span<const std::uint8_t> modulus, std::span<const std::uint8_t> exponent) {
    if (modulus.empty() || exponent.empty()) throw Error(Errc::Malformed, "empty RSA component");
    Bignum n(BN_bin2bn(modulus.data(), static_cast<int>(modulus.size()), nullptr));
    Bignum e(BN_bin2bn(exponent.data(), static_cast<int>(exponent.size()), nullptr));
    if (!n || !e) fail(Errc::Crypto, "BN_bin2bn failed");

    std::unique_ptr<OSSL_PARAM_BLD, ParamBldDeleter> bld(OSSL_PARAM_BLD_new());
    if (!bld || OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_N, n.get()) != 1 ||
        OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_E, e.get()) != 1) {
        fail(Errc::Crypto, "cannot build RSA parameters");
    }
    std::unique_ptr<OSSL_PARAM, ParamDeleter> params(OSSL_PARAM_BLD_to_param(bld.get()));
    PkeyCtx ctx(EVP_PKEY_CTX_new_from_name(nullptr, "RSA", nullptr));
    EVP_PKEY* key = nullptr;
    if (!ctx || !params || EVP_PKEY_fromdata_init(ctx.get()) != 1 ||
        EVP_PKEY_fromdata(ctx.get(), &key, EVP_PKEY_PUBLIC_KEY, params.get()) != 1) {
        fail(Errc::Malformed, "cannot rebuild RSA public key");
    }
    return PublicKey(wrap(key));
}

std::string PublicKey::to_pem() const {
    Bio bio(BIO_new(BIO_s_mem()));
    if (PEM_write_bio_PUBKEY(bio.get(), get()) != 1) fail(Errc::Crypto, "cannot write public key PEM");
    return bio_to_string(bio.get());
}

Bytes PublicKey::modulus() const { return bn_param(get(), OSSL_PKEY_PARAM_RSA_N); }
Bytes PublicKey::exponent() const { return bn_param(get(), OSSL_PKEY_PARAM_RSA_E); }
int PublicKey::bits() const { return EVP_PKEY_get_bits(get()); }

bool operator==(const PublicKey& a, const PublicKey& b) {
    if (!a.valid() || !b.valid()) return a.valid() == b.valid();
    return EVP_PKEY_eq(a.get(), b.get()) == 1;
}

PrivateKey PrivateKey::generate(int bits) {
    if (bits < 2048) throw Error(Errc::InvalidArgument, "RSA keys must be at least 2048 bits");
    EVP_PKEY* key = EVP_PKEY_Q_keygen(nullptr, nullptr, "RSA", static_cast<size_t>(bits));
    if (key == nullptr) fail(Errc::Crypto, "RSA key generation failed");
    return PrivateKey(wrap(key));
}

PrivateKey PrivateKey::from_pem(std::string_view pem) {
    Bio bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
    EVP_PKEY* key = PEM_read_bio_PrivateKey(bio.get(), nullptr, nullptr, nullptr);
    if (key == nullptr) fail(Errc::Malformed, "cannot parse private key PEM");
    auto handle = wrap(key);
    require_rsa(key);
    return PrivateKey(std::move(handle));
}

PrivateKey PrivateKey::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open key file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return from_pem(buf.str());
}

std::string PrivateKey::to_pem() const {
    Bio bio(BIO_new(BIO_s_mem()));
    if (PEM_write_bio_PKCS8PrivateKey(bio.get(), get(), nullptr, nullptr, 0, nullptr, nullptr) != 1) {
        fail(Errc::Crypto, "cannot write private key PEM");
    }
    return bio_to_string(bio.get());
}

PublicKey PrivateKey::public_key() const {
    // Round-trip through DER so the public handle owns no private material.
    unsigned char* der = nullptr;
    const int len = i2d_PUBKEY(get(), &der);
    if (len <= 0) fail(Errc::Crypto, "cannot export public key");
    const unsigned char* p = der;
    EVP_PKEY* pub = d2i_PUBKEY(nullptr, &p, len);
    OPENSSL_free(der);
    if (pub == nullptr) fail(Errc::Crypto, "cannot import public key");
    return PublicKey(wrap(pub));
}

int PrivateKey::bits() const { return EVP_PKEY_get_bits(get()); }

KeyPair generate_keypair(int bits) {
    KeyPair pair;
    pair.kid = Uuid::random();
    pair.private_key = PrivateKey::generate(bits);
    pair.public_key = pair.private_key.public_key();
    return pair;
}

Bytes sign_sha256(const PrivateKey& key, std::span<const std::uint8_t> message) {
    MdCtx ctx(EVP_MD_CTX_new());
    size_t len = 0;
    if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, EVP_sha256(), nullptr, key.get()) != 1 ||
        EVP_DigestSign(ctx.get(), nullptr, &len, message.data(), message.size()) != 1) {
        fail(Errc::Crypto, "signature setup failed");
    }
    Bytes sig(len);
    if (EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(), message.size()) != 1) {
        fail(Errc::Crypto, "signing failed");
    }
    sig.resize(len);
    return sig;
}

bool verify_sha256(const PublicKey& key, std::span<const std::uint8_t> message,
                   std::span<const std::uint8_t> signature) {
    if (!key.valid()) return false;
    MdCtx ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, EVP_sha256(), nullptr, key.get()) != 1) {
        fail(Errc::Crypto, "verification setup failed");
    }
    const int rc = EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(), message.size());
    ERR_clear_error();
    return rc == 1;
}

Bytes oaep_encrypt(const PublicKey& key, std::span<const std::uint8_t> plaintext) {
    PkeyCtx ctx(EVP_PKEY_CTX_new(key.get(), nullptr));
    size_t len = 0;
    if (!ctx || EVP_PKEY_encrypt_init(ctx.get()) != 1 ||
        EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_OAEP_PADDING) != 1 ||
        EVP_PKEY_CTX_set_rsa_oaep_md(ctx.get(), EVP_sha256()) != 1 ||
        EVP_PKEY_CTX_set_rsa_mgf1_md(ctx.get(), EVP_sha256()) != 1 ||
        EVP_PKEY_encrypt(ctx.get(), nullptr, &len, plaintext.data(), plaintext.size()) != 1) {
        fail(Errc::Crypto, "OAEP setup failed");
    }
    Bytes out(len);
    if (EVP_PKEY_encrypt(ctx.get(), out.data(), &len, plaintext.data(), plaintext.size()) != 1) {
        fail(Errc::Crypto, "OAEP encryption failed");
    }
    out.resize(len);
    return out;
}

Bytes oaep_decrypt(const PrivateKey& key, std::span<const std::uint8_t> ciphertext) {
    PkeyCtx ctx(EVP_PKEY_CTX_new(key.get(), nullptr));
    size_t len = 0;
    if (!ctx || EVP_PKEY_decrypt_init(ctx.get()) != 1 ||
        EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_OAEP_PADDING) != 1 ||
        EVP_PKEY_CTX_set_rsa_oaep_md(ctx.get(), EVP_sha256()) != 1 ||
        EVP_PKEY_CTX_set_rsa_mgf1_md(ctx.get(), EVP_sha256()) != 1 ||
        EVP_PKEY_decrypt(ctx.get(), nullptr, &len, ciphertext.data(), ciphertext.size()) != 1) {
        fail(Errc::DecryptFailed, "OAEP setup failed");
    }
    Bytes out(len);
    if (EVP_PKEY_decrypt(ctx.get(), out.data(), &len, ciphertext.data(), ciphertext.size()) != 1) {
        fail(Errc::DecryptFailed, "OAEP decryption failed");
    }
    out.resize(len);
    return out;
}

AeadBox aes256gcm_seal(std::span<const std::uint8_t> key, std::span<const std::uint8_t> plaintext) {
    if (key.size() != 32) throw Error(Errc::InvalidArgument, "AES-256 key must be 32 bytes");
    AeadBox box;
    box.iv = random_bytes(kGcmIvSize);
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    int len = 0;
    box.ciphertext.resize(plaintext.size() + kGcmTagSize);
    if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(kGcmIvSize), nullptr) != 1 ||
        EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), box.iv.data()) != 1 ||
        EVP_EncryptUpdate(ctx.get(), box.ciphertext.data(), &len, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1) {
        fail(Errc::Crypto, "AES-GCM encryption failed");
    }
    int tail = 0;
    if (EVP_EncryptFinal_ex(ctx.get(), box.ciphertext.data() + len, &tail) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, static_cast<int>(kGcmTagSize),
                            box.ciphertext.data() + plaintext.size()) != 1) {
        fail(Errc::Crypto, "AES-GCM finalisation failed");
    }
    return box;
}

Bytes aes256gcm_open(std::span<const std::uint8_t> key, const AeadBox& box) {
    if (key.size() != 32) throw Error(Errc::DecryptFailed, "content key must be 32 bytes");
    if (box.iv.size() != kGcmIvSize) throw Error(Errc::DecryptFailed, "IV must be 12 bytes");
    if (box.ciphertext.size() < kGcmTagSize) throw Error(Errc::DecryptFailed, "ciphertext shorter than the tag");
    const std::size_t body = box.ciphertext.size() - kGcmTagSize;
    Bytes tag(box.ciphertext.begin() + static_cast<std::ptrdiff_t>(body), box.ciphertext.end());
    Bytes out(body);
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    int len = 0;
    if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(kGcmIvSize), nullptr) != 1 ||
        EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), box.iv.data()) != 1 ||
        EVP_DecryptUpdate(ctx.get(), out.data(), &len, box.ciphertext.data(), static_cast<int>(body)) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, static_cast<int>(kGcmTagSize), tag.data()) != 1) {
        fail(Errc::DecryptFailed, "AES-GCM setup failed");
    }
    int tail = 0;
    if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &tail) != 1) {
        fail(Errc::DecryptFailed, "AES-GCM tag mismatch");
    }
    return out;
}

Bytes random_bytes(std::size_t count) {
    Bytes out(count);
    if (count > 0 && RAND_bytes(out.data(), static_cast<int>(count)) != 1) fail(Errc::Crypto, "RAND_bytes failed");
    return out;
}

std::string sha256_hex(std::span<const std::uint8_t> data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        fail(Errc::Crypto, "SHA-256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0x0f]);
    }
    return out;
}

}  // namespace xrf::crypto
