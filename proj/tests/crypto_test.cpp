#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "support/fixtures.hpp"
#include "support/mutation.hpp"
#include "xrf/core/error.hpp"
#include "xrf/crypto/base64.hpp"
#include "xrf/crypto/challenge.hpp"
#include "xrf/crypto/jwt.hpp"
#include "xrf/crypto/rsa.hpp"
#include "xrf/crypto/trust_store.hpp"

namespace xrf::crypto {
namespace {

using xrf::testing::mutate;
using xrf::testing::mutate_inner;
using xrf::testing::test_key;

Bytes from_hex(std::string_view hex) {
    Bytes out;
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        out.push_back(static_cast<std::uint8_t>(std::stoi(std::string(hex.substr(i, 2)), nullptr, 16)));
    }
    return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    return Json::parse(in);
}

Errc error_code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return Errc::Io;
}

// RFC 4648 section 10.
TEST(Base64, Rfc4648Vectors) {
    const std::vector<std::pair<std::string, std::string>> vectors{
        {"", ""},         {"f", "Zg=="},         {"fo", "Zm8="},       {"foo", "Zm9v"},
        {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="}, {"foobar", "Zm9vYmFy"}};
    for (const auto& [plain, encoded] : vectors) {
        EXPECT_EQ(base64_encode(to_bytes(plain)), encoded);
        auto decoded = base64_decode(encoded);
        ASSERT_TRUE(decoded);
        EXPECT_EQ(to_string(*decoded), plain);
    }
}

TEST(Base64, StrictDecodingRejectsNonCanonicalInput) {
    for (const char* bad : {"Zg", "Zg=", "Zm9v\n", "Zm9 v", "Zh==", "Zm9=", "Z===", "@@@@", "Zg==Zg=="}) {
        EXPECT_FALSE(base64_decode(bad)) << bad;
    }
}

TEST(Base64Url, UnpaddedUrlAlphabet) {
    const Bytes data{0xfb, 0xff, 0xbf};
    EXPECT_EQ(base64url_encode(data), "-_-_");
    EXPECT_EQ(base64url_encode(to_bytes("f")), "Zg");
    EXPECT_EQ(*base64url_decode("Zm8"), to_bytes("fo"));
    EXPECT_FALSE(base64url_decode("Zg=="));
    EXPECT_FALSE(base64url_decode("Zh"));
    EXPECT_FALSE(base64url_decode("+/+/"));
    EXPECT_FALSE(base64url_decode("Z"));
}

TEST(Base64Url, RandomRoundTrip) {
    std::mt19937 rng(3);
    for (int i = 0; i < 200; ++i) {
        Bytes data(rng() % 64);
        for (auto& b : data) b = static_cast<std::uint8_t>(rng());
        EXPECT_EQ(*base64url_decode(base64url_encode(data)), data);
        EXPECT_EQ(*base64_decode(base64_encode(data)), data);
    }
}

TEST(Digest, Sha256Abc) {
    EXPECT_EQ(sha256_hex(to_bytes("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

// McGrew and Viega GCM test cases 13 and 14 (AES-256, zero key and IV).
TEST(Aead, GcmKnownAnswers) {
    const Bytes key(32, 0);
    const AeadBox empty{Bytes(12, 0), from_hex("530f8afbc74536b9a963b4f1c4cb738b")};
    EXPECT_TRUE(aes256gcm_open(key, empty).empty());
    const AeadBox block{Bytes(12, 0), from_hex("cea7403d4d606b6e074ec5d3baf39d18d0d1c8a799996bf0265b98b5d48ab919")};
    EXPECT_EQ(aes256gcm_open(key, block), Bytes(16, 0));
}

TEST(Aead, TamperFailsAuthentication) {
    const auto key = random_bytes(32);
    auto box = aes256gcm_seal(key, to_bytes("hello"));
    EXPECT_EQ(box.iv.size(), 12u);
    EXPECT_EQ(to_string(aes256gcm_open(key, box)), "hello");
    box.ciphertext[0] ^= 1;
    EXPECT_EQ(error_code_of([&] { aes256gcm_open(key, box); }), Errc::DecryptFailed);
}

TEST(Rsa, KeysAreAtLeast2048Bits) {
    EXPECT_EQ(test_key(1).bits(), 2048);
    EXPECT_THROW(PrivateKey::generate(1024), Error);
}

TEST(Rsa, GenerateKeypairGivesDistinctKids) {
    const auto a = generate_keypair();
    const auto b = generate_keypair();
    EXPECT_NE(a.kid, b.kid);
    EXPECT_FALSE(a.public_key == b.public_key);
    EXPECT_TRUE(a.public_key == a.private_key.public_key());
}

TEST(Rsa, SignVerify) {
    const auto msg = to_bytes("message");
    const auto sig = sign_sha256(test_key(1), msg);
    EXPECT_EQ(sig.size(), 256u);
    EXPECT_TRUE(verify_sha256(test_key(1).public_key(), msg, sig));
    EXPECT_FALSE(verify_sha256(test_key(2).public_key(), msg, sig));
    EXPECT_FALSE(verify_sha256(test_key(1).public_key(), to_bytes("messagf"), sig));
}

TEST(Rsa, OaepRoundTripAndWrongKey) {
    const auto secret = random_bytes(32);
    const auto ct = oaep_encrypt(test_key(1).public_key(), secret);
    EXPECT_EQ(oaep_decrypt(test_key(1), ct), secret);
    EXPECT_EQ(error_code_of([&] { oaep_decrypt(test_key(2), ct); }), Errc::DecryptFailed);
}

TEST(Rsa, PemRoundTrip) {
    const auto& key = test_key(1);
    const auto again = PrivateKey::from_pem(key.to_pem());
    EXPECT_TRUE(again.public_key() == key.public_key());
    EXPECT_NE(key.to_pem().find("BEGIN PRIVATE KEY"), std::string::npos);
    EXPECT_TRUE(PublicKey::from_pem(key.public_key().to_pem()) == key.public_key());
    EXPECT_THROW(PrivateKey::from_pem("garbage"), Error);
    EXPECT_THROW(PublicKey::from_pem("garbage"), Error);
}

// Signature produced by the Python `cryptography` package over bytes 0..31.
TEST(Rsa, VerifiesIndependentSignature) {
    const auto kat = read_json(std::filesystem::path(XRF_TEST_DATA_DIR) / "kat_rs256.json");
    const auto key = PrivateKey::load(std::filesystem::path(XRF_TEST_DATA_DIR) / "kat_key.pem");
    const auto nonce = from_hex(kat.at("nonce_hex").get<std::string>());
    const auto sig = *base64_decode(kat.at("nonce_sig_b64").get<std::string>());
    EXPECT_TRUE(verify_sha256(key.public_key(), nonce, sig));
    // PKCS#1 v1.5 is deterministic, so our signature must be byte-identical.
    EXPECT_EQ(sign_sha256(key, nonce), sig);
}

TEST(Challenge, MutualAuthRoundTripRecoversNonce) {
    const auto& client = test_key(1);
    const auto& server = test_key(2);
    const auto m = generate_nonce();
    ASSERT_EQ(m.size(), kNonceSize);
    const auto envelope = build_challenge(m, client, server.public_key());
    const auto recovered = open_challenge(envelope, server, client.public_key());
    EXPECT_EQ(recovered, m);
    const auto counter = build_counter(recovered, server, client.public_key());
    EXPECT_TRUE(verify_counter(counter, client, server.public_key(), m));
    EXPECT_FALSE(verify_counter(counter, client, server.public_key(), generate_nonce()));
    EXPECT_FALSE(verify_counter(counter, client, test_key(3).public_key(), m));
}

TEST(Challenge, EnvelopeShape) {
    const auto envelope = build_challenge(generate_nonce(), test_key(1), test_key(2).public_key());
    const auto outer = base64_decode(envelope.payload);
    ASSERT_TRUE(outer);
    const auto doc = Json::parse(to_string(*outer));
    EXPECT_TRUE(doc.at("ek").is_string());
    EXPECT_TRUE(doc.at("iv").is_string());
    EXPECT_TRUE(doc.at("ct").is_string());
    EXPECT_EQ(base64_decode(doc.at("ek").get<std::string>())->size(), 256u);
}

TEST(Challenge, ErrorsAreDistinguished) {
    const auto& client = test_key(1);
    const auto& server = test_key(2);
    const auto envelope = build_challenge(generate_nonce(), client, server.public_key());
    EXPECT_EQ(error_code_of([&] { open_challenge(envelope, test_key(3), client.public_key()); }), Errc::DecryptFailed);
    EXPECT_EQ(error_code_of([&] { open_challenge(envelope, server, test_key(3).public_key()); }),
              Errc::SignatureInvalid);
    EXPECT_EQ(error_code_of([&] { open_challenge(ChallengeEnvelope{"%%%"}, server, client.public_key()); }),
              Errc::Malformed);
    EXPECT_EQ(error_code_of([&] { build_challenge(Bytes(16), client, server.public_key()); }), Errc::InvalidArgument);
}

// Opens a challenge built by the Python oracle: the inner JSON and the
// hybrid construction come from an independent implementation.
TEST(Challenge, OpensOracleEnvelope) {
    const auto path = std::filesystem::path(XRF_TEST_DATA_DIR) / "kat_challenge.json";
    const auto kat = read_json(path);
    const auto recipient = PrivateKey::load(std::filesystem::path(XRF_TEST_DATA_DIR) / "kat_key.pem");
    const auto sender = PublicKey::from_pem(kat.at("sender_public_pem").get<std::string>());
    const auto nonce = open_challenge(ChallengeEnvelope{kat.at("envelope").get<std::string>()}, recipient, sender);
    EXPECT_EQ(to_hex(nonce), kat.at("nonce_hex").get<std::string>());
}

TEST(Challenge, MutationFuzzHasNoFalseAccepts) {
    std::mt19937 rng(1000);
    const auto& client = test_key(1);
    const auto& server = test_key(2);
    const auto m = generate_nonce();
    const auto original = build_challenge(m, client, server.public_key());
    int accepted = 0;
    for (int i = 0; i < 1000; ++i) {
        const std::string mutated = i % 2 ? mutate(original.payload, rng) : mutate_inner(original.payload, rng);
        if (mutated == original.payload) continue;
        try {
            open_challenge(ChallengeEnvelope{mutated}, server, client.public_key());
            ++accepted;
        } catch (const Error&) {
        }
        if (verify_counter(ChallengeEnvelope{mutated}, server, client.public_key(), m)) ++accepted;
    }
    EXPECT_EQ(accepted, 0);
}

TokenClaims claims_for(const Uuid& sub, const Uuid& aud, UnixSeconds exp) {
    return TokenClaims{"xrf", sub, aud, Scope::Read, exp, "/metrics"};
}

KeyPair pair_of(std::size_t index) {
    return KeyPair{Uuid::random(), test_key(index), test_key(index).public_key()};
}

TEST(Jwt, IssueAndVerify) {
    const auto key = pair_of(5);
    const auto sub = Uuid::random();
    const auto aud = Uuid::random();
    const auto token = issue_jwt(claims_for(sub, aud, 2000), key, 1000);
    EXPECT_EQ(std::count(token.compact.begin(), token.compact.end(), '.'), 2);
    EXPECT_EQ(decode_header(token).kid, key.kid);
    const auto claims = verify_jwt(token, key.public_key, aud, 1999);
    EXPECT_EQ(claims.sub, sub);
    EXPECT_EQ(claims.aud, aud);
    EXPECT_EQ(claims.endpoint, "/metrics");
}

TEST(Jwt, ExpiryBoundaryAndAudience) {
    const auto key = pair_of(5);
    const auto aud = Uuid::random();
    const auto token = issue_jwt(claims_for(Uuid::random(), aud, 2000), key, 1000);
    EXPECT_EQ(error_code_of([&] { verify_jwt(token, key.public_key, aud, 2000); }), Errc::Expired);
    EXPECT_EQ(error_code_of([&] { verify_jwt(token, key.public_key, Uuid::random(), 1500); }), Errc::AudienceMismatch);
    EXPECT_EQ(error_code_of([&] { verify_jwt(token, test_key(6).public_key(), aud, 1500); }), Errc::SignatureInvalid);
    EXPECT_NO_THROW(verify_jwt(token, key.public_key, std::nullopt, 1500));
}

TEST(Jwt, RefusesToIssueInvalidClaims) {
    const auto key = pair_of(5);
    const auto id = Uuid::random();
    EXPECT_THROW(issue_jwt(claims_for(id, id, 2000), key, 1000), Error);
    EXPECT_THROW(issue_jwt(claims_for(Uuid::random(), Uuid::random(), 1000), key, 1000), Error);
}

TEST(Jwt, HeaderChecks) {
    EXPECT_EQ(error_code_of([&] { decode_header(SignedToken{"abc"}); }), Errc::Malformed);
    EXPECT_EQ(error_code_of([&] { decode_header(SignedToken{"a.b.c.d"}); }), Errc::Malformed);
    const auto none_header = base64url_encode(to_bytes(R"({"alg":"none","kid":"x","typ":"JWT"})"));
    EXPECT_EQ(error_code_of([&] { decode_header(SignedToken{none_header + ".e30.AA"}); }), Errc::Malformed);
}

// Token and key produced by the Python oracle with `cryptography`.
TEST(Jwt, MatchesOracleToken) {
    const auto kat = read_json(std::filesystem::path(XRF_TEST_DATA_DIR) / "kat_rs256.json");
    const auto key = PrivateKey::load(std::filesystem::path(XRF_TEST_DATA_DIR) / "kat_key.pem");
    const Uuid kid = Uuid::from_string(kat["header"]["kid"].get<std::string>());
    const auto claims = kat["claims"].get<TokenClaims>();
    const SignedToken oracle{kat["token"].get<std::string>()};

    const auto jwk = jwks_entry(kid, key.public_key());
    EXPECT_EQ(jwk["n"], kat["jwk_n"]);
    EXPECT_EQ(jwk["e"], kat["jwk_e"]);
    EXPECT_EQ(jwk["kty"], "RSA");
    EXPECT_EQ(jwk["alg"], "RS256");

    const auto rebuilt = public_key_from_jwk(jwk);
    EXPECT_EQ(verify_jwt(oracle, rebuilt, claims.aud, claims.exp - 1), claims);
    EXPECT_EQ(issue_jwt(claims, KeyPair{kid, key, key.public_key()}, claims.exp - 300), oracle);
}

TEST(Jwt, MutationFuzzHasNoFalseAccepts) {
    std::mt19937 rng(4242);
    const auto key = pair_of(5);
    const auto aud = Uuid::random();
    const auto token = issue_jwt(claims_for(Uuid::random(), aud, 5000), key, 1000);
    int accepted = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto mutated = mutate(token.compact, rng);
        if (mutated == token.compact) continue;
        try {
            verify_jwt(SignedToken{mutated}, key.public_key, aud, 2000);
            ++accepted;
        } catch (const Error&) {
        }
    }
    EXPECT_EQ(accepted, 0);
}

TEST(Jwks, EntryAndLookup) {
    const auto a = pair_of(5);
    const auto b = pair_of(6);
    const Json set{{"keys", Json::array({jwks_entry(a), jwks_entry(b)})}};
    auto found = find_jwk(set, b.kid);
    ASSERT_TRUE(found);
    EXPECT_TRUE(public_key_from_jwk(*found) == b.public_key);
    EXPECT_FALSE(find_jwk(set, Uuid::random()));
    EXPECT_FALSE(find_jwk(Json::object(), a.kid));
    EXPECT_THROW(public_key_from_jwk(Json{{"kty", "EC"}}), Error);
    EXPECT_THROW(public_key_from_jwk(Json{{"kty", "RSA"}, {"n", "!!"}, {"e", "AQAB"}}), Error);
}

TEST(TrustStoreFile, SaveAndLoad) {
    TrustStore store;
    const auto a = Uuid::random();
    store.insert(a, test_key(1).public_key());
    const auto path = std::filesystem::temp_directory_path() / ("trust-" + Uuid::random().str() + ".json");
    store.save(path);
    const auto loaded = TrustStore::load(path);
    std::filesystem::remove(path);
    EXPECT_EQ(loaded.size(), 1u);
    ASSERT_TRUE(loaded.find(a));
    EXPECT_TRUE(*loaded.find(a) == test_key(1).public_key());
    EXPECT_FALSE(loaded.find(Uuid::random()));
    EXPECT_THROW(TrustStore::from_json(Json{{"not-a-uuid", "pem"}}), Error);
    EXPECT_THROW(TrustStore::load("/nonexistent/trust.json"), Error);
}

}  // namespace
}  // namespace xrf::crypto
