// Prints tokens, JWKS entries and a challenge produced by the library as one
// JSON document, for cross_check.py to verify with an independent stack.
#include <filesystem>
#include <iostream>

#include "support/fixtures.hpp"
#include "xrf/crypto/base64.hpp"
#include "xrf/crypto/challenge.hpp"
#include "xrf/crypto/jwt.hpp"

using namespace xrf;

int main() {
    const auto recipient = crypto::PrivateKey::load(std::filesystem::path(XRF_TEST_DATA_DIR) / "kat_key.pem");
    const auto& sender = testing::test_key(1);

    Json tokens = Json::array();
    for (std::size_t i = 0; i < 3; ++i) {
        const crypto::KeyPair pair{Uuid::random(), testing::test_key(10 + i), testing::test_key(10 + i).public_key()};
        const TokenClaims claims{"xrf", Uuid::random(), Uuid::random(), i % 2 ? Scope::Write : Scope::Read,
                                 unix_now() + 300, i % 2 ? "/control" : "/metrics"};
        tokens.push_back({{"token", crypto::issue_jwt(claims, pair).compact},
                          {"jwks", Json{{"keys", Json::array({crypto::jwks_entry(pair)})}}},
                          {"claims", claims}});
    }

    const auto nonce = crypto::generate_nonce();
    std::string hex;
    for (auto b : nonce) {
        static const char* digits = "0123456789abcdef";
        hex.push_back(digits[b >> 4]);
        hex.push_back(digits[b & 0xf]);
    }
    std::cout << Json{{"tokens", tokens},
                      {"challenge",
                       {{"envelope", crypto::build_challenge(nonce, sender, recipient.public_key()).payload},
                        {"nonce_hex", hex},
                        {"sender_public_pem", sender.public_key().to_pem()}}}}
                     .dump()
              << '\n';
}
