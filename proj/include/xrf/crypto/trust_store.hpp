#pragma once

#include <filesystem>
#include <map>
#include <optional>

#include "xrf/core/model.hpp"
#include "xrf/crypto/rsa.hpp"

namespace xrf::crypto {

/// Principal id -> RSA public key. On disk: a flat JSON object mapping the
/// UUID text to the PEM-encoded SubjectPublicKeyInfo.
class TrustStore {
public:
    static TrustStore load(const std::filesystem::path& path);
    static TrustStore from_json(const Json& doc);

    Json to_json() const;
    void save(const std::filesystem::path& path) const;

    void insert(const Uuid& principal, PublicKey key);
    std::optional<PublicKey> find(const Uuid& principal) const;
    bool contains(const Uuid& principal) const { return keys_.contains(principal); }
    std::size_t size() const noexcept { return keys_.size(); }

private:
    std::map<Uuid, PublicKey> keys_;
};

}  // namespace xrf::crypto
