#include "xrf/crypto/trust_store.hpp"

#include <fstream>

#include "xrf/core/error.hpp"

namespace xrf::crypto {

TrustStore TrustStore::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open trust store " + path.string());
    Json doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw Error(Errc::Malformed, path.string() + " is not valid JSON");
    return from_json(doc);
}

TrustStore TrustStore::from_json(const Json& doc) {
    if (!doc.is_object()) throw Error(Errc::Malformed, "trust store must be a JSON object");
    TrustStore store;
    for (const auto& [id, pem] : doc.items()) {
        if (!pem.is_string()) throw Error(Errc::Malformed, "trust store entry for " + id + " is not a PEM string");
        store.insert(Uuid::from_string(id), PublicKey::from_pem(pem.get<std::string>()));
    }
    return store;
}

Json TrustStore::to_json() const {
    Json doc = Json::object();
    for (const auto& [id, key] : keys_) doc[id.str()] = key.to_pem();
    return doc;
}

void TrustStore::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error(Errc::Io, "cannot write trust store " + path.string());
    out << to_json().dump(2) << '\n';
    if (!out) throw Error(Errc::Io, "short write on " + path.string());
}

void TrustStore::insert(const Uuid& principal, PublicKey key) { keys_.insert_or_assign(principal, std::move(key)); }

std::optional<PublicKey> TrustStore::find(const Uuid& principal) const {
    auto it = keys_.find(principal);
    if (it == keys_.end()) return std::nullopt;
    return it->second;
}

}  // namespace xrf::crypto
