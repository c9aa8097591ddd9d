#include "xrf/server/registry.hpp"

#include <algorithm>
#include <mutex>

#include "xrf/core/error.hpp"

namespace xrf::server {

Registry::Registry(RegistryOptions options, crypto::PrivateKey server_key, crypto::TrustStore trust,
                   OfferingVocabulary vocabulary, PermissionsMatrix permissions, std::shared_ptr<KeySource> keys)
    : options_(std::move(options)),
      server_key_(std::move(server_key)),
      trust_(std::move(trust)),
      vocabulary_(std::move(vocabulary)),
      keys_(std::move(keys)),
      permissions_(std::move(permissions)) {
    if (options_.token_ttl <= 0) throw Error(Errc::InvalidArgument, "token TTL must be positive");
    if (!server_key_.valid()) throw Error(Errc::InvalidArgument, "server key is missing");
    if (!keys_) throw Error(Errc::InvalidArgument, "key source is missing");
}

AuthResult Registry::authenticate(const Uuid& principal, const crypto::ChallengeEnvelope& challenge, UnixSeconds now) {
    auto peer = trust_.find(principal);
    if (!peer) throw Error(Errc::UnknownPrincipal, "principal " + principal.str() + " is not in the trust store");

    const auto nonce = crypto::open_challenge(challenge, server_key_, *peer);
    AuthResult result;
    result.counter = crypto::build_counter(nonce, server_key_, *peer);
    result.session = crypto::base64url_encode(crypto::random_bytes(32));
    result.session_expires = now + options_.session_ttl;

    std::unique_lock lock(mutex_);
    sessions_[result.session] = Session{principal, result.session_expires};
    return result;
}

Uuid Registry::session_principal(std::string_view session, UnixSeconds now) const {
    std::shared_lock lock(mutex_);
    return session_principal_locked(session, now);
}

Uuid Registry::session_principal_locked(std::string_view session, UnixSeconds now) const {
    auto it = sessions_.find(std::string(session));
    if (it == sessions_.end() || it->second.exp <= now) throw Error(Errc::Unauthenticated, "no valid session");
    return it->second.principal;
}

void Registry::register_profile(std::string_view session, XAppProfile profile, UnixSeconds now) {
    validate_profile(profile);
    if (!vocabulary_.contains(profile.offering)) {
        throw Error(Errc::InvalidArgument, "offering '" + profile.offering + "' is not in the vocabulary");
    }
    std::unique_lock lock(mutex_);
    const Uuid owner = session_principal_locked(session, now);
    profile.status = XAppStatus::Available;

    auto it = profiles_.find(profile.instance_id);
    if (it == profiles_.end()) {
        profile.load = 0;
        profiles_.emplace(profile.instance_id, Entry{std::move(profile), owner});
        return;
    }
    if (it->second.owner != owner) {
        throw Error(Errc::Conflict, "profile " + profile.instance_id.str() + " belongs to another principal");
    }
    profile.load = it->second.profile.load;
    it->second.profile = std::move(profile);
}

ProfileUpdateResult Registry::update_profile(std::string_view session, const Json& update, UnixSeconds now) {
    if (!update.is_object() || !update.contains("xAppInstanceID") || !update["xAppInstanceID"].is_string()) {
        throw Error(Errc::Malformed, "update must carry xAppInstanceID");
    }
    const Uuid target = Uuid::from_string(update["xAppInstanceID"].get<std::string>());

    std::unique_lock lock(mutex_);
    auto it = profiles_.find(target);
    if (it == profiles_.end()) throw Error(Errc::NotFound, "profile " + target.str() + " is not registered");
    const Uuid principal = session_principal_locked(session, now);
    if (it->second.owner != principal) throw Error(Errc::Forbidden, "profile is owned by another principal");

    XAppProfile merged = it->second.profile;
    auto text = [&](const char* key, std::string& field) {
        if (!update.contains(key)) return;
        if (!update[key].is_string()) throw Error(Errc::Malformed, std::string(key) + " must be a string");
        field = update[key].get<std::string>();
    };
    text("xAppInstanceName", merged.name);
    text("xAppOffering", merged.offering);
    text("xAppLocation", merged.location);
    text("endpointAddress", merged.endpoint_address);
    if (update.contains("xAppStatus")) {
        const auto& value = update["xAppStatus"];
        auto status = value.is_string() ? parse_status(value.get<std::string>()) : std::nullopt;
        if (!status) throw Error(Errc::Malformed, "unknown xAppStatus");
        merged.status = *status;
    }
    validate_profile(merged);
    if (!vocabulary_.contains(merged.offering)) {
        throw Error(Errc::InvalidArgument, "offering '" + merged.offering + "' is not in the vocabulary");
    }
    it->second.profile = merged;

    ProfileUpdateResult result;
    result.profile = std::move(merged);
    if (auto c = consumers_of_.find(target); c != consumers_of_.end()) {
        for (const auto& consumer : c->second) {
            if (auto p = profiles_.find(consumer); p != profiles_.end()) result.consumers.push_back(p->second.profile);
        }
    }
    return result;
}

std::vector<XAppProfile> Registry::discover(std::string_view offering, std::string_view location,
                                            std::optional<Uuid> requester) const {
    std::vector<XAppProfile> out;
    std::shared_lock lock(mutex_);
    for (const auto& [id, entry] : profiles_) {
        const auto& p = entry.profile;
        if (p.status != XAppStatus::Available || p.offering != offering || p.location != location) continue;
        if (requester && id == *requester) continue;
        out.push_back(p);
    }
    return out;
}

void Registry::check_token_request_locked(const Uuid& principal, const TokenRequest& request, UnixSeconds now) const {
    auto consumer = profiles_.find(request.consumer);
    if (consumer == profiles_.end()) throw Error(Errc::NotFound, "consumer " + request.consumer.str() + " unknown");
    auto provider = profiles_.find(request.provider);
    if (provider == profiles_.end()) throw Error(Errc::NotFound, "provider " + request.provider.str() + " unknown");
    if (consumer->second.owner != principal) throw Error(Errc::Forbidden, "consumer profile not owned by caller");
    if (request.consumer == request.provider) throw Error(Errc::InvalidArgument, "consumer and provider are equal");
    if (!scope_allowed(permissions_, provider->second.profile.offering, request.endpoint, request.scope)) {
        throw Error(Errc::Forbidden, "scope " + std::string(to_string(request.scope)) + " not allowed on " +
                                         request.endpoint);
    }
    if (is_exclusive(request.scope)) {
        auto grant = permissions_.exclusive_grants.find({request.provider, request.endpoint});
        if (grant != permissions_.exclusive_grants.end() && grant->second.exp > now) {
            throw Error(Errc::Conflict, "write access to " + request.endpoint + " is held by another consumer");
        }
    }
}

IssuedToken Registry::issue_token(std::string_view session, const TokenRequest& request, UnixSeconds now) {
    Uuid principal;
    {
        std::shared_lock lock(mutex_);
        principal = session_principal_locked(session, now);
        check_token_request_locked(principal, request, now);
    }

    crypto::KeyPair key = keys_->acquire();
    IssuedToken issued;
    issued.kid = key.kid;
    issued.claims = TokenClaims{options_.issuer, request.consumer, request.provider, request.scope,
                                now + options_.token_ttl, request.endpoint};
    {
        std::unique_lock lock(mutex_);
        expire_locked(now);
        try {
            session_principal_locked(session, now);
            check_token_request_locked(principal, request, now);
        } catch (...) {
            lock.unlock();
            keys_->recycle(std::move(key));
            throw;
        }
        if (is_exclusive(request.scope)) {
            permissions_.exclusive_grants[{request.provider, request.endpoint}] =
                ExclusiveGrant{request.consumer, issued.claims.exp, key.kid};
        }
        profiles_.at(request.provider).profile.load += 1;
        consumers_of_[request.provider].insert(request.consumer);
        expiry_queue_.emplace(issued.claims.exp, key.kid);
        tokens_.emplace(key.kid, TokenRecord{key, issued.claims, false});
    }
    try {
        issued.token = crypto::issue_jwt(issued.claims, key, now);
    } catch (...) {
        std::unique_lock lock(mutex_);
        if (auto it = tokens_.find(key.kid); it != tokens_.end()) {
            if (!it->second.released) release_locked(key.kid, it->second);
            tokens_.erase(it);
        }
        throw;
    }
    return issued;
}

Introspection Registry::introspect(const crypto::SignedToken& token, UnixSeconds now) const {
    const auto header = crypto::decode_header(token);
    crypto::PublicKey key;
    {
        std::shared_lock lock(mutex_);
        auto it = tokens_.find(header.kid);
        if (it == tokens_.end()) return {};
        key = it->second.key.public_key;
    }
    try {
        return Introspection{true, crypto::verify_jwt(token, key, std::nullopt, now)};
    } catch (const Error&) {
        return {};
    }
}

Json Registry::jwks(const Uuid& kid) const {
    std::shared_lock lock(mutex_);
    auto it = tokens_.find(kid);
    if (it == tokens_.end()) throw Error(Errc::NotFound, "unknown kid " + kid.str());
    return Json{{"keys", Json::array({crypto::jwks_entry(it->second.key)})}};
}

std::size_t Registry::expire_grants(UnixSeconds now) {
    std::unique_lock lock(mutex_);
    return expire_locked(now);
}

void Registry::release_locked(const Uuid& kid, TokenRecord& record) {
    record.released = true;
    const auto& claims = record.claims;
    if (is_exclusive(claims.scope)) {
        auto grant = permissions_.exclusive_grants.find({claims.aud, claims.endpoint});
        if (grant != permissions_.exclusive_grants.end() && grant->second.kid == kid) {
            permissions_.exclusive_grants.erase(grant);
        }
    }
    if (auto p = profiles_.find(claims.aud); p != profiles_.end()) {
        p->second.profile.load = std::max<std::int64_t>(0, p->second.profile.load - 1);
    }
}

std::size_t Registry::expire_locked(UnixSeconds now) {
    std::size_t released = 0;
    while (!expiry_queue_.empty() && expiry_queue_.begin()->first <= now) {
        const auto [exp, kid] = *expiry_queue_.begin();
        expiry_queue_.erase(expiry_queue_.begin());
        auto it = tokens_.find(kid);
        if (it == tokens_.end() || it->second.released) continue;
        release_locked(kid, it->second);
        purge_queue_.emplace(exp + options_.key_retention, kid);
        ++released;
    }
    while (!purge_queue_.empty() && purge_queue_.begin()->first <= now) {
        tokens_.erase(purge_queue_.begin()->second);
        purge_queue_.erase(purge_queue_.begin());
    }
    std::erase_if(sessions_, [now](const auto& item) { return item.second.exp <= now; });
    return released;
}

std::optional<XAppProfile> Registry::profile(const Uuid& id) const {
    std::shared_lock lock(mutex_);
    auto it = profiles_.find(id);
    if (it == profiles_.end()) return std::nullopt;
    return it->second.profile;
}

std::set<Uuid> Registry::consumers_of(const Uuid& provider) const {
    std::shared_lock lock(mutex_);
    auto it = consumers_of_.find(provider);
    return it == consumers_of_.end() ? std::set<Uuid>{} : it->second;
}

std::vector<XAppProfile> Registry::profiles() const {
    std::shared_lock lock(mutex_);
    std::vector<XAppProfile> out;
    out.reserve(profiles_.size());
    for (const auto& [id, entry] : profiles_) out.push_back(entry.profile);
    return out;
}

std::vector<TokenClaims> Registry::outstanding_tokens() const {
    std::shared_lock lock(mutex_);
    std::vector<TokenClaims> out;
    for (const auto& [kid, record] : tokens_) {
        if (!record.released) out.push_back(record.claims);
    }
    return out;
}

std::optional<ExclusiveGrant> Registry::grant(const Uuid& provider, const std::string& endpoint) const {
    std::shared_lock lock(mutex_);
    auto it = permissions_.exclusive_grants.find({provider, endpoint});
    if (it == permissions_.exclusive_grants.end()) return std::nullopt;
    return it->second;
}

std::size_t Registry::known_keys() const {
    std::shared_lock lock(mutex_);
    return tokens_.size();
}

}  // namespace xrf::server
