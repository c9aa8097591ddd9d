#include "xrf/core/model.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

#include "xrf/core/error.hpp"

namespace xrf {
namespace {

/// Counts UTF-8 code points; continuation bytes are not counted.
std::size_t utf8_length(std::string_view text) {
    return static_cast<std::size_t>(
        std::count_if(text.begin(), text.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xc0) != 0x80; }));
}

template <typename T>
T required(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw Error(Errc::Malformed, std::string("missing field '") + key + "'");
    try {
        return it->get<T>();
    } catch (const Json::exception&) {
        throw Error(Errc::Malformed, std::string("field '") + key + "' has the wrong type");
    }
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(Errc::Malformed, path.string() + ": " + e.what());
    }
}

}  // namespace

UnixSeconds unix_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::string_view to_string(Scope scope) noexcept {
    return scope == Scope::Read ? "read" : "write";
}

std::optional<Scope> parse_scope(std::string_view text) {
    if (text == "read") return Scope::Read;
    if (text == "write") return Scope::Write;
    return std::nullopt;
}

std::string_view to_string(XAppStatus status) noexcept {
    switch (status) {
        case XAppStatus::Registering: return "REGISTERING";
        case XAppStatus::Available: return "AVAILABLE";
        case XAppStatus::Suspended: return "SUSPENDED";
        case XAppStatus::Deregistered: return "DEREGISTERED";
    }
    return "REGISTERING";
}

std::optional<XAppStatus> parse_status(std::string_view text) {
    if (text == "REGISTERING") return XAppStatus::Registering;
    if (text == "AVAILABLE") return XAppStatus::Available;
    if (text == "SUSPENDED") return XAppStatus::Suspended;
    if (text == "DEREGISTERED") return XAppStatus::Deregistered;
    return std::nullopt;
}

OfferingVocabulary OfferingVocabulary::load(const std::filesystem::path& path) {
    return from_json(read_json_file(path));
}

OfferingVocabulary OfferingVocabulary::from_json(const Json& doc) {
    if (!doc.is_array()) throw Error(Errc::Malformed, "offering vocabulary must be a JSON array");
    std::set<std::string> codes;
    for (const auto& item : doc) {
        if (!item.is_string() || item.get_ref<const std::string&>().empty()) {
            throw Error(Errc::Malformed, "offering codes must be non-empty strings");
        }
        codes.insert(item.get<std::string>());
    }
    return OfferingVocabulary(std::move(codes));
}

bool OfferingVocabulary::contains(std::string_view code) const {
    return codes_.find(std::string(code)) != codes_.end();
}

void to_json(Json& j, const XAppProfile& profile) {
    j = Json{{"xAppInstanceID", profile.instance_id.str()},
             {"xAppInstanceName", profile.name},
             {"xAppOffering", profile.offering},
             {"xAppStatus", to_string(profile.status)},
             {"xAppLocation", profile.location},
             {"xAppLoad", profile.load},
             {"endpointAddress", profile.endpoint_address}};
}

void from_json(const Json& j, XAppProfile& profile) {
    if (!j.is_object()) throw Error(Errc::Malformed, "profile must be a JSON object");
    XAppProfile out;
    out.instance_id = Uuid::from_string(required<std::string>(j, "xAppInstanceID"));
    out.name = required<std::string>(j, "xAppInstanceName");
    out.offering = required<std::string>(j, "xAppOffering");
    const auto status = required<std::string>(j, "xAppStatus");
    auto parsed = parse_status(status);
    if (!parsed) throw Error(Errc::Malformed, "unknown xAppStatus '" + status + "'");
    out.status = *parsed;
    out.location = required<std::string>(j, "xAppLocation");
    out.load = required<std::int64_t>(j, "xAppLoad");
    out.endpoint_address = required<std::string>(j, "endpointAddress");
    profile = std::move(out);
}

void validate_profile(const XAppProfile& profile) {
    const auto name_length = utf8_length(profile.name);
    if (name_length < 1 || name_length > 128) {
        throw Error(Errc::InvalidArgument, "xAppInstanceName must be 1-128 characters");
    }
    if (profile.offering.empty()) throw Error(Errc::InvalidArgument, "xAppOffering is empty");
    if (profile.location.empty()) throw Error(Errc::InvalidArgument, "xAppLocation is empty");
    if (profile.load < 0) throw Error(Errc::InvalidArgument, "xAppLoad is negative");
    if (profile.endpoint_address.empty()) throw Error(Errc::InvalidArgument, "endpointAddress is empty");
    if (profile.instance_id.is_nil()) throw Error(Errc::InvalidArgument, "xAppInstanceID is nil");
}

XAppProfile new_profile(std::string_view name, std::string_view offering, std::string_view location,
                        std::string_view endpoint_address, const OfferingVocabulary& vocabulary) {
    if (!vocabulary.contains(offering)) {
        throw Error(Errc::InvalidArgument, "offering '" + std::string(offering) + "' is not in the vocabulary");
    }
    XAppProfile profile;
    profile.instance_id = Uuid::random();
    profile.name = std::string(name);
    profile.offering = std::string(offering);
    profile.location = std::string(location);
    profile.endpoint_address = std::string(endpoint_address);
    validate_profile(profile);
    return profile;
}

void to_json(Json& j, const TokenClaims& claims) {
    j = Json{{"iss", claims.iss},
             {"sub", claims.sub.str()},
             {"aud", claims.aud.str()},
             {"scope", to_string(claims.scope)},
             {"exp", claims.exp},
             {"endpoint", claims.endpoint}};
}

void from_json(const Json& j, TokenClaims& claims) {
    if (!j.is_object()) throw Error(Errc::Malformed, "claims must be a JSON object");
    TokenClaims out;
    out.iss = required<std::string>(j, "iss");
    out.sub = Uuid::from_string(required<std::string>(j, "sub"));
    out.aud = Uuid::from_string(required<std::string>(j, "aud"));
    const auto scope = required<std::string>(j, "scope");
    auto parsed = parse_scope(scope);
    if (!parsed) throw Error(Errc::Malformed, "unknown scope '" + scope + "'");
    out.scope = *parsed;
    out.exp = required<std::int64_t>(j, "exp");
    out.endpoint = required<std::string>(j, "endpoint");
    claims = std::move(out);
}

void validate_claims(const TokenClaims& claims, UnixSeconds issued_at) {
    if (claims.exp <= issued_at) throw Error(Errc::InvalidArgument, "exp must be after the issuance time");
    if (claims.sub == claims.aud) throw Error(Errc::InvalidArgument, "sub and aud must differ");
    if (claims.iss.empty()) throw Error(Errc::InvalidArgument, "iss is empty");
}

PermissionsMatrix PermissionsMatrix::load(const std::filesystem::path& path) {
    return from_json(read_json_file(path));
}

PermissionsMatrix PermissionsMatrix::from_json(const Json& doc) {
    if (!doc.is_object()) throw Error(Errc::Malformed, "permissions matrix must be a JSON object");
    PermissionsMatrix matrix;
    for (const auto& [offering, entries] : doc.items()) {
        if (!entries.is_array()) throw Error(Errc::Malformed, "rules for '" + offering + "' must be an array");
        auto& rules = matrix.rules[offering];
        for (const auto& entry : entries) {
            EndpointRule rule;
            rule.endpoint = required<std::string>(entry, "endpoint");
            for (const auto& s : required<std::vector<std::string>>(entry, "scopes")) {
                auto scope = parse_scope(s);
                if (!scope) throw Error(Errc::Malformed, "unknown scope '" + s + "' in permissions matrix");
                rule.scopes.insert(*scope);
            }
            rules.push_back(std::move(rule));
        }
    }
    return matrix;
}

bool scope_allowed(const PermissionsMatrix& matrix, std::string_view offering, std::string_view endpoint,
                   Scope scope) {
    auto it = matrix.rules.find(offering);
    if (it == matrix.rules.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(), [&](const EndpointRule& rule) {
        return rule.endpoint == endpoint && rule.scopes.contains(scope);
    });
}

const XAppProfile& select_provider(std::span<const XAppProfile> candidates) {
    if (candidates.empty()) throw Error(Errc::NoCandidate, "no candidate providers");
    const auto* best = &candidates.front();
    for (const auto& candidate : candidates.subspan(1)) {
        if (candidate.load < best->load ||
            (candidate.load == best->load && candidate.instance_id.str() < best->instance_id.str())) {
            best = &candidate;
        }
    }
    return *best;
}

}  // namespace xrf
