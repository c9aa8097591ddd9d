#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "xrf/core/uuid.hpp"

namespace xrf {

using Json = nlohmann::json;

/// Unix time in whole seconds.
using UnixSeconds = std::int64_t;

UnixSeconds unix_now();

enum class Scope { Read, Write };

std::string_view to_string(Scope scope) noexcept;
std::optional<Scope> parse_scope(std::string_view text);

enum class XAppStatus { Registering, Available, Suspended, Deregistered };

std::string_view to_string(XAppStatus status) noexcept;
std::optional<XAppStatus> parse_status(std::string_view text);

/// Closed set of offering codes accepted by a registry.
class OfferingVocabulary {
public:
    OfferingVocabulary() = default;
    explicit OfferingVocabulary(std::set<std::string> codes) : codes_(std::move(codes)) {}

    /// Reads a JSON array of strings.
    static OfferingVocabulary load(const std::filesystem::path& path);
    static OfferingVocabulary from_json(const Json& doc);

    bool contains(std::string_view code) const;
    const std::set<std::string>& codes() const noexcept { return codes_; }

private:
    std::set<std::string> codes_;
};

/// Registry record for one xApp instance.
struct XAppProfile {
    Uuid instance_id;
    std::string name;
    std::string offering;
    XAppStatus status = XAppStatus::Registering;
    std::string location;
    std::int64_t load = 0;
    std::string endpoint_address;

    friend bool operator==(const XAppProfile&, const XAppProfile&) = default;
};

void to_json(Json& j, const XAppProfile& profile);
/// Strict parse: every field present and well-typed. Throws Error(Malformed).
void from_json(const Json& j, XAppProfile& profile);

/// Structural checks that do not need a vocabulary: name length, load sign,
/// non-empty location and address. Throws Error(InvalidArgument).
void validate_profile(const XAppProfile& profile);

XAppProfile new_profile(std::string_view name, std::string_view offering, std::string_view location,
                        std::string_view endpoint_address, const OfferingVocabulary& vocabulary);

struct TokenHeader {
    std::string alg = "RS256";
    std::string typ = "JWT";
    Uuid kid;

    friend bool operator==(const TokenHeader&, const TokenHeader&) = default;
};

struct TokenClaims {
    std::string iss;
    Uuid sub;
    Uuid aud;
    Scope scope = Scope::Read;
    UnixSeconds exp = 0;
    std::string endpoint;

    friend bool operator==(const TokenClaims&, const TokenClaims&) = default;
};

void to_json(Json& j, const TokenClaims& claims);
void from_json(const Json& j, TokenClaims& claims);

/// Throws Error(InvalidArgument) unless exp > issued_at and sub != aud.
void validate_claims(const TokenClaims& claims, UnixSeconds issued_at);

struct EndpointRule {
    std::string endpoint;
    std::set<Scope> scopes;
};

struct ExclusiveGrant {
    Uuid consumer;
    UnixSeconds exp = 0;
    Uuid kid;
};

/// Offering-code -> endpoint -> allowed scopes, plus the outstanding WRITE
/// grants. Grants are keyed by (provider, endpoint); at most one per key.
struct PermissionsMatrix {
    std::map<std::string, std::vector<EndpointRule>, std::less<>> rules;
    std::map<std::pair<Uuid, std::string>, ExclusiveGrant> exclusive_grants;

    /// {"KPIMON": [{"endpoint": "/metrics", "scopes": ["read"]}], ...}
    static PermissionsMatrix load(const std::filesystem::path& path);
    static PermissionsMatrix from_json(const Json& doc);
};

bool scope_allowed(const PermissionsMatrix& matrix, std::string_view offering, std::string_view endpoint,
                   Scope scope);

/// Scope that must be exclusive per (provider, endpoint).
constexpr bool is_exclusive(Scope scope) noexcept { return scope == Scope::Write; }

/// Least-loaded candidate, ties broken by the smaller instance id.
/// Throws Error(NoCandidate) on an empty list.
const XAppProfile& select_provider(std::span<const XAppProfile> candidates);

}  // namespace xrf
