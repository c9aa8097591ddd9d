#pragma once

#include "xrf/core/error.hpp"

namespace xrf::wire {

inline constexpr const char* kInitialAuthentication = "/initialAuthentication";
inline constexpr const char* kRegistration = "/registrationHandler";
inline constexpr const char* kProfileUpdateHandler = "/profileUpdateHandler";
inline constexpr const char* kDiscovery = "/xAppDiscoveryHandler";
inline constexpr const char* kAccessToken = "/accessTokenRequest";
inline constexpr const char* kIntrospection = "/tokenIntrospection";
inline constexpr const char* kJwks = "/jwksRequestHandler";

/// Client-side listener paths.
inline constexpr const char* kProfileUpdate = "/profileUpdate";
inline constexpr const char* kMetrics = "/metrics";
inline constexpr const char* kControl = "/control";

/// Carries the session credential handed out by initial authentication.
inline constexpr const char* kSessionHeader = "X-XRF-Session";

int http_status(Errc code) noexcept;

/// Inverse used by clients to turn an error body back into an Errc.
Errc errc_from_name(std::string_view name, Errc fallback) noexcept;

}  // namespace xrf::wire
