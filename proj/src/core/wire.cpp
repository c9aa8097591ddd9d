#include "xrf/core/wire.hpp"

#include <array>

namespace xrf::wire {

int http_status(Errc code) noexcept {
    switch (code) {
        case Errc::InvalidArgument:
        case Errc::Malformed: return 400;
        case Errc::DecryptFailed:
        case Errc::SignatureInvalid:
        case Errc::NonceMismatch:
        case Errc::Expired:
        case Errc::UnknownPrincipal:
        case Errc::Unauthenticated: return 401;
        case Errc::AudienceMismatch:
        case Errc::Forbidden: return 403;
        case Errc::NotFound:
        case Errc::NoCandidate: return 404;
        case Errc::Conflict: return 409;
        case Errc::Unavailable: return 503;
        case Errc::Crypto:
        case Errc::Io: return 500;
    }
    return 500;
}

Errc errc_from_name(std::string_view name, Errc fallback) noexcept {
    static constexpr std::array kAll{
        Errc::InvalidArgument, Errc::Malformed,        Errc::DecryptFailed, Errc::SignatureInvalid,
        Errc::NonceMismatch,   Errc::Expired,          Errc::AudienceMismatch, Errc::UnknownPrincipal,
        Errc::Unauthenticated, Errc::Forbidden,        Errc::NotFound,      Errc::Conflict,
        Errc::NoCandidate,     Errc::Unavailable,      Errc::Crypto,        Errc::Io,
    };
    for (auto code : kAll) {
        if (to_string(code) == name) return code;
    }
    return fallback;
}

}  // namespace xrf::wire
