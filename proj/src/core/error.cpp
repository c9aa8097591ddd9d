#include "xrf/core/error.hpp"

namespace xrf {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::InvalidArgument: return "invalid-argument";
        case Errc::Malformed: return "malformed";
        case Errc::DecryptFailed: return "decrypt-failed";
        case Errc::SignatureInvalid: return "signature-invalid";
        case Errc::NonceMismatch: return "nonce-mismatch";
        case Errc::Expired: return "expired";
        case Errc::AudienceMismatch: return "audience-mismatch";
        case Errc::UnknownPrincipal: return "unknown-principal";
        case Errc::Unauthenticated: return "unauthenticated";
        case Errc::Forbidden: return "forbidden";
        case Errc::NotFound: return "not-found";
        case Errc::Conflict: return "conflict";
        case Errc::NoCandidate: return "no-candidate";
        case Errc::Unavailable: return "unavailable";
        case Errc::Crypto: return "crypto";
        case Errc::Io: return "io";
    }
    return "unknown";
}

}  // namespace xrf
