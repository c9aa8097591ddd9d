#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xrf {

enum class Errc {
    InvalidArgument,
    Malformed,
    DecryptFailed,
    SignatureInvalid,
    NonceMismatch,
    Expired,
    AudienceMismatch,
    UnknownPrincipal,
    Unauthenticated,
    Forbidden,
    NotFound,
    Conflict,
    NoCandidate,
    Unavailable,
    Crypto,
    Io,
};

std::string_view to_string(Errc code) noexcept;

/// Exception type used across the library. The code is the stable part;
/// the message is for humans.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace xrf
