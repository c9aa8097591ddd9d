#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xrf::crypto {

using Bytes = std::vector<std::uint8_t>;

Bytes to_bytes(std::string_view text);
std::string to_string(std::span<const std::uint8_t> bytes);

/// Standard alphabet with '=' padding.
std::string base64_encode(std::span<const std::uint8_t> data);
/// Strict: rejects whitespace, bad padding and non-alphabet characters.
std::optional<Bytes> base64_decode(std::string_view text);

/// URL-safe alphabet, no padding (RFC 7515 section 2).
std::string base64url_encode(std::span<const std::uint8_t> data);
std::optional<Bytes> base64url_decode(std::string_view text);

}  // namespace xrf::crypto
