#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace xrf {

/// 128-bit identifier. Text form is canonical lowercase 8-4-4-4-12.
class Uuid {
public:
    Uuid() = default;
    explicit Uuid(const std::array<std::uint8_t, 16>& bytes) : bytes_(bytes) {}

    /// Random version-4 UUID drawn from the OpenSSL CSPRNG.
    static Uuid random();

    /// Accepts upper or lower case hex; rejects everything else.
    static std::optional<Uuid> parse(std::string_view text);

    /// Throws Error(Errc::Malformed) when the text is not a UUID.
    static Uuid from_string(std::string_view text);

    std::string str() const;
    const std::array<std::uint8_t, 16>& bytes() const noexcept { return bytes_; }
    bool is_nil() const noexcept;

    friend auto operator<=>(const Uuid&, const Uuid&) = default;

private:
    std::array<std::uint8_t, 16> bytes_{};
};

}  // namespace xrf

template <>
struct std::hash<xrf::Uuid> {
    std::size_t operator()(const xrf::Uuid& id) const noexcept;
};
