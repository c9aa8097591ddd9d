#pragma once

#include <string>
#include <string_view>

namespace xrf {

/// "host:port", optionally prefixed with "http://". Throws Error(InvalidArgument).
struct HostPort {
    std::string host;
    int port = 0;

    static HostPort parse(std::string_view text);
    std::string str() const { return host + ":" + std::to_string(port); }
};

}  // namespace xrf
