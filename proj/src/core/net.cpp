#include "xrf/core/net.hpp"

#include <charconv>
#include <ctime>

#include "xrf/core/cpu_time.hpp"
#include "xrf/core/error.hpp"

namespace xrf {

HostPort HostPort::parse(std::string_view text) {
    if (text.starts_with("http://")) text.remove_prefix(7);
    while (text.ends_with('/')) text.remove_suffix(1);
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
        throw Error(Errc::InvalidArgument, "expected host:port, got '" + std::string(text) + "'");
    }
    HostPort out;
    out.host = std::string(text.substr(0, colon));
    const auto digits = text.substr(colon + 1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out.port);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || out.port < 0 || out.port > 65535) {
        throw Error(Errc::InvalidArgument, "bad port in '" + std::string(text) + "'");
    }
    return out;
}

namespace {
double clock_seconds(clockid_t id) {
    timespec ts{};
    clock_gettime(id, &ts);
    return static_cast<double>(ts.tv_sec) + static_cast<double>(ts.tv_nsec) * 1e-9;
}
}  // namespace

double thread_cpu_seconds() { return clock_seconds(CLOCK_THREAD_CPUTIME_ID); }
double process_cpu_seconds() { return clock_seconds(CLOCK_PROCESS_CPUTIME_ID); }

}  // namespace xrf
