#pragma once

#include <sys/types.h>

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace xrf::testing {

/// A child process with stdout and stderr merged into one pipe.
class Process {
public:
    explicit Process(std::vector<std::string> argv);
    ~Process();

    Process(const Process&) = delete;
    Process& operator=(const Process&) = delete;

    /// Next output line, or nullopt on EOF or timeout.
    std::optional<std::string> read_line(std::chrono::milliseconds timeout = std::chrono::seconds(10));
    /// Reads lines until one contains `needle`; returns it.
    std::optional<std::string> wait_for(const std::string& needle,
                                        std::chrono::milliseconds timeout = std::chrono::seconds(10));
    /// Everything still unread, up to EOF.
    std::string drain(std::chrono::milliseconds timeout = std::chrono::seconds(10));

    void signal(int sig);
    /// Exit status, or -1 if the child did not exit in time (it is then killed).
    int wait(std::chrono::milliseconds timeout = std::chrono::seconds(10));

private:
    bool fill(std::chrono::steady_clock::time_point deadline);

    pid_t pid_ = -1;
    int fd_ = -1;
    std::string buffer_;
    bool eof_ = false;
    std::optional<int> status_;
};

/// Path of the xrf executable under test.
std::string xrf_binary();

}  // namespace xrf::testing
