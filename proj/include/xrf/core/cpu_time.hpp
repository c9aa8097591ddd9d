#pragma once

#include <chrono>

namespace xrf {

/// CPU time consumed by the calling thread, in seconds.
double thread_cpu_seconds();
/// CPU time consumed by the whole process (all threads), in seconds.
double process_cpu_seconds();

/// Wall and calling-thread CPU time since construction.
class Stopwatch {
public:
    Stopwatch() : wall_start_(std::chrono::steady_clock::now()), cpu_start_(thread_cpu_seconds()) {}

    double wall_seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start_).count();
    }
    double cpu_seconds() const { return thread_cpu_seconds() - cpu_start_; }

private:
    std::chrono::steady_clock::time_point wall_start_;
    double cpu_start_;
};

}  // namespace xrf
