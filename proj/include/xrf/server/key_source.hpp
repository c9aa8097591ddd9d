#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>
#include <thread>
#include <vector>

#include "xrf/crypto/rsa.hpp"

namespace xrf::server {

/// Supplies a never-before-used signing key pair for each issued token.
class KeySource {
public:
    virtual ~KeySource() = default;

    virtual crypto::KeyPair acquire() = 0;
    /// Hands back a pair that was acquired but never used to sign anything.
    virtual void recycle(crypto::KeyPair pair) { (void)pair; }
};

/// Generates keys inline on every call.
class InlineKeySource final : public KeySource {
public:
    explicit InlineKeySource(int bits = 2048) : bits_(bits) {}
    crypto::KeyPair acquire() override { return crypto::generate_keypair(bits_); }

private:
    int bits_;
};

/// Hands out pairs generated ahead of time, each under a fresh kid and at
/// most once per instance, then falls back to inline generation. Lets a
/// benchmark start many short-lived servers without paying for key
/// generation on every one.
class PreparedKeySource final : public KeySource {
public:
    explicit PreparedKeySource(std::vector<crypto::PrivateKey> keys, int bits = 2048);

    crypto::KeyPair acquire() override;
    void recycle(crypto::KeyPair pair) override;

    std::size_t available() const;

private:
    int bits_;
    mutable std::mutex mutex_;
    std::vector<crypto::KeyPair> ready_;
};

/// Keeps up to `target` fresh pairs ready, refilled by a background thread, so
/// RSA key generation stays off the request path. Falls back to inline
/// generation when drained.
class KeyPool final : public KeySource {
public:
    explicit KeyPool(std::size_t target, int bits = 2048);
    ~KeyPool() override;

    KeyPool(const KeyPool&) = delete;
    KeyPool& operator=(const KeyPool&) = delete;

    crypto::KeyPair acquire() override;
    void recycle(crypto::KeyPair pair) override;

    std::size_t available() const;
    /// Blocks until the pool holds `target` pairs.
    void wait_filled() const;

private:
    void refill_loop(std::stop_token stop);

    std::size_t target_;
    int bits_;
    mutable std::mutex mutex_;
    mutable std::condition_variable_any changed_;
    std::deque<crypto::KeyPair> ready_;
    std::jthread worker_;
};

}  // namespace xrf::server
