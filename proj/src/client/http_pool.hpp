#pragma once

#include <memory>
#include <mutex>
#include <vector>

#include <httplib.h>

#include "xrf/core/net.hpp"

namespace xrf::client {

/// Keep-alive connections to one host, handed out one caller at a time.
class HttpClientPool {
public:
    explicit HttpClientPool(HostPort target) : target_(std::move(target)) {}

    class Lease {
    public:
        Lease(HttpClientPool& pool, std::unique_ptr<httplib::Client> client)
            : pool_(&pool), client_(std::move(client)) {}
        Lease(Lease&&) = default;
        ~Lease() {
            if (client_) pool_->give_back(std::move(client_));
        }
        httplib::Client* operator->() const { return client_.get(); }
        httplib::Client& operator*() const { return *client_; }

    private:
        HttpClientPool* pool_;
        std::unique_ptr<httplib::Client> client_;
    };

    Lease lease() {
        {
            std::lock_guard lock(mutex_);
            if (!idle_.empty()) {
                auto client = std::move(idle_.back());
                idle_.pop_back();
                return Lease(*this, std::move(client));
            }
        }
        auto client = std::make_unique<httplib::Client>(target_.host, target_.port);
        // An idle keep-alive connection pins a server worker until it times
        // out, so each request gets its own connection.
        client->set_keep_alive(false);
        client->set_connection_timeout(std::chrono::seconds(5));
        client->set_read_timeout(std::chrono::seconds(30));
        client->set_write_timeout(std::chrono::seconds(30));
        return Lease(*this, std::move(client));
    }

    const HostPort& target() const noexcept { return target_; }

private:
    void give_back(std::unique_ptr<httplib::Client> client) {
        std::lock_guard lock(mutex_);
        idle_.push_back(std::move(client));
    }

    HostPort target_;
    std::mutex mutex_;
    std::vector<std::unique_ptr<httplib::Client>> idle_;
};

}  // namespace xrf::client
