#include "xrf/server/key_source.hpp"

namespace xrf::server {

PreparedKeySource::PreparedKeySource(std::vector<crypto::PrivateKey> keys, int bits) : bits_(bits) {
    ready_.reserve(keys.size());
    for (auto& key : keys) {
        auto pub = key.public_key();
        ready_.push_back(crypto::KeyPair{Uuid::random(), std::move(key), std::move(pub)});
    }
}

crypto::KeyPair PreparedKeySource::acquire() {
    {
        std::lock_guard lock(mutex_);
        if (!ready_.empty()) {
            auto pair = std::move(ready_.back());
            ready_.pop_back();
            return pair;
        }
    }
    return crypto::generate_keypair(bits_);
}

void PreparedKeySource::recycle(crypto::KeyPair pair) {
    std::lock_guard lock(mutex_);
    ready_.push_back(std::move(pair));
}

std::size_t PreparedKeySource::available() const {
    std::lock_guard lock(mutex_);
    return ready_.size();
}

KeyPool::KeyPool(std::size_t target, int bits) : target_(target), bits_(bits) {
    if (target_ > 0) worker_ = std::jthread([this](std::stop_token stop) { refill_loop(stop); });
}

KeyPool::~KeyPool() {
    worker_.request_stop();
    changed_.notify_all();
}

crypto::KeyPair KeyPool::acquire() {
    {
        std::lock_guard lock(mutex_);
        if (!ready_.empty()) {
            auto pair = std::move(ready_.front());
            ready_.pop_front();
            changed_.notify_all();
            return pair;
        }
    }
    return crypto::generate_keypair(bits_);
}

void KeyPool::recycle(crypto::KeyPair pair) {
    std::lock_guard lock(mutex_);
    ready_.push_front(std::move(pair));
    changed_.notify_all();
}

std::size_t KeyPool::available() const {
    std::lock_guard lock(mutex_);
    return ready_.size();
}

void KeyPool::wait_filled() const {
    std::unique_lock lock(mutex_);
    changed_.wait(lock, [&] { return ready_.size() >= target_; });
}

void KeyPool::refill_loop(std::stop_token stop) {
    while (!stop.stop_requested()) {
        {
            std::unique_lock lock(mutex_);
            changed_.wait(lock, stop, [&] { return ready_.size() < target_; });
            if (stop.stop_requested()) return;
        }
        auto pair = crypto::generate_keypair(bits_);
        std::lock_guard lock(mutex_);
        ready_.push_back(std::move(pair));
        changed_.notify_all();
    }
}

}  // namespace xrf::server
