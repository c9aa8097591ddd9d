#include "xrf/client/listener.hpp"

#include <atomic>
#include <thread>

#include <httplib.h>

#include "xrf/core/cpu_time.hpp"
#include "xrf/core/wire.hpp"

namespace xrf::client {

int deny_status(DenyReason reason) noexcept {
    switch (reason) {
        case DenyReason::WrongAudience: return 403;
        case DenyReason::Unavailable: return 503;
        default: return 401;
    }
}

struct ClientListener::Impl {
    Impl(HostPort server, ListenerOptions opts) : options(std::move(opts)), validator(std::move(server)) {
        mode = options.mode;
    }

    void add(std::atomic<std::uint64_t>& slot, double seconds) {
        slot.fetch_add(static_cast<std::uint64_t>(seconds * 1e9), std::memory_order_relaxed);
    }

    /// Validates, then checks the grant covers this path with `needed` scope.
    void guarded(const httplib::Request& req, httplib::Response& res, Scope needed, const char* path) {
        Stopwatch handler;
        requests.fetch_add(1);
        XrfClient* client = owner.load();
        if (client == nullptr) {
            res.status = 503;
            return;
        }
        Stopwatch verify;
        const auto verdict =
            validator.validate_incoming(req.get_header_value("Authorization"), mode.load(), client->profile().instance_id);
        add(verify_wall_ns, verify.wall_seconds());
        add(verify_cpu_ns, verify.cpu_seconds());

        if (!verdict.accepted) {
            denied.fetch_add(1);
            res.status = deny_status(verdict.reason);
            res.set_content(Json{{"error", to_string(verdict.reason)}}.dump(), "application/json");
        } else if (verdict.claims->endpoint != path ||
                   (needed == Scope::Write && verdict.claims->scope != Scope::Write)) {
            denied.fetch_add(1);
            res.status = 403;
            res.set_content(Json{{"error", "insufficient-scope"}}.dump(), "application/json");
        } else {
            accepted.fetch_add(1);
            const auto served = served_count.fetch_add(1) + 1;
            Json body = needed == Scope::Read
                            ? Json{{"xAppInstanceID", client->profile().instance_id.str()}, {"served", served}}
                            : Json{{"result", "applied"}, {"by", verdict.claims->sub.str()}};
            res.status = 200;
            res.set_content(body.dump(), "application/json");
        }
        add(handler_wall_ns, handler.wall_seconds());
        add(handler_cpu_ns, handler.cpu_seconds());
    }

    ListenerOptions options;
    TokenValidator validator;
    std::atomic<ValidationMode> mode;
    std::atomic<XrfClient*> owner{nullptr};
    httplib::Server http;
    std::thread thread;
    int bound_port = 0;
    bool running = false;

    std::atomic<std::uint64_t> requests{0}, accepted{0}, denied{0}, served_count{0};
    std::atomic<std::uint64_t> handler_wall_ns{0}, handler_cpu_ns{0}, verify_wall_ns{0}, verify_cpu_ns{0};
};

ClientListener::ClientListener(HostPort server, ListenerOptions options)
    : impl_(std::make_unique<Impl>(std::move(server), std::move(options))) {}

ClientListener::~ClientListener() { stop(); }

void ClientListener::start() {
    auto& impl = *impl_;
    if (impl.running) return;
    const auto workers = static_cast<std::size_t>(std::max(1, impl.options.workers));
    impl.http.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
    impl.http.set_keep_alive_max_count(1000);
    // Plain SO_REUSEADDR; httplib's default adds SO_REUSEPORT, which would let
    // a second process bind the same port silently.
    impl.http.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });

    impl.http.Put(wire::kProfileUpdate, [&impl](const httplib::Request& req, httplib::Response& res) {
        XrfClient* client = impl.owner.load();
        if (client == nullptr) {
            res.status = 503;
            return;
        }
        const auto body = Json::parse(req.body, nullptr, false);
        res.status = body.is_discarded() ? 400 : client->handle_profile_update_push(body);
    });
    impl.http.Get(wire::kMetrics, [&impl](const httplib::Request& req, httplib::Response& res) {
        impl.guarded(req, res, Scope::Read, wire::kMetrics);
    });
    impl.http.Post(wire::kControl, [&impl](const httplib::Request& req, httplib::Response& res) {
        impl.guarded(req, res, Scope::Write, wire::kControl);
    });

    const auto& listen = impl.options.listen;
    if (listen.port == 0) {
        impl.bound_port = impl.http.bind_to_any_port(listen.host);
    } else {
        impl.bound_port = impl.http.bind_to_port(listen.host, listen.port) ? listen.port : -1;
    }
    if (impl.bound_port <= 0) throw Error(Errc::Io, "cannot bind " + listen.str());
    impl.thread = std::thread([&impl] { impl.http.listen_after_bind(); });
    impl.http.wait_until_ready();
    impl.running = true;
}

void ClientListener::stop() {
    auto& impl = *impl_;
    if (!impl.running) return;
    impl.http.stop();
    if (impl.thread.joinable()) impl.thread.join();
    impl.running = false;
}

void ClientListener::attach(XrfClient& owner) { impl_->owner.store(&owner); }

int ClientListener::port() const { return impl_->bound_port; }

std::string ClientListener::address() const { return impl_->options.listen.host + ":" + std::to_string(port()); }

void ClientListener::set_mode(ValidationMode mode) { impl_->mode.store(mode); }
ValidationMode ClientListener::mode() const { return impl_->mode.load(); }
TokenValidator& ClientListener::validator() { return impl_->validator; }

ProviderStats ClientListener::stats() const {
    const auto& impl = *impl_;
    ProviderStats out;
    out.requests = impl.requests.load();
    out.accepted = impl.accepted.load();
    out.denied = impl.denied.load();
    out.handler_wall_seconds = static_cast<double>(impl.handler_wall_ns.load()) * 1e-9;
    out.handler_cpu_seconds = static_cast<double>(impl.handler_cpu_ns.load()) * 1e-9;
    out.verify_wall_seconds = static_cast<double>(impl.verify_wall_ns.load()) * 1e-9;
    out.verify_cpu_seconds = static_cast<double>(impl.verify_cpu_ns.load()) * 1e-9;
    return out;
}

void ClientListener::reset_stats() {
    auto& impl = *impl_;
    impl.requests = 0;
    impl.accepted = 0;
    impl.denied = 0;
    impl.handler_wall_ns = 0;
    impl.handler_cpu_ns = 0;
    impl.verify_wall_ns = 0;
    impl.verify_cpu_ns = 0;
    impl.validator.reset_counters();
}

}  // namespace xrf::client
