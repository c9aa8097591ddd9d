#include "xrf/server/server.hpp"

#include <array>
#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "xrf/core/cpu_time.hpp"
#include "xrf/core/error.hpp"
#include "xrf/core/wire.hpp"

namespace xrf::server {
namespace {

constexpr std::array<const char*, 7> kEndpoints{wire::kInitialAuthentication, wire::kRegistration,
                                                wire::kProfileUpdateHandler,  wire::kDiscovery,
                                                wire::kAccessToken,           wire::kIntrospection,
                                                wire::kJwks};
constexpr std::size_t kTokenEndpoint = 4;

std::int64_t steady_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct Counters {
    std::atomic<std::uint64_t> count{0};
    std::atomic<std::uint64_t> failures{0};
    std::atomic<std::uint64_t> wall_ns{0};
    std::atomic<std::uint64_t> cpu_ns{0};
};

Json parse_body(const httplib::Request& req) {
    Json doc = Json::parse(req.body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw Error(Errc::Malformed, "request body is not a JSON object");
    return doc;
}

std::string string_field(const Json& doc, const char* key) {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_string()) throw Error(Errc::Malformed, std::string("missing string field '") + key + "'");
    return it->get<std::string>();
}

void reply(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <typename Load>
auto load_file(const std::filesystem::path& path, const char* what, Load&& load) {
    if (path.empty()) throw Error(Errc::InvalidArgument, std::string("no ") + what + " file configured");
    try {
        return load(path);
    } catch (const Error& e) {
        throw Error(e.code(), std::string(what) + " file " + path.string() + ": " + e.what());
    }
}

}  // namespace

bool http_notify(const XAppProfile& consumer, const XAppProfile& updated) {
    try {
        const auto target = HostPort::parse(consumer.endpoint_address);
        httplib::Client cli(target.host, target.port);
        cli.set_connection_timeout(std::chrono::seconds(2));
        cli.set_read_timeout(std::chrono::seconds(2));
        auto res = cli.Put(wire::kProfileUpdate, Json(updated).dump(), "application/json");
        return res && res->status == 200;
    } catch (const std::exception&) {
        return false;
    }
}

ServerOptions load_server_options(const ServerConfig& config) {
    if (config.workers < 1) throw Error(Errc::InvalidArgument, "worker count must be at least 1");
    if (config.token_ttl <= 0) throw Error(Errc::InvalidArgument, "token TTL must be positive");
    ServerOptions options;
    options.listen = HostPort::parse(config.listen);
    options.workers = config.workers;
    options.registry.issuer = config.issuer;
    options.registry.token_ttl = config.token_ttl;
    options.registry.key_retention = config.token_ttl;
    options.permissions = load_file(config.permissions, "permissions", PermissionsMatrix::load);
    options.vocabulary = load_file(config.offerings, "offerings", OfferingVocabulary::load);
    options.trust = load_file(config.trust_store, "trust store", crypto::TrustStore::load);
    options.server_key = load_file(config.key, "server key", crypto::PrivateKey::load);
    options.keys = std::make_shared<KeyPool>(config.key_pool);
    return options;
}

double ServerStats::handler_cpu_seconds() const {
    double total = 0;
    for (const auto& [name, op] : operations) total += op.cpu_seconds;
    return total;
}

Json ServerStats::to_json() const {
    Json ops = Json::object();
    for (const auto& [name, op] : operations) {
        ops[name] = {{"count", op.count}, {"failures", op.failures}, {"wall_s", op.wall_seconds}, {"cpu_s", op.cpu_seconds}};
    }
    Json out{{"requests", requests},
             {"operations", ops},
             {"notifications_sent", notifications_sent},
             {"notifications_failed", notifications_failed}};
    if (processing_span_seconds) out["processing_span_s"] = *processing_span_seconds;
    return out;
}

struct XrfServer::Impl {
    explicit Impl(ServerOptions opts)
        : options(std::move(opts)),
          registry(options.registry, options.server_key, options.trust, options.vocabulary, options.permissions,
                   options.keys) {
        if (options.workers < 1) throw Error(Errc::InvalidArgument, "worker count must be at least 1");
    }

    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    httplib::Server::Handler wrap(std::size_t index, Handler handler) {
        return [this, index, handler = std::move(handler)](const httplib::Request& req, httplib::Response& res) {
            const auto arrival = steady_ns();
            std::int64_t expected = 0;
            first_arrival_ns.compare_exchange_strong(expected, arrival);
            Stopwatch watch;
            try {
                handler(req, res);
            } catch (const Error& e) {
                reply(res, wire::http_status(e.code()), Json{{"error", to_string(e.code())}, {"message", e.what()}});
            } catch (const std::exception& e) {
                reply(res, 500, Json{{"error", "internal"}, {"message", e.what()}});
            }
            const auto cpu = watch.cpu_seconds();
            const auto wall = watch.wall_seconds();
            auto& c = counters[index];
            c.count.fetch_add(1, std::memory_order_relaxed);
            if (res.status >= 400) c.failures.fetch_add(1, std::memory_order_relaxed);
            c.wall_ns.fetch_add(static_cast<std::uint64_t>(wall * 1e9), std::memory_order_relaxed);
            c.cpu_ns.fetch_add(static_cast<std::uint64_t>(cpu * 1e9), std::memory_order_relaxed);
            if (index == kTokenEndpoint && res.status == 200) {
                const auto done = steady_ns();
                auto prev = last_token_ns.load(std::memory_order_relaxed);
                while (prev < done && !last_token_ns.compare_exchange_weak(prev, done)) {
                }
            }
            if (options.access_log != nullptr) {
                const Json line{{"endpoint", kEndpoints[index]},
                                {"method", req.method},
                                {"status", res.status},
                                {"wall_us", static_cast<std::int64_t>(wall * 1e6)}};
                std::lock_guard lock(log_mutex);
                *options.access_log << line.dump() << '\n';
                options.access_log->flush();
            }
        };
    }

    std::string session_of(const httplib::Request& req) const { return req.get_header_value(wire::kSessionHeader); }

    void install_routes() {
        http.Post(wire::kInitialAuthentication, wrap(0, [this](const auto& req, auto& res) {
            const Json body = parse_body(req);
            const Uuid principal = Uuid::from_string(string_field(body, "principal"));
            const crypto::ChallengeEnvelope challenge{string_field(body, "challenge")};
            const auto result = registry.authenticate(principal, challenge, options.clock());
            reply(res, 200,
                  Json{{"counter", result.counter.payload},
                       {"session", result.session},
                       {"expiresAt", result.session_expires}});
        }));

        http.Put(wire::kRegistration, wrap(1, [this](const auto& req, auto& res) {
            XAppProfile profile;
            from_json(parse_body(req), profile);
            registry.register_profile(session_of(req), std::move(profile), options.clock());
            reply(res, 200, Json{{"result", "OK"}});
        }));

        http.Put(wire::kProfileUpdateHandler, wrap(2, [this](const auto& req, auto& res) {
            const auto result = registry.update_profile(session_of(req), parse_body(req), options.clock());
            std::size_t delivered = 0;
            for (const auto& consumer : result.consumers) {
                bool ok = options.notifier(consumer, result.profile);
                if (!ok) ok = options.notifier(consumer, result.profile);
                (ok ? notifications_sent : notifications_failed).fetch_add(1, std::memory_order_relaxed);
                if (ok) ++delivered;
            }
            reply(res, 200, Json{{"result", "OK"}, {"notified", delivered}, {"consumers", result.consumers.size()}});
        }));

        http.Get(wire::kDiscovery, wrap(3, [this](const auto& req, auto& res) {
            if (!req.has_param("xAppOffering") || !req.has_param("xAppLocation")) {
                throw Error(Errc::Malformed, "discovery needs xAppOffering and xAppLocation");
            }
            std::optional<Uuid> requester;
            if (req.has_param("requester")) requester = Uuid::from_string(req.get_param_value("requester"));
            const auto found = registry.discover(req.get_param_value("xAppOffering"),
                                                 req.get_param_value("xAppLocation"), requester);
            reply(res, 200, Json(found));
        }));

        http.Post(wire::kAccessToken, wrap(kTokenEndpoint, [this](const auto& req, auto& res) {
            const Json body = parse_body(req);
            TokenRequest request;
            request.consumer = Uuid::from_string(string_field(body, "consumer"));
            request.provider = Uuid::from_string(string_field(body, "provider"));
            request.endpoint = string_field(body, "endpoint");
            auto scope = parse_scope(string_field(body, "scope"));
            if (!scope) throw Error(Errc::Malformed, "scope must be 'read' or 'write'");
            request.scope = *scope;
            const auto issued = registry.issue_token(session_of(req), request, options.clock());
            reply(res, 200,
                  Json{{"access_token", issued.token.compact},
                       {"token_type", "Bearer"},
                       {"expires_in", issued.claims.exp - options.clock()},
                       {"kid", issued.kid.str()}});
        }));

        http.Post(wire::kIntrospection, wrap(5, [this](const auto& req, auto& res) {
            const Json body = parse_body(req);
            const auto result = registry.introspect(crypto::SignedToken{string_field(body, "token")}, options.clock());
            Json out{{"active", result.active}};
            if (result.active && result.claims) out.update(Json(*result.claims));
            reply(res, 200, out);
        }));

        http.Get(wire::kJwks, wrap(6, [this](const auto& req, auto& res) {
            if (!req.has_param("kid")) throw Error(Errc::Malformed, "kid query parameter is required");
            reply(res, 200, registry.jwks(Uuid::from_string(req.get_param_value("kid"))));
        }));
    }

    void sweep_loop(std::stop_token stop) {
        std::mutex m;
        std::condition_variable_any cv;
        std::unique_lock lock(m);
        while (!cv.wait_for(lock, stop, options.sweep_interval, [] { return false; })) {
            if (stop.stop_requested()) return;
            registry.expire_grants(options.clock());
        }
    }

    ServerOptions options;
    Registry registry;
    httplib::Server http;
    std::thread listener;
    std::jthread sweeper;
    int bound_port = 0;
    bool running = false;

    std::array<Counters, kEndpoints.size()> counters;
    std::atomic<std::int64_t> first_arrival_ns{0};
    std::atomic<std::int64_t> last_token_ns{0};
    std::atomic<std::uint64_t> notifications_sent{0};
    std::atomic<std::uint64_t> notifications_failed{0};
    std::mutex log_mutex;
};

XrfServer::XrfServer(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

XrfServer::~XrfServer() { stop(); }

void XrfServer::start() {
    auto& impl = *impl_;
    if (impl.running) return;
    const int workers = impl.options.workers;
    impl.http.new_task_queue = [workers] { return new httplib::ThreadPool(static_cast<std::size_t>(workers)); };
    impl.http.set_keep_alive_max_count(1000);
    // Plain SO_REUSEADDR; httplib's default adds SO_REUSEPORT, which would let
    // a second process bind the same port silently.
    impl.http.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    impl.install_routes();

    const auto& listen = impl.options.listen;
    if (listen.port == 0) {
        impl.bound_port = impl.http.bind_to_any_port(listen.host);
    } else if (impl.http.bind_to_port(listen.host, listen.port)) {
        impl.bound_port = listen.port;
    } else {
        impl.bound_port = -1;
    }
    if (impl.bound_port <= 0) throw Error(Errc::Io, "cannot bind " + listen.str());

    impl.listener = std::thread([&impl] { impl.http.listen_after_bind(); });
    impl.http.wait_until_ready();
    impl.sweeper = std::jthread([&impl](std::stop_token stop) { impl.sweep_loop(stop); });
    impl.running = true;
}

void XrfServer::stop() {
    auto& impl = *impl_;
    if (!impl.running) return;
    impl.http.stop();
    if (impl.listener.joinable()) impl.listener.join();
    impl.sweeper.request_stop();
    if (impl.sweeper.joinable()) impl.sweeper.join();
    impl.running = false;
}

int XrfServer::port() const { return impl_->bound_port; }

std::string XrfServer::url() const { return "http://" + impl_->options.listen.host + ":" + std::to_string(port()); }

Registry& XrfServer::registry() { return impl_->registry; }
const Registry& XrfServer::registry() const { return impl_->registry; }

ServerStats XrfServer::stats() const {
    const auto& impl = *impl_;
    ServerStats out;
    for (std::size_t i = 0; i < kEndpoints.size(); ++i) {
        const auto& c = impl.counters[i];
        OperationStats op;
        op.count = c.count.load();
        op.failures = c.failures.load();
        op.wall_seconds = static_cast<double>(c.wall_ns.load()) * 1e-9;
        op.cpu_seconds = static_cast<double>(c.cpu_ns.load()) * 1e-9;
        out.requests += op.count;
        out.operations[kEndpoints[i]] = op;
    }
    const auto first = impl.first_arrival_ns.load();
    const auto last = impl.last_token_ns.load();
    if (first != 0 && last >= first) out.processing_span_seconds = static_cast<double>(last - first) * 1e-9;
    out.notifications_sent = impl.notifications_sent.load();
    out.notifications_failed = impl.notifications_failed.load();
    return out;
}

void XrfServer::reset_stats() {
    auto& impl = *impl_;
    for (auto& c : impl.counters) {
        c.count = 0;
        c.failures = 0;
        c.wall_ns = 0;
        c.cpu_ns = 0;
    }
    impl.first_arrival_ns = 0;
    impl.last_token_ns = 0;
    impl.notifications_sent = 0;
    impl.notifications_failed = 0;
}

}  // namespace xrf::server
