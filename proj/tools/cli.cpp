#include "cli.hpp"

#include <signal.h>

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>

#include "xrf/bench/harness.hpp"
#include "xrf/client/client.hpp"
#include "xrf/client/listener.hpp"
#include "xrf/core/error.hpp"
#include "xrf/core/model.hpp"
#include "xrf/crypto/rsa.hpp"
#include "xrf/crypto/trust_store.hpp"
#include "xrf/server/server.hpp"

namespace xrf::cli {
namespace {

namespace fs = std::filesystem;

/// Bad flags, bad config file or unreadable input files.
class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Ties a long flag to its key in a JSON config file.
struct Binding {
    std::string key;
    CLI::Option* option;
    std::function<void(const Json&)> assign;
};

using Bindings = std::vector<Binding>;

template <class T>
CLI::Option* bind_option(CLI::App* app, Bindings& bindings, const std::string& key, T& target,
                         const std::string& help) {
    auto* option = app->add_option("--" + key, target, help)->capture_default_str();
    bindings.push_back({key, option, [&target](const Json& value) { target = value.get<T>(); }});
    return option;
}

CLI::Option* bind_flag(CLI::App* app, Bindings& bindings, const std::string& key, bool& target,
                       const std::string& help) {
    auto* option = app->add_flag("--" + key, target, help);
    bindings.push_back({key, option, [&target](const Json& value) { target = value.get<bool>(); }});
    return option;
}

/// Fills every bound value that was not given on the command line from the
/// JSON object in `path`. Keys are the long flag names without dashes.
void apply_config_file(const std::string& path, const Bindings& bindings) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw ConfigError("config file " + path + ": cannot open");
    Json doc = Json::parse(in, nullptr, false);
    if (!doc.is_object()) throw ConfigError("config file " + path + ": expected a JSON object");
    for (const auto& [key, value] : doc.items()) {
        auto it = std::find_if(bindings.begin(), bindings.end(), [&](const Binding& b) { return b.key == key; });
        if (it == bindings.end()) throw ConfigError("config file " + path + ": unknown key '" + key + "'");
        if (it->option->count() > 0) continue;
        try {
            it->assign(value);
        } catch (const Json::exception& e) {
            throw ConfigError("config file " + path + ": bad value for '" + key + "': " + e.what());
        }
    }
}

int wait_for_shutdown() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    int sig = 0;
    sigwait(&set, &sig);
    return sig;
}

crypto::PublicKey read_public_key(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("server public key " + path + ": cannot open");
    std::stringstream text;
    text << in.rdbuf();
    try {
        return crypto::PublicKey::from_pem(text.str());
    } catch (const Error& e) {
        throw ConfigError("server public key " + path + ": " + e.what());
    }
}

crypto::PrivateKey read_private_key(const std::string& path, const std::string& what) {
    try {
        return crypto::PrivateKey::load(path);
    } catch (const Error& e) {
        throw ConfigError(what + " " + path + ": " + e.what());
    }
}

// ---------------------------------------------------------------- serve

struct ServeArgs {
    server::ServerConfig config;
    std::string permissions;
    std::string trust_store;
    std::string offerings;
    std::string key;
    std::string access_log;
    std::string config_file;
    bool check = false;
    Bindings bindings;
};

void add_serve(CLI::App& app, ServeArgs& args) {
    auto* sub = app.add_subcommand("serve", "Run the XRF server until SIGINT or SIGTERM");
    auto& c = args.config;
    auto& b = args.bindings;
    bind_option(sub, b, "listen", c.listen, "Address to bind, host:port (port 0 picks a free port)");
    bind_option(sub, b, "workers", c.workers, "HTTP worker threads")->check(CLI::PositiveNumber);
    bind_option(sub, b, "token-ttl", c.token_ttl, "Access token lifetime in seconds")->check(CLI::PositiveNumber);
    bind_option(sub, b, "permissions", args.permissions, "Permissions matrix JSON file");
    bind_option(sub, b, "trust-store", args.trust_store, "Trust store JSON file (principal UUID -> public key PEM)");
    bind_option(sub, b, "offerings", args.offerings, "Offering vocabulary JSON file");
    bind_option(sub, b, "key", args.key, "Server private key (PEM)");
    bind_option(sub, b, "issuer", c.issuer, "Token issuer claim");
    bind_option(sub, b, "key-pool", c.key_pool, "Token signing keys generated ahead of demand");
    bind_option(sub, b, "access-log", args.access_log, "Append one JSON line per request here ('-' for stdout)");
    bind_flag(sub, b, "check", args.check, "Load and validate the configuration, print it, then exit");
    sub->add_option("--config", args.config_file, "JSON config file; keys are flag names, flags win");
}

int run_serve(ServeArgs& args, std::ostream& out, std::ostream& err) {
    block_shutdown_signals();
    server::ServerOptions options;
    std::ofstream log_file;
    try {
        apply_config_file(args.config_file, args.bindings);
        args.config.permissions = args.permissions;
        args.config.trust_store = args.trust_store;
        args.config.offerings = args.offerings;
        args.config.key = args.key;
        options = server::load_server_options(args.config);
        if (args.access_log == "-") {
            options.access_log = &out;
        } else if (!args.access_log.empty()) {
            log_file.open(args.access_log, std::ios::app);
            if (!log_file) throw ConfigError("access log " + args.access_log + ": cannot open");
            options.access_log = &log_file;
        }
    } catch (const std::exception& e) {
        err << "xrf serve: " << e.what() << '\n';
        return kConfigError;
    }

    if (args.check) {
        const auto& c = args.config;
        out << Json{{"listen", c.listen},
                    {"workers", c.workers},
                    {"token-ttl", c.token_ttl},
                    {"permissions", args.permissions},
                    {"trust-store", args.trust_store},
                    {"offerings", args.offerings},
                    {"key", args.key},
                    {"issuer", c.issuer},
                    {"key-pool", c.key_pool},
                    {"access-log", args.access_log},
                    {"principals", options.trust.size()}}
                   .dump()
            << std::endl;
        return kOk;
    }

    try {
        server::XrfServer server(std::move(options));
        server.start();
        out << "listening " << server.url() << std::endl;
        const int sig = wait_for_shutdown();
        server.stop();
        out << Json{{"signal", sig}, {"stats", server.stats().to_json()}}.dump() << std::endl;
    } catch (const std::exception& e) {
        err << "xrf serve: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}

// ---------------------------------------------------------------- client

struct ClientArgs {
    std::string server = "127.0.0.1:8080";
    std::string principal;
    std::string key;
    std::string server_key;
    std::string role = "requester";
    std::string name;
    std::string offering;
    std::string location = "edge-1";
    std::string listen = "127.0.0.1:0";
    int listen_workers = 4;
    std::string mode = "SELF_CONTAINED";
    std::string want_offering = "KPIMON";
    std::string want_location;
    std::string scope = "read";
    std::string endpoint = "/metrics";
    std::string config_file;
    Bindings bindings;
};

void add_client(CLI::App& app, ClientArgs& args) {
    auto* sub = app.add_subcommand(
        "client", "Run a demo provider (serves /metrics until interrupted) or a requester (one startup plus "
                  "an authorized and an unauthorized service call)");
    auto& b = args.bindings;
    bind_option(sub, b, "server", args.server, "XRF server address, host:port");
    bind_option(sub, b, "principal", args.principal, "Principal UUID in the server trust store");
    bind_option(sub, b, "key", args.key, "This principal's private key (PEM)");
    bind_option(sub, b, "server-key", args.server_key, "Server public key (PEM)");
    bind_option(sub, b, "role", args.role, "provider or requester")->check(CLI::IsMember({"provider", "requester"}));
    bind_option(sub, b, "name", args.name, "xApp instance name (defaults to xrf-<role>)");
    bind_option(sub, b, "offering", args.offering, "Own offering code (KPIMON for providers, TRAFFIC-STEER for requesters)");
    bind_option(sub, b, "location", args.location, "Own location");
    bind_option(sub, b, "listen", args.listen, "Listener address for service and profile-update calls");
    bind_option(sub, b, "listen-workers", args.listen_workers, "Listener worker threads")->check(CLI::PositiveNumber);
    bind_option(sub, b, "mode", args.mode, "Inbound token validation: SELF_CONTAINED or REMOTE_INTROSPECTION");
    bind_option(sub, b, "want-offering", args.want_offering, "Offering to discover (requester)");
    bind_option(sub, b, "want-location", args.want_location, "Location to discover (defaults to --location)");
    bind_option(sub, b, "scope", args.scope, "Scope to request: read or write")->check(CLI::IsMember({"read", "write"}));
    bind_option(sub, b, "endpoint", args.endpoint, "Provider endpoint to call (/metrics uses GET, others POST)");
    sub->add_option("--config", args.config_file, "JSON config file; keys are flag names, flags win");
}

int run_client(ClientArgs& args, std::ostream& out, std::ostream& err) {
    block_shutdown_signals();
    client::ClientConfig config;
    client::ListenerOptions listener_options;
    bool provider_role = false;
    try {
        apply_config_file(args.config_file, args.bindings);
        if (args.role != "provider" && args.role != "requester") throw ConfigError("unknown --role " + args.role);
        provider_role = args.role == "provider";
        if (args.principal.empty() || args.key.empty() || args.server_key.empty()) {
            throw ConfigError("--principal, --key and --server-key are required");
        }
        auto principal = Uuid::parse(args.principal);
        if (!principal) throw ConfigError("--principal is not a UUID: " + args.principal);
        auto mode = client::parse_mode(args.mode);
        if (!mode) throw ConfigError("unknown --mode " + args.mode);
        auto scope = parse_scope(args.scope);
        if (!scope) throw ConfigError("unknown --scope " + args.scope);

        config.server = HostPort::parse(args.server);
        config.principal = *principal;
        config.own_key = read_private_key(args.key, "client key");
        config.server_key = read_public_key(args.server_key);
        config.profile.name = args.name.empty() ? "xrf-" + args.role : args.name;
        config.profile.offering = !args.offering.empty() ? args.offering : provider_role ? "KPIMON" : "TRAFFIC-STEER";
        config.profile.location = args.location;
        config.desired_offering = args.want_offering;
        config.desired_location = args.want_location.empty() ? args.location : args.want_location;
        config.desired_scope = *scope;
        config.desired_endpoint = args.endpoint;
        listener_options.listen = HostPort::parse(args.listen);
        listener_options.workers = args.listen_workers;
        listener_options.mode = *mode;
    } catch (const std::exception& e) {
        err << "xrf client: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        client::ClientListener listener(config.server, listener_options);
        listener.start();
        config.profile.endpoint_address = listener.address();
        client::XrfClient xapp(std::move(config));
        listener.attach(xapp);

        if (provider_role) {
            xapp.authenticate();
            xapp.register_profile();
            out << "provider " << xapp.profile().instance_id.str() << " AVAILABLE at " << listener.address()
                << " mode " << client::to_string(listener.mode()) << std::endl;
            wait_for_shutdown();
            listener.stop();
            const auto stats = listener.stats();
            out << Json{{"requests", stats.requests},
                        {"accepted", stats.accepted},
                        {"denied", stats.denied},
                        {"jwks_fetches", listener.validator().jwks_fetches()},
                        {"introspections", listener.validator().introspections()}}
                       .dump()
                << std::endl;
            return kOk;
        }

        xapp.startup();
        const auto target = *xapp.provider();
        out << "state " << client::to_string(xapp.state()) << " provider " << target.instance_id.str() << " at "
            << target.endpoint_address << std::endl;
        const auto method = args.endpoint == "/metrics" ? client::Method::Get : client::Method::Post;
        const char* verb = method == client::Method::Get ? "GET" : "POST";
        const auto granted = xapp.request_service(args.endpoint, method);
        out << "authorized " << verb << ' ' << args.endpoint << " -> " << granted.status << ' ' << granted.body
            << std::endl;
        const auto refused = xapp.request_service(target, args.endpoint, method, crypto::SignedToken{"not-a-token"});
        out << "unauthorized " << verb << ' ' << args.endpoint << " -> " << refused.status << ' ' << refused.body
            << std::endl;
        listener.stop();
        const bool ok = granted.status == 200 && (refused.status == 401 || refused.status == 403);
        return ok ? kOk : kRuntimeError;
    } catch (const client::StartupError& e) {
        err << "xrf client: startup failed at " << e.step() << ": " << e.what() << '\n';
        return kRuntimeError;
    } catch (const std::exception& e) {
        err << "xrf client: " << e.what() << '\n';
        return kRuntimeError;
    }
}

// ---------------------------------------------------------------- keygen

struct KeygenArgs {
    std::string out_dir = "keys";
    std::vector<std::string> principals;
    int count = 0;
    bool force = false;
    std::string config_file;
    Bindings bindings;
};

void add_keygen(CLI::App& app, KeygenArgs& args) {
    auto* sub = app.add_subcommand(
        "keygen", "Generate principal key pairs, a server key pair and the matching trust store");
    auto& b = args.bindings;
    bind_option(sub, b, "out", args.out_dir, "Output directory");
    bind_option(sub, b, "principal", args.principals, "Principal UUID (repeatable)");
    bind_option(sub, b, "count", args.count, "Additional principals with random UUIDs")->check(CLI::NonNegativeNumber);
    bind_flag(sub, b, "force", args.force, "Overwrite existing files");
    sub->add_option("--config", args.config_file, "JSON config file; keys are flag names, flags win");
}

void write_file(const fs::path& path, const std::string& text, bool secret) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot write " + path.string());
    if (secret) fs::permissions(path, fs::perms::owner_read | fs::perms::owner_write, fs::perm_options::replace);
    out << text;
    out.close();
    if (!out) throw Error(Errc::Io, "short write on " + path.string());
}

int run_keygen(KeygenArgs& args, std::ostream& out, std::ostream& err) {
    std::vector<Uuid> principals;
    fs::path dir;
    try {
        apply_config_file(args.config_file, args.bindings);
        for (const auto& text : args.principals) {
            auto id = Uuid::parse(text);
            if (!id) throw ConfigError("--principal is not a UUID: " + text);
            principals.push_back(*id);
        }
        for (int i = 0; i < args.count; ++i) principals.push_back(Uuid::random());
        if (principals.empty()) throw ConfigError("nothing to generate; give --principal or --count");
        dir = args.out_dir;
    } catch (const std::exception& e) {
        err << "xrf keygen: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        fs::create_directories(dir);
        std::vector<fs::path> targets{dir / "trust_store.json", dir / "server.pem", dir / "server.pub.pem"};
        for (const auto& id : principals) targets.push_back(dir / (id.str() + ".pem"));
        if (!args.force) {
            for (const auto& path : targets) {
                if (fs::exists(path)) {
                    err << "xrf keygen: " << path.string() << " exists; rerun with --force to overwrite\n";
                    return kRuntimeError;
                }
            }
        }

        crypto::TrustStore trust;
        for (const auto& id : principals) {
            auto key = crypto::PrivateKey::generate();
            write_file(dir / (id.str() + ".pem"), key.to_pem(), true);
            trust.insert(id, key.public_key());
            out << "principal " << id.str() << ' ' << (dir / (id.str() + ".pem")).string() << '\n';
        }
        auto server_key = crypto::PrivateKey::generate();
        write_file(dir / "server.pem", server_key.to_pem(), true);
        write_file(dir / "server.pub.pem", server_key.public_key().to_pem(), false);
        trust.save(dir / "trust_store.json");
        out << "server " << (dir / "server.pem").string() << '\n'
            << "trust-store " << (dir / "trust_store.json").string() << " (" << trust.size() << " principals)"
            << std::endl;
    } catch (const std::exception& e) {
        err << "xrf keygen: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
    bench::BenchConfig config;
    std::string out_dir = "bench-out";
    std::string key_cache;
    std::string config_file;
    Bindings bindings;
};

CLI::App* add_bench_sub(CLI::App* parent, const std::string& name, const std::string& help, BenchArgs& args) {
    auto* sub = parent->add_subcommand(name, help);
    bind_option(sub, args.bindings, "out", args.out_dir, "Directory for load.csv, micro.csv, token_cmp.csv, summary.txt");
    bind_option(sub, args.bindings, "reps", args.config.repetitions, "Repetitions per configuration")
        ->check(CLI::PositiveNumber);
    bind_option(sub, args.bindings, "key-cache", args.key_cache, "Directory that keeps generated RSA keys between runs");
    sub->add_option("--config", args.config_file, "JSON config file; keys are flag names, flags win");
    return sub;
}

struct BenchCommands {
    CLI::App* load = nullptr;
    CLI::App* micro = nullptr;
    CLI::App* token_cmp = nullptr;
    CLI::App* all = nullptr;
    BenchArgs load_args, micro_args, token_args, all_args;
};

void add_bench(CLI::App& app, BenchCommands& cmds) {
    auto* bench_cmd = app.add_subcommand("bench", "Run benchmarks and acceptance checks (exit 3 if a check fails)");
    bench_cmd->require_subcommand(1);

    auto& l = cmds.load_args;
    cmds.load = add_bench_sub(bench_cmd, "load", "End-to-end throughput over client and worker counts", l);
    bind_option(cmds.load, l.bindings, "clients", l.config.client_counts, "Concurrent clients per run")->delimiter(',');
    bind_option(cmds.load, l.bindings, "workers", l.config.worker_counts, "Server worker counts to sweep")->delimiter(',');

    auto& m = cmds.micro_args;
    cmds.micro = add_bench_sub(bench_cmd, "micro", "Per-operation times of the four startup steps", m);
    bind_option(cmds.micro, m.bindings, "clients", m.config.micro_clients, "Concurrent clients")->check(CLI::PositiveNumber);
    bind_option(cmds.micro, m.bindings, "workers", m.config.micro_workers, "Server worker threads")->check(CLI::PositiveNumber);

    auto& t = cmds.token_args;
    cmds.token_cmp = add_bench_sub(bench_cmd, "token-cmp", "Self-contained vs remote token validation", t);
    bind_option(cmds.token_cmp, t.bindings, "requests", t.config.token_requests, "Service requests per mode")
        ->check(CLI::PositiveNumber);

    auto& a = cmds.all_args;
    cmds.all = add_bench_sub(bench_cmd, "all", "micro, token-cmp and load in one go", a);
    bind_option(cmds.all, a.bindings, "clients", a.config.client_counts, "Concurrent clients per load run")->delimiter(',');
    bind_option(cmds.all, a.bindings, "workers", a.config.worker_counts, "Server worker counts to sweep")->delimiter(',');
    bind_option(cmds.all, a.bindings, "micro-clients", a.config.micro_clients, "Concurrent clients for micro")
        ->check(CLI::PositiveNumber);
    bind_option(cmds.all, a.bindings, "micro-workers", a.config.micro_workers, "Server worker threads for micro")
        ->check(CLI::PositiveNumber);
    bind_option(cmds.all, a.bindings, "requests", a.config.token_requests, "Service requests per mode")
        ->check(CLI::PositiveNumber);
}

int run_bench(BenchArgs& args, bool load, bool micro, bool token_cmp, std::ostream& out, std::ostream& err) {
    try {
        apply_config_file(args.config_file, args.bindings);
        args.config.out_dir = args.out_dir;
        args.config.key_cache = args.key_cache;
        bench::validate(args.config);
    } catch (const std::exception& e) {
        err << "xrf bench: " << e.what() << '\n';
        return kConfigError;
    }
    try {
        auto report = bench::run_all(args.config, load, micro, token_cmp, &err);
        bench::emit_report(report, args.config.out_dir);
        for (const auto& check : report.checks) {
            out << (check.passed ? "PASS " : "FAIL ") << check.name << ": " << check.detail << '\n';
        }
        out << "wrote " << args.config.out_dir.string() << std::endl;
        return report.all_passed() ? kOk : kCheckFailed;
    } catch (const std::exception& e) {
        err << "xrf bench: " << e.what() << '\n';
        return kRuntimeError;
    }
}

}  // namespace

void block_shutdown_signals() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"xrf: xApp repository function server, client sidecar and benchmarks", "xrf"};
    app.require_subcommand(1);

    ServeArgs serve;
    ClientArgs client;
    KeygenArgs keygen;
    BenchCommands bench;
    add_serve(app, serve);
    add_client(app, client);
    add_keygen(app, keygen);
    add_bench(app, bench);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }

    if (app.got_subcommand("serve")) return run_serve(serve, out, err);
    if (app.got_subcommand("client")) return run_client(client, out, err);
    if (app.got_subcommand("keygen")) return run_keygen(keygen, out, err);
    if (bench.load->parsed()) return run_bench(bench.load_args, true, false, false, out, err);
    if (bench.micro->parsed()) return run_bench(bench.micro_args, false, true, false, out, err);
    if (bench.token_cmp->parsed()) return run_bench(bench.token_args, false, false, true, out, err);
    if (bench.all->parsed()) return run_bench(bench.all_args, true, true, true, out, err);
    return kConfigError;
}

}  // namespace xrf::cli
