#include "xrf/bench/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <latch>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "xrf/client/listener.hpp"
#include "xrf/core/cpu_time.hpp"
#include "xrf/core/error.hpp"
#include "xrf/core/wire.hpp"

namespace xrf::bench {
namespace {

const Json kPermissions = Json::parse(R"({
  "KPIMON": [
    {"endpoint": "/metrics", "scopes": ["read"]},
    {"endpoint": "/control", "scopes": ["read", "write"]}
  ],
  "TRAFFIC-STEER": [
    {"endpoint": "/policy", "scopes": ["read", "write"]}
  ]
})");

constexpr std::array<int, 4> kScalingWorkers{2, 6, 12, 20};

const Json kOfferings = Json::array({"KPIMON", "TRAFFIC-STEER", "QOE-PREDICT"});

/// Maps startup step names to the server endpoint that serves them.
const std::vector<std::pair<std::string, std::string>> kSteps{
    {"initial-authentication", wire::kInitialAuthentication},
    {"registration", wire::kRegistration},
    {"discovery", wire::kDiscovery},
    {"access-token", wire::kAccessToken},
};

/// Authenticates and registers `count` KPIMON providers, starting at principal 0.
void register_providers(BenchFixture& fixture, const server::XrfServer& server, int count) {
    for (int i = 0; i < count; ++i) {
        client::XrfClient provider(
            fixture.provider_config(static_cast<std::size_t>(i), server, "127.0.0.1:" + std::to_string(9000 + i)));
        provider.authenticate();
        provider.register_profile();
    }
}

struct FlowResult {
    bool ok = false;
    std::string error;
    double wall = 0;
    double cpu = 0;
    std::vector<client::StepTiming> steps;
};

/// `clients` concurrent startup flows released together.
std::vector<FlowResult> run_flows(BenchFixture& fixture, const server::XrfServer& server, int clients) {
    std::vector<client::ClientConfig> configs;
    configs.reserve(static_cast<std::size_t>(clients));
    for (int i = 0; i < clients; ++i) {
        configs.push_back(fixture.consumer_config(static_cast<std::size_t>(kBenchProviders + i), server));
    }

    std::vector<FlowResult> results(static_cast<std::size_t>(clients));
    std::latch ready(clients + 1);
    std::latch go(1);
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(clients));
    for (int i = 0; i < clients; ++i) {
        threads.emplace_back([&, i] {
            auto& result = results[static_cast<std::size_t>(i)];
            ready.count_down();
            go.wait();
            Stopwatch watch;
            try {
                client::XrfClient flow(std::move(configs[static_cast<std::size_t>(i)]));
                flow.startup();
                result.steps = flow.timings();
                result.ok = true;
            } catch (const std::exception& e) {
                result.error = e.what();
            }
            result.wall = watch.wall_seconds();
            result.cpu = watch.cpu_seconds();
        });
    }
    ready.arrive_and_wait();
    go.count_down();
    for (auto& t : threads) t.join();
    return results;
}

double ratio(double num, double den) { return den > 0 ? num / den : 0; }

std::string fmt(double v, int precision = 4) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(precision) << v;
    return out.str();
}

}  // namespace

void validate(const BenchConfig& config) {
    auto positive = [](const std::vector<int>& values, const char* what) {
        if (values.empty()) throw Error(Errc::InvalidArgument, std::string(what) + " is empty");
        for (int v : values) {
            if (v < 1) throw Error(Errc::InvalidArgument, std::string(what) + " entries must be >= 1");
        }
    };
    positive(config.client_counts, "client counts");
    positive(config.worker_counts, "worker counts");
    if (config.repetitions < 1 || config.token_requests < 1 || config.micro_clients < 1 || config.micro_workers < 1) {
        throw Error(Errc::InvalidArgument, "repetitions, token requests and micro counts must be >= 1");
    }
}

LatencyStats latency_stats(std::vector<double> samples) {
    LatencyStats out;
    if (samples.empty()) return out;
    std::sort(samples.begin(), samples.end());
    out.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    // Nearest-rank percentiles.
    auto rank = [&](double p) {
        const auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(samples.size())));
        return samples[std::clamp<std::size_t>(idx, 1, samples.size()) - 1];
    };
    out.p50 = rank(0.50);
    out.p95 = rank(0.95);
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) return 0;
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

bool BenchReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

BenchFixture::BenchFixture(std::filesystem::path key_cache)
    : key_cache_(std::move(key_cache)),
      vocabulary_(OfferingVocabulary::from_json(kOfferings)),
      permissions_(PermissionsMatrix::from_json(kPermissions)) {
    if (!key_cache_.empty()) std::filesystem::create_directories(key_cache_);
    server_key_ = cached_key("server");
}

crypto::PrivateKey BenchFixture::cached_key(const std::string& name) {
    if (key_cache_.empty()) return crypto::PrivateKey::generate();
    const auto path = key_cache_ / (name + ".pem");
    if (std::filesystem::exists(path)) return crypto::PrivateKey::load(path);
    auto key = crypto::PrivateKey::generate();
    // Write-then-rename so a concurrent reader never sees half a key.
    const auto tmp = key_cache_ / (name + ".pem." + Uuid::random().str());
    {
        std::ofstream out(tmp);
        if (!out) throw Error(Errc::Io, "cannot write " + tmp.string());
        out << key.to_pem();
    }
    std::filesystem::rename(tmp, path);
    return key;
}

void BenchFixture::ensure_principals(std::size_t count) {
    while (principal_keys_.size() < count) {
        principal_ids_.push_back(Uuid::random());
        principal_keys_.push_back(cached_key("principal-" + std::to_string(principal_keys_.size())));
    }
}

const crypto::PrivateKey& BenchFixture::principal_key(std::size_t index) {
    ensure_principals(index + 1);
    return principal_keys_[index];
}

const Uuid& BenchFixture::principal_id(std::size_t index) {
    ensure_principals(index + 1);
    return principal_ids_[index];
}

std::vector<crypto::PrivateKey> BenchFixture::token_keys(std::size_t count) {
    while (token_keys_.size() < count) {
        token_keys_.push_back(cached_key("token-" + std::to_string(token_keys_.size())));
    }
    return {token_keys_.begin(), token_keys_.begin() + static_cast<std::ptrdiff_t>(count)};
}

std::unique_ptr<server::XrfServer> BenchFixture::make_server(int workers, std::size_t pool_size) {
    server::ServerOptions options;
    options.listen = HostPort{"127.0.0.1", 0};
    options.workers = workers;
    options.server_key = server_key_;
    for (std::size_t i = 0; i < principal_keys_.size(); ++i) {
        options.trust.insert(principal_ids_[i], principal_keys_[i].public_key());
    }
    options.vocabulary = vocabulary_;
    options.permissions = permissions_;
    options.keys = std::make_shared<server::PreparedKeySource>(token_keys(pool_size));
    auto server = std::make_unique<server::XrfServer>(std::move(options));
    server->start();
    return server;
}

client::ClientConfig BenchFixture::consumer_config(std::size_t index, const server::XrfServer& server) {
    client::ClientConfig config;
    config.server = HostPort{"127.0.0.1", server.port()};
    config.principal = principal_id(index);
    config.own_key = principal_key(index);
    config.server_key = server_key_.public_key();
    config.profile = client::ProfileSeed{"consumer-" + std::to_string(index), kBenchConsumerOffering, kBenchLocation,
                                         "127.0.0.1:1"};
    config.desired_offering = kBenchOffering;
    config.desired_location = kBenchLocation;
    config.desired_scope = Scope::Read;
    config.desired_endpoint = wire::kMetrics;
    return config;
}

client::ClientConfig BenchFixture::provider_config(std::size_t index, const server::XrfServer& server,
                                                   const std::string& endpoint_address) {
    client::ClientConfig config = consumer_config(index, server);
    config.profile = client::ProfileSeed{"kpimon-" + std::to_string(index), kBenchOffering, kBenchLocation,
                                         endpoint_address};
    return config;
}

LoadRecord run_load(BenchFixture& fixture, int clients, int workers, int rep) {
    fixture.principal_key(static_cast<std::size_t>(kBenchProviders + clients - 1));
    auto server = fixture.make_server(workers, static_cast<std::size_t>(clients));
    register_providers(fixture, *server, kBenchProviders);
    server->reset_stats();

    const double process_cpu_start = process_cpu_seconds();
    const auto flows = run_flows(fixture, *server, clients);
    const double process_cpu = process_cpu_seconds() - process_cpu_start;
    const auto stats = server->stats();
    server->stop();

    LoadRecord record;
    record.rep = rep;
    record.clients = clients;
    record.workers = workers;
    record.process_cpu_seconds = process_cpu;
    record.server_cpu_seconds = stats.handler_cpu_seconds();
    std::vector<double> latencies;
    for (const auto& flow : flows) {
        if (!flow.ok) {
            ++record.failures;
            if (record.error.empty()) record.error = flow.error;
            continue;
        }
        latencies.push_back(flow.wall);
        record.client_wall_seconds += flow.wall;
        record.client_cpu_seconds += flow.cpu;
    }
    record.latency = latency_stats(latencies);
    record.valid = record.failures == 0 && stats.processing_span_seconds.has_value();
    record.wall_seconds = stats.processing_span_seconds.value_or(0);
    record.throughput = ratio(clients, record.wall_seconds);
    return record;
}

std::vector<MicroRecord> run_micro(BenchFixture& fixture, int clients, int workers, int rep) {
    fixture.principal_key(static_cast<std::size_t>(kBenchProviders + clients - 1));
    auto server = fixture.make_server(workers, static_cast<std::size_t>(clients));
    register_providers(fixture, *server, kBenchProviders);
    server->reset_stats();
    const auto flows = run_flows(fixture, *server, clients);
    const auto stats = server->stats();
    server->stop();

    for (const auto& flow : flows) {
        if (!flow.ok) throw Error(Errc::Unavailable, "micro-benchmark client failed: " + flow.error);
    }
    std::vector<MicroRecord> out;
    for (const auto& [step, endpoint] : kSteps) {
        MicroRecord record;
        record.rep = rep;
        record.clients = clients;
        record.operation = step;
        for (const auto& flow : flows) {
            for (const auto& timing : flow.steps) {
                if (timing.step != step) continue;
                record.client_wall_seconds += timing.wall_seconds;
                record.client_cpu_seconds += timing.cpu_seconds;
            }
        }
        const auto& op = stats.operations.at(endpoint);
        record.server_wall_seconds = op.wall_seconds;
        record.server_cpu_seconds = op.cpu_seconds;
        out.push_back(record);
    }
    return out;
}

std::vector<TokenCmpRecord> run_token_comparison(BenchFixture& fixture, int requests, int rep) {
    fixture.principal_key(1);
    auto server = fixture.make_server(4, 2);

    auto listener =
        std::make_unique<client::ClientListener>(HostPort{"127.0.0.1", server->port()}, client::ListenerOptions{});
    listener->start();
    auto provider = std::make_unique<client::XrfClient>(fixture.provider_config(0, *server, listener->address()));
    listener->attach(*provider);
    provider->authenticate();
    provider->register_profile();

    auto requester = std::make_unique<client::XrfClient>(fixture.consumer_config(1, *server));
    requester->startup();
    // Opens the requester->provider connection outside the measured loops.
    requester->request_service(wire::kMetrics, client::Method::Get);

    std::vector<TokenCmpRecord> out;
    for (auto mode : {client::ValidationMode::SelfContained, client::ValidationMode::RemoteIntrospection}) {
        listener->set_mode(mode);
        listener->validator().cache().clear();
        listener->reset_stats();
        server->reset_stats();

        TokenCmpRecord record;
        record.rep = rep;
        record.mode = mode;
        record.requests = requests;
        Stopwatch watch;
        for (int i = 0; i < requests; ++i) {
            if (requester->request_service(wire::kMetrics, client::Method::Get).status != 200) record.valid = false;
        }
        record.requester_wall_seconds = watch.wall_seconds();
        record.requester_cpu_seconds = watch.cpu_seconds();

        const auto provider_stats = listener->stats();
        record.provider_handler_wall_seconds = provider_stats.handler_wall_seconds;
        record.provider_handler_cpu_seconds = provider_stats.handler_cpu_seconds;
        record.jwks_fetches = listener->validator().jwks_fetches();
        record.introspections = listener->validator().introspections();
        if (mode == client::ValidationMode::SelfContained) {
            record.provider_wall_seconds = provider_stats.verify_wall_seconds;
            record.provider_cpu_seconds = provider_stats.verify_cpu_seconds;
        } else {
            const auto& op = server->stats().operations.at(wire::kIntrospection);
            record.provider_wall_seconds = op.wall_seconds;
            record.provider_cpu_seconds = op.cpu_seconds;
        }
        out.push_back(record);
    }
    // Close client connections first so neither server waits out idle keep-alives.
    requester.reset();
    listener->stop();
    listener.reset();
    provider.reset();
    server->stop();
    return out;
}

CheckResult check_micro_ordering(const std::vector<MicroRecord>& records) {
    CheckResult result{"micro-ordering", false, ""};
    std::map<std::string, std::vector<double>> cpu;
    for (const auto& r : records) cpu[r.operation].push_back(r.server_cpu_seconds);
    std::map<std::string, double> med;
    for (const auto& [step, endpoint] : kSteps) {
        if (!cpu.contains(step)) {
            result.detail = "missing operation " + step;
            return result;
        }
        med[step] = median(cpu[step]);
    }
    const auto top = std::max_element(med.begin(), med.end(), [](auto& a, auto& b) { return a.second < b.second; });
    const auto low = std::min_element(med.begin(), med.end(), [](auto& a, auto& b) { return a.second < b.second; });
    result.passed = top->first == "initial-authentication" && low->first == "registration";
    std::ostringstream detail;
    detail << "median server CPU s:";
    for (const auto& [step, endpoint] : kSteps) detail << ' ' << step << '=' << fmt(med[step], 5);
    result.detail = detail.str();
    return result;
}

CheckResult check_token_direction(const std::vector<TokenCmpRecord>& records) {
    CheckResult result{"token-comparison", false, ""};
    std::vector<double> req_self, req_remote, prov_self, prov_remote;
    bool single_fetch = true;
    bool valid = true;
    for (const auto& r : records) {
        valid = valid && r.valid;
        if (r.mode == client::ValidationMode::SelfContained) {
            req_self.push_back(r.requester_wall_seconds);
            prov_self.push_back(r.provider_wall_seconds);
            single_fetch = single_fetch && r.jwks_fetches == 1;
        } else {
            req_remote.push_back(r.requester_wall_seconds);
            prov_remote.push_back(r.provider_wall_seconds);
        }
    }
    if (req_self.empty() || req_remote.empty()) {
        result.detail = "need both modes";
        return result;
    }
    const double requester_ratio = ratio(median(req_remote), median(req_self));
    const double provider_ratio = ratio(median(prov_remote), median(prov_self));
    result.passed = valid && single_fetch && requester_ratio >= 1.5 && provider_ratio >= 0.5 && provider_ratio <= 2.0;
    result.detail = "requester wall remote/self=" + fmt(requester_ratio, 3) +
                    " (need >=1.5); provider wall remote/self=" + fmt(provider_ratio, 3) +
                    " (need 0.5..2); one JWKS fetch per self-contained run=" + (single_fetch ? "yes" : "no") +
                    "; all requests accepted=" + (valid ? "yes" : "no");
    return result;
}

CheckResult check_scaling(const std::vector<LoadRecord>& records) {
    CheckResult result{"concurrency-scaling", false, ""};
    int clients = 0;
    for (const auto& r : records) clients = std::max(clients, r.clients);
    std::map<int, std::vector<double>> throughput;
    int invalid = 0;
    for (const auto& r : records) {
        if (r.clients != clients) continue;
        if (!r.valid) {
            ++invalid;
            continue;
        }
        throughput[r.workers].push_back(r.throughput);
    }
    for (int w : kScalingWorkers) {
        if (!throughput.contains(w)) {
            result.detail = "no valid runs with " + std::to_string(w) + " workers at " + std::to_string(clients) +
                            " clients";
            return result;
        }
    }
    const double t2 = median(throughput[2]), t6 = median(throughput[6]);
    const double t12 = median(throughput[12]), t20 = median(throughput[20]);
    result.passed = clients >= 200 && t6 >= 1.2 * t2 && t20 >= 0.9 * t12;
    result.detail = "clients=" + std::to_string(clients) + " median users/s: w2=" + fmt(t2, 2) + " w6=" + fmt(t6, 2) +
                    " w12=" + fmt(t12, 2) + " w20=" + fmt(t20, 2) + "; w6/w2=" + fmt(ratio(t6, t2), 3) +
                    " (need >=1.2), w20/w12=" + fmt(ratio(t20, t12), 3) + " (need >=0.9); invalid runs=" +
                    std::to_string(invalid);
    return result;
}

CheckResult check_client_lightness(const std::vector<LoadRecord>& records) {
    CheckResult result{"client-lightness", false, ""};
    double cpu = 0;
    double wall = 0;
    for (const auto& r : records) {
        if (!r.valid) continue;
        cpu += r.client_cpu_seconds;
        wall += r.client_wall_seconds;
    }
    if (wall <= 0) {
        result.detail = "no valid load runs";
        return result;
    }
    const double share = cpu / wall;
    result.passed = share < 0.3;
    result.detail = "client CPU/wall=" + fmt(share, 4) + " (need <0.3)";
    return result;
}

void evaluate(BenchReport& report) {
    report.checks.clear();
    if (!report.micro.empty()) report.checks.push_back(check_micro_ordering(report.micro));
    if (!report.token_cmp.empty()) report.checks.push_back(check_token_direction(report.token_cmp));
    if (!report.load.empty()) {
        // The scaling trend is only defined over the 2/6/12/20 worker sweep.
        std::set<int> workers;
        for (const auto& r : report.load) workers.insert(r.workers);
        if (std::all_of(kScalingWorkers.begin(), kScalingWorkers.end(), [&](int w) { return workers.contains(w); })) {
            report.checks.push_back(check_scaling(report.load));
        }
        report.checks.push_back(check_client_lightness(report.load));
    }
}

void emit_report(const BenchReport& report, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(Errc::Io, "cannot create " + out_dir.string() + ": " + ec.message());

    auto open = [&](const char* name) {
        std::ofstream out(out_dir / name);
        if (!out) throw Error(Errc::Io, "cannot write " + (out_dir / name).string());
        out << std::setprecision(9);
        return out;
    };
    auto finish = [&](std::ofstream& out, const char* name) {
        out.flush();
        if (!out) throw Error(Errc::Io, "short write on " + (out_dir / name).string());
    };

    if (!report.load.empty()) {
        auto out = open("load.csv");
        out << "rep,clients,workers,valid,failures,wall_s,server_cpu_s,process_cpu_s,client_cpu_s,client_wall_s,"
               "throughput_users_per_s,latency_mean_s,latency_p50_s,latency_p95_s\n";
        for (const auto& r : report.load) {
            out << r.rep << ',' << r.clients << ',' << r.workers << ',' << (r.valid ? 1 : 0) << ',' << r.failures << ','
                << r.wall_seconds << ',' << r.server_cpu_seconds << ',' << r.process_cpu_seconds << ','
                << r.client_cpu_seconds << ',' << r.client_wall_seconds << ',' << r.throughput << ','
                << r.latency.mean << ',' << r.latency.p50 << ',' << r.latency.p95 << '\n';
        }
        finish(out, "load.csv");
    }
    if (!report.micro.empty()) {
        auto out = open("micro.csv");
        out << "rep,clients,operation,client_wall_s,client_cpu_s,server_wall_s,server_cpu_s\n";
        for (const auto& r : report.micro) {
            out << r.rep << ',' << r.clients << ',' << r.operation << ',' << r.client_wall_seconds << ','
                << r.client_cpu_seconds << ',' << r.server_wall_seconds << ',' << r.server_cpu_seconds << '\n';
        }
        finish(out, "micro.csv");
    }
    if (!report.token_cmp.empty()) {
        auto out = open("token_cmp.csv");
        out << "rep,mode,requests,valid,requester_wall_s,requester_cpu_s,provider_wall_s,provider_cpu_s,"
               "provider_handler_wall_s,provider_handler_cpu_s,jwks_fetches,introspections\n";
        for (const auto& r : report.token_cmp) {
            out << r.rep << ',' << client::to_string(r.mode) << ',' << r.requests << ',' << (r.valid ? 1 : 0) << ','
                << r.requester_wall_seconds << ',' << r.requester_cpu_seconds << ',' << r.provider_wall_seconds << ','
                << r.provider_cpu_seconds << ',' << r.provider_handler_wall_seconds << ','
                << r.provider_handler_cpu_seconds << ',' << r.jwks_fetches << ',' << r.introspections << '\n';
        }
        finish(out, "token_cmp.csv");
    }
    {
        auto out = open("summary.txt");
        for (const auto& check : report.checks) {
            out << (check.passed ? "PASS " : "FAIL ") << check.name << ": " << check.detail << '\n';
        }
        finish(out, "summary.txt");
    }
}

BenchReport run_all(const BenchConfig& config, bool load, bool micro, bool token_cmp, std::ostream* log) {
    validate(config);
    BenchFixture fixture(config.key_cache);
    BenchReport report;
    auto say = [&](const std::string& line) {
        if (log != nullptr) *log << line << std::endl;
    };
    if (micro) {
        for (int rep = 0; rep < config.repetitions; ++rep) {
            auto records = run_micro(fixture, config.micro_clients, config.micro_workers, rep);
            say("micro rep " + std::to_string(rep) + " done");
            report.micro.insert(report.micro.end(), records.begin(), records.end());
        }
    }
    if (token_cmp) {
        for (int rep = 0; rep < config.repetitions; ++rep) {
            auto records = run_token_comparison(fixture, config.token_requests, rep);
            say("token-cmp rep " + std::to_string(rep) + " done");
            report.token_cmp.insert(report.token_cmp.end(), records.begin(), records.end());
        }
    }
    if (load) {
        for (int clients : config.client_counts) {
            for (int workers : config.worker_counts) {
                for (int rep = 0; rep < config.repetitions; ++rep) {
                    auto record = run_load(fixture, clients, workers, rep);
                    say("load clients=" + std::to_string(clients) + " workers=" + std::to_string(workers) +
                        " rep=" + std::to_string(rep) + " throughput=" + fmt(record.throughput, 2) + " users/s" +
                        (record.valid ? "" : " INVALID: " + record.error));
                    report.load.push_back(record);
                }
            }
        }
    }
    evaluate(report);
    return report;
}

}  // namespace xrf::bench
