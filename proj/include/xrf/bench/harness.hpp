#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "xrf/client/client.hpp"
#include "xrf/client/validator.hpp"
#include "xrf/server/server.hpp"

namespace xrf::bench {

struct BenchConfig {
    std::vector<int> client_counts{200};
    std::vector<int> worker_counts{2, 6, 12, 20};
    int repetitions = 5;
    int token_requests = 100;
    int micro_clients = 50;
    int micro_workers = 20;
    std::filesystem::path out_dir = "bench-out";
    /// Where generated RSA keys are kept between runs; empty keeps them in
    /// memory only.
    std::filesystem::path key_cache;
};

/// Throws Error(InvalidArgument) if any count is below 1.
void validate(const BenchConfig& config);

struct LatencyStats {
    double mean = 0;
    double p50 = 0;
    double p95 = 0;
};

LatencyStats latency_stats(std::vector<double> samples);

/// Median of `values`; 0 for an empty list.
double median(std::vector<double> values);

struct LoadRecord {
    int rep = 0;
    int clients = 0;
    int workers = 0;
    bool valid = true;
    int failures = 0;
    /// Server-side span from the first arrival to the last token issued.
    double wall_seconds = 0;
    /// CPU spent inside server request handlers.
    double server_cpu_seconds = 0;
    /// Whole-process CPU over the run (server, clients and key pool).
    double process_cpu_seconds = 0;
    double client_cpu_seconds = 0;
    double client_wall_seconds = 0;
    double throughput = 0;
    LatencyStats latency;
    std::string error;
};

struct MicroRecord {
    int rep = 0;
    int clients = 0;
    std::string operation;
    double client_wall_seconds = 0;
    double client_cpu_seconds = 0;
    double server_wall_seconds = 0;
    double server_cpu_seconds = 0;
};

struct TokenCmpRecord {
    int rep = 0;
    client::ValidationMode mode = client::ValidationMode::SelfContained;
    int requests = 0;
    bool valid = true;
    double requester_wall_seconds = 0;
    double requester_cpu_seconds = 0;
    /// Token-verification time spent on the provider's behalf: local
    /// verification in self-contained mode, the server's introspection
    /// handler in remote mode.
    double provider_wall_seconds = 0;
    double provider_cpu_seconds = 0;
    /// The provider's whole service handler, including any wait on the server.
    double provider_handler_wall_seconds = 0;
    double provider_handler_cpu_seconds = 0;
    std::uint64_t jwks_fetches = 0;
    std::uint64_t introspections = 0;
};

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct BenchReport {
    std::vector<LoadRecord> load;
    std::vector<MicroRecord> micro;
    std::vector<TokenCmpRecord> token_cmp;
    std::vector<CheckResult> checks;

    bool all_passed() const;
};

/// Keys, vocabulary and permissions shared by every run in one process.
/// Principal and token-signing keys are generated on first use and then
/// reused, so repeated runs pay for RSA key generation once. Each server
/// still gets every token key under a fresh kid and uses it only once.
class BenchFixture {
public:
    explicit BenchFixture(std::filesystem::path key_cache = {});

    /// Fresh server with `workers` handler threads and `pool_size` token keys
    /// ready before the first request.
    std::unique_ptr<server::XrfServer> make_server(int workers, std::size_t pool_size);

    /// Config for principal #index, consuming KPIMON read access on /metrics.
    client::ClientConfig consumer_config(std::size_t index, const server::XrfServer& server);
    /// Config for a KPIMON provider reachable at `endpoint_address`.
    client::ClientConfig provider_config(std::size_t index, const server::XrfServer& server,
                                         const std::string& endpoint_address);

    const crypto::PrivateKey& principal_key(std::size_t index);
    const Uuid& principal_id(std::size_t index);
    /// The first `count` token-signing keys.
    std::vector<crypto::PrivateKey> token_keys(std::size_t count);

private:
    void ensure_principals(std::size_t count);
    crypto::PrivateKey cached_key(const std::string& name);

    std::filesystem::path key_cache_;
    crypto::PrivateKey server_key_;
    std::vector<Uuid> principal_ids_;
    std::vector<crypto::PrivateKey> principal_keys_;
    std::vector<crypto::PrivateKey> token_keys_;
    OfferingVocabulary vocabulary_;
    PermissionsMatrix permissions_;
};

inline constexpr const char* kBenchOffering = "KPIMON";
inline constexpr const char* kBenchConsumerOffering = "TRAFFIC-STEER";
inline constexpr const char* kBenchLocation = "edge-1";
inline constexpr int kBenchProviders = 4;

/// One end-to-end run: `clients` concurrent startup flows against a fresh
/// server with `workers` threads.
LoadRecord run_load(BenchFixture& fixture, int clients, int workers, int rep = 0);

/// Per-operation client/server wall and CPU totals for the four startup steps.
std::vector<MicroRecord> run_micro(BenchFixture& fixture, int clients, int workers, int rep = 0);

/// One requester sends `requests` GET /metrics to one provider, once per
/// validation mode.
std::vector<TokenCmpRecord> run_token_comparison(BenchFixture& fixture, int requests, int rep = 0);

CheckResult check_micro_ordering(const std::vector<MicroRecord>& records);
CheckResult check_token_direction(const std::vector<TokenCmpRecord>& records);
CheckResult check_scaling(const std::vector<LoadRecord>& records);
CheckResult check_client_lightness(const std::vector<LoadRecord>& records);

/// Adds every check whose inputs are present in `report`. The scaling check
/// needs load runs at 2, 6, 12 and 20 workers.
void evaluate(BenchReport& report);

/// Writes load.csv, micro.csv and token_cmp.csv for the experiments present in
/// `report`, plus summary.txt. Throws Error(Io).
void emit_report(const BenchReport& report, const std::filesystem::path& out_dir);

/// Runs whatever `config` asks for, printing progress to `log` when non-null.
BenchReport run_all(const BenchConfig& config, bool load, bool micro, bool token_cmp, std::ostream* log = nullptr);

}  // namespace xrf::bench
