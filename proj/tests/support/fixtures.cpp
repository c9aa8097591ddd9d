#include "fixtures.hpp"

#include <cstdio>
#include <fstream>
#include <map>

#include "xrf/core/error.hpp"

namespace xrf::testing {
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

std::filesystem::path key_dir() { return std::filesystem::path(XRF_TEST_KEY_DIR); }

}  // namespace

const crypto::PrivateKey& test_key(std::size_t index) {
    static std::mutex mutex;
    static std::map<std::size_t, crypto::PrivateKey> keys;
    std::lock_guard lock(mutex);
    if (auto it = keys.find(index); it != keys.end()) return it->second;

    std::filesystem::create_directories(key_dir());
    const auto path = key_dir() / ("key-" + std::to_string(index) + ".pem");
    crypto::PrivateKey key;
    if (std::filesystem::exists(path)) {
        key = crypto::PrivateKey::load(path);
    } else {
        key = crypto::PrivateKey::generate();
        const auto tmp = path.string() + "." + Uuid::random().str();
        {
            std::ofstream out(tmp);
            out << key.to_pem();
        }
        std::filesystem::rename(tmp, path);
    }
    return keys.emplace(index, std::move(key)).first->second;
}

CyclingKeySource::CyclingKeySource(std::size_t first_key, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) keys_.push_back(test_key(first_key + i));
}

crypto::KeyPair CyclingKeySource::acquire() {
    const auto n = acquired_.fetch_add(1);
    const auto& key = keys_[n % keys_.size()];
    return crypto::KeyPair{Uuid::random(), key, key.public_key()};
}

PermissionsMatrix test_permissions() { return PermissionsMatrix::from_json(kPermissions); }

OfferingVocabulary test_vocabulary() { return OfferingVocabulary({"KPIMON", "TRAFFIC-STEER", "QOE-PREDICT"}); }

Uuid principal(std::size_t index) {
    char text[37];
    std::snprintf(text, sizeof text, "00000000-0000-4000-8000-%012zx", index + 1);
    return Uuid::from_string(text);
}

crypto::TrustStore trust_for(std::size_t principals) {
    crypto::TrustStore trust;
    for (std::size_t i = 1; i <= principals; ++i) trust.insert(principal(i), test_key(i).public_key());
    return trust;
}

const crypto::PrivateKey& server_key() { return test_key(0); }

server::ServerOptions test_server_options(std::size_t principals, int workers) {
    server::ServerOptions options;
    options.workers = workers;
    options.server_key = server_key();
    options.trust = trust_for(principals);
    options.vocabulary = test_vocabulary();
    options.permissions = test_permissions();
    options.keys = std::make_shared<CyclingKeySource>();
    return options;
}

ServerHarness::ServerHarness(std::size_t principals, int workers, std::shared_ptr<server::KeySource> keys,
                             TestClock* clock, std::ostream* access_log) {
    auto options = test_server_options(principals, workers);
    if (keys) options.keys = std::move(keys);
    options.access_log = access_log;
    if (clock != nullptr) options.clock = clock->fn();
    server = std::make_unique<server::XrfServer>(std::move(options));
    server->start();
}

ServerHarness::ServerHarness(server::ServerOptions options) {
    server = std::make_unique<server::XrfServer>(std::move(options));
    server->start();
}

ServerHarness::~ServerHarness() { server->stop(); }

client::ClientConfig client_config(std::size_t index, const HostPort& server, const std::string& name,
                                   const std::string& offering, const std::string& endpoint_address) {
    client::ClientConfig config;
    config.server = server;
    config.principal = principal(index);
    config.own_key = test_key(index);
    config.server_key = server_key().public_key();
    config.profile = client::ProfileSeed{name, offering, "edge-1", endpoint_address};
    config.desired_offering = "KPIMON";
    config.desired_location = "edge-1";
    return config;
}

std::filesystem::path Deployment::principal_key(std::size_t index) const {
    return dir / (principal(index).str() + ".pem");
}

Deployment write_deployment(const std::filesystem::path& dir, std::size_t principals) {
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream out(dir / name);
        out << text;
    };
    write("server.pem", server_key().to_pem());
    write("server.pub.pem", server_key().public_key().to_pem());
    for (std::size_t i = 1; i <= principals; ++i) write(principal(i).str() + ".pem", test_key(i).to_pem());
    trust_for(principals).save(dir / "trust_store.json");
    std::filesystem::copy_file(std::filesystem::path(XRF_CONFIG_DIR) / "permissions.json", dir / "permissions.json",
                               std::filesystem::copy_options::overwrite_existing);
    std::filesystem::copy_file(std::filesystem::path(XRF_CONFIG_DIR) / "offerings.json", dir / "offerings.json",
                               std::filesystem::copy_options::overwrite_existing);
    return Deployment{dir};
}

std::filesystem::path scratch_dir(const std::string& label) {
    auto dir = std::filesystem::temp_directory_path() / ("xrf-" + label + "-" + Uuid::random().str());
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace xrf::testing
