#include <gtest/gtest.h>
#include <signal.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "support/fixtures.hpp"
#include "support/process.hpp"

namespace xrf::cli {
namespace {

namespace fs = std::filesystem;
using testing::Process;

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome xrf(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

void write_json(const fs::path& path, const Json& doc) {
    std::ofstream(path) << doc.dump(2);
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override { deployment_ = testing::write_deployment(testing::scratch_dir("cli"), 2); }
    void TearDown() override { fs::remove_all(deployment_.dir); }

    std::string path(const std::string& name) const { return (deployment_.dir / name).string(); }

    std::vector<std::string> serve_args() const {
        return {"serve",         "--permissions", path("permissions.json"), "--trust-store", path("trust_store.json"),
                "--offerings",   path("offerings.json"), "--key", path("server.pem")};
    }

    testing::Deployment deployment_;
};

void expect_flags(const std::string& help, const std::vector<std::string>& flags) {
    for (const auto& f : flags) EXPECT_NE(help.find("--" + f), std::string::npos) << "missing --" << f << " in\n" << help;
}

TEST_F(CliTest, HelpListsEveryFlag) {
    auto r = xrf({"--help"});
    EXPECT_EQ(r.code, kOk);
    for (const auto* sub : {"serve", "client", "keygen", "bench"}) EXPECT_NE(r.out.find(sub), std::string::npos);

    r = xrf({"serve", "--help"});
    EXPECT_EQ(r.code, kOk);
    expect_flags(r.out, {"listen", "workers", "token-ttl", "permissions", "trust-store", "offerings", "key", "issuer",
                         "key-pool", "access-log", "check", "config"});
    r = xrf({"client", "--help"});
    expect_flags(r.out, {"server", "principal", "key", "server-key", "role", "name", "offering", "location", "listen",
                         "listen-workers", "mode", "want-offering", "want-location", "scope", "endpoint", "config"});
    r = xrf({"keygen", "--help"});
    expect_flags(r.out, {"out", "principal", "count", "force", "config"});
    r = xrf({"bench", "load", "--help"});
    expect_flags(r.out, {"out", "reps", "key-cache", "clients", "workers", "config"});
    r = xrf({"bench", "micro", "--help"});
    expect_flags(r.out, {"clients", "workers"});
    r = xrf({"bench", "token-cmp", "--help"});
    expect_flags(r.out, {"requests"});
    r = xrf({"bench", "all", "--help"});
    expect_flags(r.out, {"clients", "workers", "micro-clients", "micro-workers", "requests"});
}

TEST_F(CliTest, UsageErrorsExitOne) {
    EXPECT_EQ(xrf({}).code, kConfigError);
    EXPECT_EQ(xrf({"frobnicate"}).code, kConfigError);
    EXPECT_EQ(xrf({"serve", "--no-such-flag"}).code, kConfigError);
    EXPECT_EQ(xrf({"serve", "--workers", "0"}).code, kConfigError);
    EXPECT_EQ(xrf({"client", "--role", "observer"}).code, kConfigError);
    EXPECT_EQ(xrf({"bench"}).code, kConfigError);
    EXPECT_EQ(xrf({"bench", "load", "--workers", "2,x"}).code, kConfigError);
    EXPECT_EQ(xrf({"keygen"}).code, kConfigError);
}

TEST_F(CliTest, CheckPrintsMergedConfig) {
    auto args = serve_args();
    args.push_back("--check");
    auto r = xrf(args);
    ASSERT_EQ(r.code, kOk) << r.err;
    const auto doc = Json::parse(r.out);
    EXPECT_EQ(doc.at("workers"), 4);
    EXPECT_EQ(doc.at("token-ttl"), 300);
    EXPECT_EQ(doc.at("principals"), 2);
}

// Defaults < config file < flags.
TEST_F(CliTest, ConfigFilePrecedence) {
    write_json(path("serve.json"), Json{{"workers", 9}, {"token-ttl", 120}, {"issuer", "from-file"}});
    auto args = serve_args();
    for (const auto* a : {"--check", "--config"}) args.push_back(a);
    args.push_back(path("serve.json"));
    args.push_back("--workers");
    args.push_back("3");
    auto r = xrf(args);
    ASSERT_EQ(r.code, kOk) << r.err;
    const auto doc = Json::parse(r.out);
    EXPECT_EQ(doc.at("workers"), 3);
    EXPECT_EQ(doc.at("token-ttl"), 120);
    EXPECT_EQ(doc.at("issuer"), "from-file");
    EXPECT_EQ(doc.at("listen"), "127.0.0.1:8080");
}

TEST_F(CliTest, ConfigFileCanCarryPaths) {
    write_json(path("all.json"), Json{{"permissions", path("permissions.json")},
                                      {"trust-store", path("trust_store.json")},
                                      {"offerings", path("offerings.json")},
                                      {"key", path("server.pem")},
                                      {"check", true}});
    auto r = xrf({"serve", "--config", path("all.json")});
    EXPECT_EQ(r.code, kOk) << r.err;
}

TEST_F(CliTest, BadConfigFileExitsOne) {
    write_json(path("unknown.json"), Json{{"wrokers", 3}});
    auto args = serve_args();
    args.insert(args.end(), {"--check", "--config", path("unknown.json")});
    auto r = xrf(args);
    EXPECT_EQ(r.code, kConfigError);
    EXPECT_NE(r.err.find("wrokers"), std::string::npos) << r.err;

    write_json(path("typed.json"), Json{{"workers", "many"}});
    args.back() = path("typed.json");
    EXPECT_EQ(xrf(args).code, kConfigError);

    args.back() = path("missing.json");
    EXPECT_EQ(xrf(args).code, kConfigError);
}

TEST_F(CliTest, BadInputFileIsNamed) {
    std::ofstream(path("broken.json")) << "{\"KPIMON\": [{\"endpoint\": 5}]}";
    auto args = serve_args();
    args[2] = path("broken.json");
    args.push_back("--check");
    auto r = xrf(args);
    EXPECT_EQ(r.code, kConfigError);
    EXPECT_NE(r.err.find(path("broken.json")), std::string::npos) << r.err;

    args = serve_args();
    args[8] = path("nope.pem");
    args.push_back("--check");
    r = xrf(args);
    EXPECT_EQ(r.code, kConfigError);
    EXPECT_NE(r.err.find("nope.pem"), std::string::npos) << r.err;
}

TEST_F(CliTest, KeygenWritesKeysAndRefusesToOverwrite) {
    const auto out = deployment_.dir / "generated";
    const auto id = Uuid::random();
    auto r = xrf({"keygen", "--out", out.string(), "--principal", id.str()});
    ASSERT_EQ(r.code, kOk) << r.err;
    EXPECT_TRUE(fs::exists(out / (id.str() + ".pem")));
    EXPECT_TRUE(fs::exists(out / "server.pem"));
    EXPECT_TRUE(fs::exists(out / "server.pub.pem"));
    const auto perms = fs::status(out / (id.str() + ".pem")).permissions();
    EXPECT_EQ(perms & (fs::perms::group_all | fs::perms::others_all), fs::perms::none);

    const auto trust = crypto::TrustStore::load(out / "trust_store.json");
    ASSERT_TRUE(trust.find(id));
    const auto key = crypto::PrivateKey::load(out / (id.str() + ".pem"));
    EXPECT_EQ(*trust.find(id), key.public_key());

    r = xrf({"keygen", "--out", out.string(), "--principal", id.str()});
    EXPECT_EQ(r.code, kRuntimeError);
    EXPECT_NE(r.err.find("--force"), std::string::npos);
    EXPECT_EQ(crypto::PrivateKey::load(out / (id.str() + ".pem")).public_key(), key.public_key());

    EXPECT_EQ(xrf({"keygen", "--out", out.string(), "--principal", "not-a-uuid"}).code, kConfigError);
}

TEST_F(CliTest, ServeUntilInterrupted) {
    auto args = serve_args();
    args.insert(args.begin(), testing::xrf_binary());
    args.insert(args.end(), {"--listen", "127.0.0.1:0", "--key-pool", "1"});
    Process server(args);
    const auto line = server.wait_for("listening");
    ASSERT_TRUE(line);
    EXPECT_NE(line->find("http://127.0.0.1:"), std::string::npos);
    server.signal(SIGINT);
    const auto stats = server.wait_for("\"stats\"");
    ASSERT_TRUE(stats);
    const auto doc = Json::parse(*stats);
    EXPECT_EQ(doc.at("signal"), SIGINT);
    EXPECT_EQ(doc.at("stats").at("requests"), 0);
    EXPECT_EQ(server.wait(), 0);
}

TEST_F(CliTest, ServeBindFailureIsRuntimeError) {
    testing::ServerHarness taken;
    auto args = serve_args();
    args.insert(args.begin(), testing::xrf_binary());
    args.insert(args.end(), {"--listen", taken.address().str(), "--key-pool", "1"});
    Process server(args);
    EXPECT_EQ(server.wait(), kRuntimeError);
}

TEST_F(CliTest, BenchRejectsBadCounts) {
    EXPECT_EQ(xrf({"bench", "load", "--reps", "0"}).code, kConfigError);
    EXPECT_EQ(xrf({"bench", "load", "--clients", "0"}).code, kConfigError);
}

}  // namespace
}  // namespace xrf::cli
