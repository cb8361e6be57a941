#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "posture/chain_validation.hpp"
#include "posture/cipher_catalog.hpp"
#include "posture/fingerprint.hpp"
#include "posture/fixture_chain.hpp"
#include "posture/nvd.hpp"
#include "posture/tls_types.hpp"

namespace posture {

// Loopback mock servers speaking just enough of the TLS record layer (and
// plain banner protocols) to give the scanner exact ground truth.

enum class BehaviorFlag { SlowResponder, CloseOnHello, MalformedServerHello, AcceptDeflate };

const char* behavior_flag_name(BehaviorFlag f);
std::optional<BehaviorFlag> behavior_flag_from_name(const std::string& s);

// SlowResponder sits on the hello this long before answering.
constexpr int kSlowResponderDelayMs = 600;

struct ServerScenario {
    std::string id;
    std::map<ProtocolVersion, std::set<uint32_t>> version_config;
    FlawSpec chain_fixture{{}, 2};
    std::string chain_pem_path; // when set, served instead of a generated fixture
    std::map<int, std::string> banners;
    std::set<BehaviorFlag> behavior_flags;

    bool tls13_only() const {
        return version_config.size() == 1 &&
               version_config.count(ProtocolVersion::TLS1_3) == 1;
    }
};

// Throws Errc::ScenarioInvalid when a cipher is unknown, not valid for its
// version, a version has an empty set, or the scenario cannot be served
// (TLS1.3-only with a weak-key fixture has no usable signature scheme).
void validate_scenario(const ServerScenario& s, const CipherCatalog& catalog);

// Block-per-scenario text format, see data/sample_scenarios.txt.
std::vector<ServerScenario> load_scenarios(const std::string& path);
std::string scenario_to_text(const ServerScenario& s);
void save_scenarios(const std::string& path, const std::vector<ServerScenario>& scenarios);

struct ConnectionRecord {
    std::chrono::steady_clock::time_point accepted_at;
    int port = 0;          // the declared port (0 for the TLS endpoint)
    size_t bytes_in = 0;
    std::string response;  // short response-kind tag
};

struct FleetEndpoint {
    std::string host;
    int tls_port = 0;
    std::vector<int> banner_ports;
};

class Fleet {
public:
    Fleet(Fleet&&) noexcept;
    Fleet& operator=(Fleet&&) noexcept;
    Fleet(const Fleet&) = delete;
    ~Fleet();

    // Binds every scenario to its own loopback address, TLS on an ephemeral
    // port, banners on their declared ports. Errc::PortExhaustion /
    // Errc::ScenarioInvalid.
    static Fleet spawn(std::vector<ServerScenario> scenarios, const CipherCatalog& catalog);

    void shutdown(); // idempotent; joins all server threads

    size_t size() const;
    const ServerScenario& scenario(size_t i) const;
    const FleetEndpoint& endpoint(size_t i) const;
    const FixtureChain& fixture(size_t i) const;

    int connection_count(size_t i) const;
    std::vector<ConnectionRecord> connection_log(size_t i) const;

    // Everything a scan of this fleet needs to trust / revoke correctly.
    std::string trust_store_pem() const;
    RevocationData revocations() const;

private:
    Fleet();
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Ground truth a full scan of one scenario must reproduce.
struct ScenarioExpectation {
    std::map<ProtocolVersion, std::set<uint32_t>> versions;
    bool deflate = false;
    std::set<uint32_t> weak;
    std::set<uint32_t> insecure;
    std::set<ChainIssue> chain_issues;
    bool chain_trusted = true;
    std::map<int, ServiceFingerprint> services;
    std::set<std::string> cve_ids;
};

struct ScenarioWithTruth {
    ServerScenario scenario;
    ScenarioExpectation expected;
};

// Deterministic per seed. Scenarios sample version subsets (always at least
// one v3+ version), 1-4 ciphers per version, a fixture flaw spec, and banners
// drawn from a pool the rule table matches; expectations are attached from
// the same draws. rules/index feed the fingerprint and CVE expectations.
std::vector<ScenarioWithTruth> random_scenarios(uint64_t seed, int n,
                                                const CipherCatalog& catalog,
                                                const std::vector<FingerprintRule>& rules,
                                                const NvdIndex& index);

} // namespace posture
