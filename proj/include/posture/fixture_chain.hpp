#pragma once

#include <set>
#include <string>
#include <vector>

#include "posture/chain_validation.hpp"

namespace posture {

// Chains manufactured to exhibit a chosen flaw set, for validator oracles.

struct FlawSpec {
    std::set<ChainIssueCode> flaws;
    int depth = 2;
};

// Text form: `flaws=SIG,WKY depth=2` (separators: whitespace or ';').
// `flaws=none` or an empty list means a pristine chain.
FlawSpec parse_flaw_spec(const std::string& text);
std::string flaw_spec_to_string(const FlawSpec& spec);

struct FixtureChain {
    std::vector<std::string> chain_pem; // presented order, leaf first
    std::string leaf_key_pem;
    std::set<ChainIssue> expected;
    std::string hostname;               // name validation should run against
    std::vector<std::string> store_pem; // roots the trust store needs
    RevocationData revocations;
};

// Reference instant all fixtures are built around: 2023-01-15T00:00:00Z.
constexpr int64_t kFixtureValidationAt = 1673740800;

// The issue set a spec-built chain must produce, computable without minting
// any keys. Throws UnsatisfiableSpec exactly like generate_fixture_chain.
std::set<ChainIssue> expected_issues_for(const FlawSpec& spec);

FixtureChain generate_fixture_chain(const FlawSpec& spec,
                                    const std::string& hostname = "fixture.test");

// Every single flaw plus every satisfiable pair: 52 specs.
std::vector<FlawSpec> fixture_corpus();

} // namespace posture
