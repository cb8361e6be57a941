#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "posture/chain_validation.hpp"
#include "posture/cipher_catalog.hpp"
#include "posture/dataset.hpp"
#include "posture/fingerprint.hpp"
#include "posture/grading.hpp"
#include "posture/nvd.hpp"
#include "posture/report.hpp"
#include "posture/tls_types.hpp"

namespace posture {

struct ScanConfig {
    std::string dataset_path;
    std::string subregions_path;
    std::string catalog_path;
    std::string trust_store_dir;
    std::string trust_store_pem; // inline roots, appended to the directory's
    std::string crl_path;
    std::string blocklist_path;
    std::vector<std::string> nvd_snapshot_paths;
    std::string rules_path;
    std::string rating_guide_path;

    std::vector<int> ports; // banner ports; empty means kDefaultProbePorts
    int concurrency = 4;
    std::chrono::milliseconds per_host_delay{250};
    std::chrono::milliseconds connect_timeout{5000};
    std::chrono::milliseconds read_timeout{5000};
    int retries = 1;
    int max_probes_per_version = 400;
    int max_probes_per_host = 2000;

    std::string output_dir = "runs";
    std::string run_id;        // generated from the clock when empty
    int64_t validation_at = 0; // chain evaluation instant; 0 means now

    ProbePolicy policy() const {
        ProbePolicy p;
        p.connect_timeout = connect_timeout;
        p.read_timeout = read_timeout;
        p.per_host_delay = per_host_delay;
        p.retries = retries;
        p.max_probes_per_version = max_probes_per_version;
        p.max_probes_per_host = max_probes_per_host;
        return p;
    }
};

// Everything run_scan loads up front; also what the one-shot CLI verbs need.
struct ScanDeps {
    CipherCatalog catalog;
    TrustStore store;
    RevocationData revocations;
    NvdIndex nvd;
    std::vector<FingerprintRule> rules;
    RatingGuide guide;
};

// Loads every referenced file, wrapping any failure in Errc::ConfigError so
// nothing network-facing starts on a broken configuration.
ScanDeps load_scan_deps(const ScanConfig& config);

class CancelToken {
public:
    void cancel() { flag_.store(true); }
    bool cancelled() const { return flag_.load(); }

private:
    std::atomic<bool> flag_{false};
};

struct ScanRun {
    std::string run_id;
    std::string run_dir;
    std::string report_log_path;
    int64_t started_at = 0;
    int64_t finished_at = 0;
    std::string config_digest;
    std::map<std::string, DomainStatus> statuses;

    int count(DomainStatus s) const {
        int n = 0;
        for (const auto& [domain, st] : statuses)
            if (st == s) ++n;
        return n;
    }
};

// The full three-dimension pipeline for one target. Never throws for
// per-domain trouble; the report's status and annotation carry it.
DomainPostureReport scan_domain(const ScanTarget& target, const ScanDeps& deps,
                                const ScanConfig& config, HostPacer* pacer = nullptr);

// Bounded worker pool over the dataset, single writer appending to
// <output_dir>/<run_id>/reports.jsonl as domains finish. Errc::ConfigError
// before any probe when inputs do not load.
ScanRun run_scan(const ScanConfig& config, CancelToken* cancel = nullptr);

// Re-scans everything the prior run left short of Complete, appending to the
// same log. Errc::UnknownRun when the run directory or log is missing.
ScanRun resume_scan(const ScanConfig& config, const std::string& run_id,
                    CancelToken* cancel = nullptr);

} // namespace posture
