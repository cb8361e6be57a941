#include "posture/orchestrator.hpp"

#include <unistd.h>

#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "posture/error.hpp"
#include "posture/prober.hpp"
#include "posture/util.hpp"
#include "posture/x509_parse.hpp"

namespace posture {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string config_digest(const ScanConfig& c) {
    std::ostringstream o;
    o << c.dataset_path << '|' << c.catalog_path << '|' << c.trust_store_dir << '|'
      << c.crl_path << '|' << c.blocklist_path << '|' << c.rules_path << '|'
      << c.rating_guide_path << '|';
    for (const auto& p : c.nvd_snapshot_paths) o << p << ',';
    o << '|';
    for (int p : c.ports) o << p << ',';
    o << '|' << c.concurrency << '|' << c.per_host_delay.count() << '|'
      << c.connect_timeout.count() << '|' << c.read_timeout.count() << '|' << c.retries << '|'
      << c.max_probes_per_version << '|' << c.max_probes_per_host << '|' << c.validation_at;
    return sha256_hex(o.str()).substr(0, 16);
}

std::string make_run_id() {
    auto t = static_cast<int64_t>(time(nullptr));
    static std::atomic<int> counter{0};
    return "run-" + std::to_string(t) + "-" + std::to_string(getpid()) + "-" +
           std::to_string(counter++);
}

void check_config(const ScanConfig& c) {
    if (c.concurrency < 1) fail(Errc::ConfigError, "concurrency must be at least 1");
    if (c.per_host_delay.count() < 0) fail(Errc::ConfigError, "per_host_delay must be >= 0");
    if (c.max_probes_per_host < 1)
        fail(Errc::ConfigError, "max_probes_per_host must be at least 1");
}

void write_manifest(const ScanRun& run, const ScanConfig& config, size_t n_targets) {
    json statuses = json::object();
    for (const auto& [domain, status] : run.statuses)
        statuses[domain] = domain_status_name(status);
    json m = {
        {"run_id", run.run_id},
        {"started_at", run.started_at},
        {"finished_at", run.finished_at},
        {"config_digest", run.config_digest},
        {"dataset", config.dataset_path},
        {"targets", n_targets},
        {"statuses", statuses},
    };
    std::ofstream out(run.run_dir + "/manifest.json");
    if (!out) fail(Errc::IoError, "cannot write " + run.run_dir + "/manifest.json");
    out << m.dump(2) << "\n";
}

struct RunContext {
    const ScanConfig& config;
    const ScanDeps& deps;
    const std::vector<ScanTarget>& targets;
    const std::set<std::string>& already_complete;
    CancelToken* cancel;

    HostPacer pacer;
    std::ofstream log;
    std::mutex write_mu;
    std::atomic<size_t> next{0};
    std::map<std::string, DomainStatus> statuses;

    RunContext(const ScanConfig& cfg, const ScanDeps& d, const std::vector<ScanTarget>& t,
               const std::set<std::string>& done, CancelToken* c, const std::string& log_path)
        : config(cfg), deps(d), targets(t), already_complete(done), cancel(c),
          pacer(cfg.per_host_delay), log(log_path, std::ios::app) {
        if (!log) fail(Errc::IoError, "cannot open report log " + log_path);
    }

    void worker() {
        for (;;) {
            if (cancel && cancel->cancelled()) return;
            size_t i = next.fetch_add(1);
            if (i >= targets.size()) return;
            const ScanTarget& t = targets[i];
            if (already_complete.count(t.domain)) {
                std::lock_guard<std::mutex> lock(write_mu);
                statuses[t.domain] = DomainStatus::Complete;
                continue;
            }
            DomainPostureReport report = scan_domain(t, deps, config, &pacer);
            std::lock_guard<std::mutex> lock(write_mu);
            log << report_to_json(report) << "\n";
            log.flush(); // a crash loses at most the domains in flight
            statuses[t.domain] = report.status;
        }
    }
};

ScanRun run_over(const ScanConfig& config, const std::set<std::string>& already_complete,
                 const std::string& run_id, CancelToken* cancel) {
    check_config(config);
    ScanDeps deps = load_scan_deps(config);

    SubregionTable table;
    std::vector<ScanTarget> targets;
    try {
        table = SubregionTable::load(config.subregions_path);
        targets = load_dataset(config.dataset_path, table);
    } catch (const Error& e) {
        fail(Errc::ConfigError, e.what());
    }

    ScanRun run;
    run.run_id = run_id;
    run.run_dir = config.output_dir + "/" + run.run_id;
    run.report_log_path = run.run_dir + "/reports.jsonl";
    run.started_at = static_cast<int64_t>(time(nullptr));
    run.config_digest = config_digest(config);
    std::error_code ec;
    fs::create_directories(run.run_dir, ec);
    if (ec) fail(Errc::IoError, "cannot create " + run.run_dir);

    RunContext ctx(config, deps, targets, already_complete, cancel, run.report_log_path);
    size_t width = std::min<size_t>(static_cast<size_t>(config.concurrency), targets.size());
    std::vector<std::thread> pool;
    for (size_t i = 0; i < std::max<size_t>(width, 1); ++i)
        pool.emplace_back([&ctx] { ctx.worker(); });
    for (auto& th : pool) th.join();

    for (const auto& t : targets)
        if (!ctx.statuses.count(t.domain)) ctx.statuses[t.domain] = DomainStatus::Skipped;
    run.statuses = std::move(ctx.statuses);
    run.finished_at = static_cast<int64_t>(time(nullptr));
    write_manifest(run, config, targets.size());
    return run;
}

} // namespace

ScanDeps load_scan_deps(const ScanConfig& config) {
    ScanDeps deps;
    try {
        deps.catalog = CipherCatalog::load(config.catalog_path);
        if (!config.trust_store_dir.empty()) deps.store = TrustStore::load_dir(config.trust_store_dir);
        if (!config.trust_store_pem.empty()) {
            TrustStore bundled = TrustStore::from_pem(config.trust_store_pem);
            for (const auto& root : bundled.roots()) deps.store.add(root);
        }
        deps.revocations = RevocationData::load(config.crl_path, config.blocklist_path);
        deps.nvd = NvdIndex::load(config.nvd_snapshot_paths);
        deps.rules = load_fingerprint_rules(config.rules_path);
        deps.guide = RatingGuide::load(config.rating_guide_path);
    } catch (const Error& e) {
        fail(Errc::ConfigError, e.what());
    }
    return deps;
}

DomainPostureReport scan_domain(const ScanTarget& target, const ScanDeps& deps,
                                const ScanConfig& config, HostPacer* pacer) {
    DomainPostureReport r;
    r.target = target;
    r.scanned_at = static_cast<int64_t>(time(nullptr));
    ProbePolicy policy = config.policy();
    HostPacer own_pacer(config.per_host_delay);
    if (!pacer) pacer = &own_pacer;
    HostBudget budget{0, config.max_probes_per_host};

    auto note = [&](const std::string& what) {
        if (!r.annotation.empty()) r.annotation += "; ";
        r.annotation += what;
    };

    try {
        r.matrix = enumerate_protocols(target.domain, target.port, deps.catalog, policy, pacer,
                                       &budget);
        r.matrix_done = true;
        auto counts = count_weak_insecure(r.matrix, deps.catalog);
        r.weak_ciphers = std::move(counts.weak_set);
        r.insecure_ciphers = std::move(counts.insecure_set);
    } catch (const Error& e) {
        if (e.code() == Errc::Unreachable) {
            r.status = DomainStatus::Unreachable;
            note(e.what());
            return r;
        }
        note(e.what());
        r.status = DomainStatus::Partial;
        return r;
    }

    int64_t at = config.validation_at ? config.validation_at
                                      : static_cast<int64_t>(time(nullptr));
    try {
        RawChain raw =
            fetch_certificate_chain(target.domain, target.port, r.matrix, policy, pacer, &budget);
        ParsedChain parsed = parse_chain(raw);
        if (parsed.error_index) {
            note("certificate " + std::to_string(*parsed.error_index) +
                 " unparseable: " + parsed.error_detail);
        } else {
            r.chain = validate_chain(parsed.records, target.domain, deps.store, deps.revocations,
                                     at);
            r.chain_done = true;
            r.chain_path = raw.retrieval_path == RetrievalPath::CompletedHandshake
                               ? "completed-handshake"
                               : "plaintext-certificate";
        }
    } catch (const Error& e) {
        note(e.what());
    }

    try {
        const std::vector<int>& ports = config.ports.empty() ? kDefaultProbePorts : config.ports;
        auto fps = fingerprint_services(target.domain, ports, policy, deps.rules, pacer, &budget);
        r.vuln_done = true;
        for (auto& fp : fps) {
            ServiceReport sr;
            sr.cve_ids = deps.nvd.lookup(fp);
            sr.fingerprint = std::move(fp);
            for (const auto& id : sr.cve_ids) {
                const CveRecord* rec = deps.nvd.record(id);
                if (rec) r.cves.insert(CveHit{id, rec->severity, rec->base_score});
            }
            r.services.push_back(std::move(sr));
        }
    } catch (const Error& e) {
        note(e.what());
    }

    if (r.chain_done)
        r.grade = grade_server(r.matrix, r.chain, deps.catalog, deps.guide);
    else
        r.grade = grade_configuration(r.matrix, false, deps.catalog, deps.guide);

    r.status = (r.matrix_done && r.chain_done && r.vuln_done) ? DomainStatus::Complete
                                                              : DomainStatus::Partial;
    return r;
}

ScanRun run_scan(const ScanConfig& config, CancelToken* cancel) {
    std::string run_id = config.run_id.empty() ? make_run_id() : config.run_id;
    return run_over(config, {}, run_id, cancel);
}

ScanRun resume_scan(const ScanConfig& config, const std::string& run_id, CancelToken* cancel) {
    std::string run_dir = config.output_dir + "/" + run_id;
    std::string log_path = run_dir + "/reports.jsonl";
    if (!fs::exists(log_path)) fail(Errc::UnknownRun, run_id);

    std::set<std::string> done;
    for (const auto& report : load_report_log(log_path))
        if (report.status == DomainStatus::Complete) done.insert(report.target.domain);
    return run_over(config, done, run_id, cancel);
}

} // namespace posture
