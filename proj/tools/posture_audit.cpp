#include <signal.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "posture/aggregate.hpp"
#include "posture/error.hpp"
#include "posture/fixture_chain.hpp"
#include "posture/nvd.hpp"
#include "posture/orchestrator.hpp"
#include "posture/prober.hpp"
#include "posture/simfleet.hpp"
#include "posture/util.hpp"
#include "posture/x509_parse.hpp"

namespace fs = std::filesystem;
using namespace posture;
using nlohmann::json;

namespace {

// 0 success, 1 config error, 2 partial run, 3 internal error
constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kPartialRun = 2;
constexpr int kInternalError = 3;

std::string data_home() {
    if (const char* env = std::getenv("POSTURE_AUDIT_HOME")) return env;
#ifdef POSTURE_DATA_DIR
    return POSTURE_DATA_DIR;
#else
    return "data";
#endif
}

struct CommonOpts {
    std::string dataset;
    std::string catalog;
    std::string trust_store;
    std::vector<std::string> nvd_snapshots;
    std::string rules;
    std::string crl;
    std::string blocklist;
    std::string rating_guide;
    std::string ports_csv;
    int concurrency = 4;
    int per_host_delay_ms = 250;
    int timeout_ms = 5000;
    int64_t validation_at = 0;
    std::string output = "runs";
    std::string run_id;

    void attach(CLI::App* cmd) {
        cmd->add_option("--dataset", dataset, "dataset CSV");
        cmd->add_option("--catalog", catalog, "cipher catalog CSV");
        cmd->add_option("--trust-store", trust_store,
                        "trusted roots: a directory of PEMs or a single PEM bundle");
        cmd->add_option("--nvd-snapshot", nvd_snapshots, "NVD snapshot JSONL (repeatable)");
        cmd->add_option("--rules", rules, "fingerprint rule CSV");
        cmd->add_option("--crl", crl, "revocation CSV");
        cmd->add_option("--blocklist", blocklist, "SPKI blocklist file");
        cmd->add_option("--rating-guide", rating_guide, "rating guide file");
        cmd->add_option("--ports", ports_csv, "banner ports, comma separated");
        cmd->add_option("--concurrency", concurrency, "worker pool width");
        cmd->add_option("--per-host-delay", per_host_delay_ms, "per-host delay in ms");
        cmd->add_option("--timeout", timeout_ms, "connect/read timeout in ms");
        cmd->add_option("--validate-at", validation_at,
                        "epoch seconds for certificate validity checks (0 = now)");
        cmd->add_option("--output", output, "output directory");
        cmd->add_option("--run-id", run_id, "run id (generated when omitted)");
    }

    ScanConfig to_config() const {
        std::string home = data_home();
        ScanConfig c;
        c.dataset_path = dataset.empty() ? home + "/sample_dataset.csv" : dataset;
        c.subregions_path = home + "/un_subregions.csv";
        c.catalog_path = catalog.empty() ? home + "/cipher_catalog.csv" : catalog;
        if (std::filesystem::is_regular_file(trust_store))
            c.trust_store_pem = read_file(trust_store);
        else
            c.trust_store_dir = trust_store;
        c.crl_path = crl;
        c.blocklist_path = blocklist;
        c.nvd_snapshot_paths = nvd_snapshots;
        if (c.nvd_snapshot_paths.empty())
            c.nvd_snapshot_paths.push_back(home + "/nvd_snapshot_top20.jsonl");
        c.rules_path = rules.empty() ? home + "/fingerprint_rules.csv" : rules;
        c.rating_guide_path = rating_guide.empty() ? home + "/rating_guide.txt" : rating_guide;
        if (!ports_csv.empty())
            for (const auto& tok : split(ports_csv, ','))
                c.ports.push_back(static_cast<int>(parse_long(trim(tok))));
        c.concurrency = concurrency;
        c.validation_at = validation_at;
        c.per_host_delay = std::chrono::milliseconds(per_host_delay_ms);
        c.connect_timeout = std::chrono::milliseconds(timeout_ms);
        c.read_timeout = std::chrono::milliseconds(timeout_ms);
        c.output_dir = output;
        c.run_id = run_id;
        return c;
    }
};

std::pair<std::string, int> split_host_port(const std::string& arg, int default_port) {
    auto colon = arg.rfind(':');
    if (colon == std::string::npos) return {arg, default_port};
    return {arg.substr(0, colon), static_cast<int>(parse_long(arg.substr(colon + 1)))};
}

ScanTarget target_for(const std::string& host, int port) {
    ScanTarget t;
    t.domain = host;
    t.port = port;
    t.sub_region = "Western Europe";
    return t;
}

int cmd_scan(const CommonOpts& opts) {
    ScanRun run = run_scan(opts.to_config());
    int complete = run.count(DomainStatus::Complete);
    std::cout << "run " << run.run_id << ": " << complete << "/" << run.statuses.size()
              << " complete, " << run.count(DomainStatus::Partial) << " partial, "
              << run.count(DomainStatus::Unreachable) << " unreachable\n"
              << "reports: " << run.report_log_path << "\n";
    return complete == static_cast<int>(run.statuses.size()) ? kOk : kPartialRun;
}

int cmd_resume(const CommonOpts& opts, const std::string& run_id) {
    ScanRun run = resume_scan(opts.to_config(), run_id);
    int complete = run.count(DomainStatus::Complete);
    std::cout << "run " << run.run_id << " resumed: " << complete << "/" << run.statuses.size()
              << " complete\n";
    return complete == static_cast<int>(run.statuses.size()) ? kOk : kPartialRun;
}

void print_matrix(const ProtocolSupportMatrix& matrix, const CipherCatalog& catalog) {
    for (auto v : kAllVersions) {
        const VersionSupport& s = matrix.per_version.at(v);
        if (!s.supported) continue;
        std::cout << "  " << version_name(v) << ":";
        for (uint32_t c : s.accepted_ciphers) {
            const CipherSuite* suite = catalog.find(c);
            std::cout << " " << (suite ? suite->iana_name : hex_code(c));
        }
        std::cout << "\n";
    }
    std::cout << "  deflate compression: " << (matrix.compression_deflate ? "accepted" : "no")
              << "\n  probes: " << matrix.probe_count << " in " << matrix.elapsed.count()
              << " ms\n";
}

int cmd_probe_tls(const CommonOpts& opts, const std::string& target) {
    auto [host, port] = split_host_port(target, 443);
    ScanConfig config = opts.to_config();
    ScanDeps deps = load_scan_deps(config);
    auto matrix = enumerate_protocols(host, port, deps.catalog, config.policy());
    std::cout << host << ":" << port << "\n";
    print_matrix(matrix, deps.catalog);
    return kOk;
}

int cmd_analyze_cert(const CommonOpts& opts, const std::string& arg, int64_t at) {
    ScanConfig config = opts.to_config();
    ScanDeps deps = load_scan_deps(config);

    ChainReport report;
    if (fs::exists(arg) && !fs::is_directory(arg)) {
        RawChain raw;
        raw.der_certificates = pem_to_der_blocks(read_file(arg));
        ParsedChain parsed = parse_chain(raw);
        if (parsed.error_index)
            fail(Errc::DerSyntaxError,
                 "certificate " + std::to_string(*parsed.error_index) + ": " +
                     parsed.error_detail);
        std::string hostname = parsed.records.front().subject_alt_names.empty()
                                   ? ""
                                   : parsed.records.front().subject_alt_names.front();
        report = validate_chain(parsed.records, hostname, deps.store, deps.revocations,
                                at ? at : static_cast<int64_t>(time(nullptr)));
    } else {
        auto [host, port] = split_host_port(arg, 443);
        auto matrix = enumerate_protocols(host, port, deps.catalog, config.policy());
        RawChain raw = fetch_certificate_chain(host, port, matrix, config.policy());
        ParsedChain parsed = parse_chain(raw);
        if (parsed.error_index)
            fail(Errc::DerSyntaxError,
                 "certificate " + std::to_string(*parsed.error_index) + ": " +
                     parsed.error_detail);
        report = validate_chain(parsed.records, host, deps.store, deps.revocations,
                                at ? at : static_cast<int64_t>(time(nullptr)));
    }

    std::cout << "chain length " << report.chain.size() << ", "
              << (report.trusted ? "trusted" : "untrusted") << "\n";
    for (const auto& issue : report.issues)
        std::cout << "  " << issue_code_name(issue.code) << " @" << issue.certificate_index
                  << (issue.detail.empty() ? "" : " " + issue.detail) << "\n";
    if (report.issues.empty()) std::cout << "  no issues\n";
    return kOk;
}

int cmd_vuln(const CommonOpts& opts, const std::string& host) {
    ScanConfig config = opts.to_config();
    ScanDeps deps = load_scan_deps(config);
    const std::vector<int>& ports = config.ports.empty() ? kDefaultProbePorts : config.ports;
    auto fps = fingerprint_services(host, ports, config.policy(), deps.rules);
    if (fps.empty()) {
        std::cout << host << ": no recognizable services\n";
        return kOk;
    }
    for (const auto& fp : fps) {
        auto ids = deps.nvd.lookup(fp);
        std::cout << host << ":" << fp.port << " " << fp.display() << " " << fp.version << " ("
                  << ids.size() << " CVEs)\n";
        for (const auto& id : ids) {
            const CveRecord* rec = deps.nvd.record(id);
            std::cout << "  " << id << " " << severity_name(rec->severity) << " "
                      << rec->base_score << "\n";
        }
    }
    return kOk;
}

int cmd_grade(const CommonOpts& opts, const std::string& target) {
    auto [host, port] = split_host_port(target, 443);
    ScanConfig config = opts.to_config();
    ScanDeps deps = load_scan_deps(config);
    DomainPostureReport report = scan_domain(target_for(host, port), deps, config);
    if (!report.matrix_done) {
        std::cout << host << ": " << report.annotation << "\n";
        return kPartialRun;
    }
    std::cout << host << ":" << port << "\n";
    print_matrix(report.matrix, deps.catalog);
    if (report.grade) {
        std::cout << "  score " << report.grade->numeric_score << " -> " << report.grade->letter
                  << "\n";
        for (const auto& cap : report.grade->caps_applied) std::cout << "  cap: " << cap << "\n";
    }
    return kOk;
}

int cmd_aggregate(const CommonOpts& opts, const std::string& run_id,
                  const std::string& group_by) {
    ScanConfig config = opts.to_config();
    std::string log_path = config.output_dir + "/" + run_id + "/reports.jsonl";
    if (!fs::exists(log_path)) fail(Errc::UnknownRun, run_id);
    auto reports = load_report_log(log_path);
    AggregateStats stats = aggregate(reports, grouping_from_name(group_by));
    std::string out_dir = config.output_dir + "/" + run_id + "/aggregate-" + group_by;
    emit_reports(stats, reports, out_dir);
    for (const auto& [name, group] : stats.groups)
        std::cout << name << ": n=" << group.n << " weak-share=" << group.share_with_weak
                  << " chain-issues=" << group.chain_issue_share
                  << " exposed=" << group.share_exposed << "\n";
    std::cout << "written to " << out_dir << "\n";
    return kOk;
}

int cmd_ingest_nvd(const std::string& source, const std::string& out_path) {
    std::string body;
    if (starts_with(source, "https://") || starts_with(source, "http://")) {
        auto scheme_end = source.find("://");
        std::string rest = source.substr(scheme_end + 3);
        auto slash = rest.find('/');
        std::string origin = source.substr(0, scheme_end + 3) +
                             (slash == std::string::npos ? rest : rest.substr(0, slash));
        std::string path = slash == std::string::npos ? "/" : rest.substr(slash);
        httplib::Client client(origin);
        client.set_follow_location(true);
        client.set_connection_timeout(30);
        client.set_read_timeout(120);
        auto res = client.Get(path);
        if (!res || res->status != 200)
            fail(Errc::IoError, "fetch failed: " + source +
                                    (res ? " (status " + std::to_string(res->status) + ")"
                                         : " (no response)"));
        body = res->body;
    } else {
        body = read_file(source);
    }
    size_t n = convert_nvd_feed(body, out_path);
    std::cout << "wrote " << n << " records to " << out_path << "\n";
    return kOk;
}

std::string fleet_state_path(const std::string& output_dir) {
    return output_dir + "/fleet.json";
}

volatile std::sig_atomic_t g_stop_fleet = 0;

int cmd_fleet_up(const CommonOpts& opts, const std::string& scenario_file) {
    ScanConfig config = opts.to_config();
    CipherCatalog catalog = CipherCatalog::load(config.catalog_path);
    auto scenarios = load_scenarios(scenario_file);
    Fleet fleet = Fleet::spawn(std::move(scenarios), catalog);

    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    json endpoints = json::array();
    for (size_t i = 0; i < fleet.size(); ++i) {
        const auto& ep = fleet.endpoint(i);
        endpoints.push_back({{"id", fleet.scenario(i).id},
                             {"host", ep.host},
                             {"tls_port", ep.tls_port},
                             {"banner_ports", ep.banner_ports}});
    }
    json state = {{"pid", getpid()}, {"endpoints", endpoints}};
    std::string state_path = fleet_state_path(config.output_dir);
    {
        std::ofstream out(state_path);
        if (!out) fail(Errc::IoError, "cannot write " + state_path);
        out << state.dump(2) << "\n";
    }
    std::string store_path = config.output_dir + "/fleet_roots.pem";
    {
        std::ofstream out(store_path);
        out << fleet.trust_store_pem();
    }

    std::cout << "fleet of " << fleet.size() << " servers up; state in " << state_path
              << "\nroots in " << store_path << "\nCtrl-C or `fleet down` to stop\n";
    for (size_t i = 0; i < fleet.size(); ++i)
        std::cout << "  " << fleet.scenario(i).id << " " << fleet.endpoint(i).host << ":"
                  << fleet.endpoint(i).tls_port << "\n";

    std::signal(SIGINT, [](int) { g_stop_fleet = 1; });
    std::signal(SIGTERM, [](int) { g_stop_fleet = 1; });
    while (!g_stop_fleet) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    fleet.shutdown();
    fs::remove(state_path, ec);
    std::cout << "fleet down\n";
    return kOk;
}

int cmd_fleet_down(const CommonOpts& opts) {
    std::string state_path = fleet_state_path(opts.to_config().output_dir);
    if (!fs::exists(state_path)) {
        std::cout << "no fleet state at " << state_path << "\n";
        return kConfigError;
    }
    json state = json::parse(read_file(state_path));
    int pid = state.at("pid").get<int>();
    if (kill(pid, SIGTERM) != 0 && errno != ESRCH)
        fail(Errc::IoError, "cannot signal fleet process " + std::to_string(pid));
    std::error_code ec;
    fs::remove(state_path, ec);
    std::cout << "sent shutdown to fleet pid " << pid << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"TLS security posture auditor"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto* scan = app.add_subcommand("scan", "run the full pipeline over a dataset");
    opts.attach(scan);

    auto* resume = app.add_subcommand("resume", "resume an interrupted run");
    std::string resume_run_id;
    resume->add_option("run_id", resume_run_id)->required();
    opts.attach(resume);

    auto* probe = app.add_subcommand("probe-tls", "protocol and cipher enumeration");
    std::string probe_target;
    probe->add_option("target", probe_target, "host[:port]")->required();
    opts.attach(probe);

    auto* cert = app.add_subcommand("analyze-cert", "fetch or load and validate a chain");
    std::string cert_arg;
    int64_t cert_at = 0;
    cert->add_option("target", cert_arg, "PEM file or host[:port]")->required();
    cert->add_option("--at", cert_at, "validation instant (unix seconds)");
    opts.attach(cert);

    auto* vuln = app.add_subcommand("vuln", "service fingerprints and CVE matches");
    std::string vuln_host;
    vuln->add_option("host", vuln_host)->required();
    opts.attach(vuln);

    auto* grade = app.add_subcommand("grade", "single-host posture grade");
    std::string grade_target;
    grade->add_option("target", grade_target, "host[:port]")->required();
    opts.attach(grade);

    auto* agg = app.add_subcommand("aggregate", "aggregate a finished run");
    std::string agg_run_id, agg_group = "global";
    agg->add_option("run_id", agg_run_id)->required();
    agg->add_option("--group-by", agg_group, "region|sub-region|income|global");
    opts.attach(agg);

    auto* ingest = app.add_subcommand("ingest-nvd", "convert an NVD feed to snapshot lines");
    std::string ingest_source, ingest_out = "nvd_snapshot.jsonl";
    ingest->add_option("source", ingest_source, "feed URL or file")->required();
    ingest->add_option("-o,--output-file", ingest_out, "snapshot output path");

    auto* fleet = app.add_subcommand("fleet", "mock server fleet");
    fleet->require_subcommand(1);
    auto* fleet_up = fleet->add_subcommand("up", "serve scenarios until stopped");
    std::string fleet_file;
    fleet_up->add_option("scenario_file", fleet_file)->required();
    opts.attach(fleet_up);
    auto* fleet_down = fleet->add_subcommand("down", "stop a running fleet");
    opts.attach(fleet_down);

    CLI11_PARSE(app, argc, argv);

    try {
        if (scan->parsed()) return cmd_scan(opts);
        if (resume->parsed()) return cmd_resume(opts, resume_run_id);
        if (probe->parsed()) return cmd_probe_tls(opts, probe_target);
        if (cert->parsed()) return cmd_analyze_cert(opts, cert_arg, cert_at);
        if (vuln->parsed()) return cmd_vuln(opts, vuln_host);
        if (grade->parsed()) return cmd_grade(opts, grade_target);
        if (agg->parsed()) return cmd_aggregate(opts, agg_run_id, agg_group);
        if (ingest->parsed()) return cmd_ingest_nvd(ingest_source, ingest_out);
        if (fleet->parsed()) {
            if (fleet_up->parsed()) return cmd_fleet_up(opts, fleet_file);
            if (fleet_down->parsed()) return cmd_fleet_down(opts);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.code()) {
        case Errc::ConfigError:
        case Errc::SchemaError:
        case Errc::IoError:
        case Errc::UnknownRun:
        case Errc::ScenarioInvalid:
            return kConfigError;
        case Errc::Unreachable:
        case Errc::NoChainPresented:
        case Errc::HandshakeFailure:
            return kPartialRun;
        default:
            return kInternalError;
        }
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternalError;
    }
    return kInternalError;
}
