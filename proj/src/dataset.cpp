#include "posture/dataset.hpp"

#include <cctype>
#include <set>

#include "posture/csv.hpp"
#include "posture/error.hpp"
#include "posture/util.hpp"

namespace posture {

const char* region_name(Region r) {
    switch (r) {
    case Region::Africa: return "Africa";
    case Region::Americas: return "Americas";
    case Region::Asia: return "Asia";
    case Region::Europe: return "Europe";
    case Region::Oceania: return "Oceania";
    }
    return "?";
}

const char* income_name(Income i) {
    switch (i) {
    case Income::High: return "High";
    case Income::UpperMiddle: return "UpperMiddle";
    case Income::LowerMiddle: return "LowerMiddle";
    case Income::Low: return "Low";
    }
    return "?";
}

Region region_from_name(const std::string& s) {
    for (Region r : kAllRegions)
        if (s == region_name(r)) return r;
    fail(Errc::SchemaError, "unknown region '" + s + "'");
}

Income income_from_name(const std::string& s) {
    for (Income i : kAllIncomes)
        if (s == income_name(i)) return i;
    fail(Errc::SchemaError, "unknown income class '" + s + "'");
}

SubregionTable SubregionTable::load(const std::string& csv_path) {
    SubregionTable table;
    for (const auto& row : read_csv_file(csv_path, {"sub_region", "region"}))
        table.map_[row[0]] = region_from_name(row[1]);
    if (table.map_.empty()) fail(Errc::SchemaError, csv_path + ": no sub-regions");
    return table;
}

bool SubregionTable::known(const std::string& sub_region) const {
    return map_.count(sub_region) > 0;
}

Region SubregionTable::region_of(const std::string& sub_region) const {
    auto it = map_.find(sub_region);
    if (it == map_.end()) fail(Errc::SchemaError, "unknown sub-region '" + sub_region + "'");
    return it->second;
}

bool valid_fqdn(const std::string& domain) {
    if (domain.empty() || domain.size() > 253) return false;
    size_t label_len = 0;
    char prev = '.';
    for (size_t i = 0; i < domain.size(); ++i) {
        char c = domain[i];
        if (c == '.') {
            if (label_len == 0 || prev == '-') return false;
            label_len = 0;
        } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '-') {
            if (c == '-' && prev == '.') return false;
            if (++label_len > 63) return false;
        } else {
            return false;
        }
        prev = c;
    }
    return label_len > 0 && prev != '-';
}

std::vector<ScanTarget> load_dataset(const std::string& path, const SubregionTable& table) {
    auto rows = read_csv_file(path, {"domain", "port", "region", "sub_region", "income"});
    std::vector<ScanTarget> targets;
    targets.reserve(rows.size());
    std::set<std::string> seen;
    size_t row_no = 1; // header is row 1
    for (const auto& row : rows) {
        ++row_no;
        std::string where = path + " row " + std::to_string(row_no);
        ScanTarget t;
        t.domain = row[0];
        if (!valid_fqdn(t.domain)) fail(Errc::SchemaError, where + ": bad domain '" + row[0] + "'");
        if (!seen.insert(t.domain).second)
            fail(Errc::DuplicateDomain, where + ": '" + t.domain + "' appears twice");
        long port = 0;
        try {
            port = parse_long(row[1]);
        } catch (const Error&) {
            fail(Errc::SchemaError, where + ": bad port '" + row[1] + "'");
        }
        if (port < 1 || port > 65535) fail(Errc::SchemaError, where + ": port out of range");
        t.port = static_cast<int>(port);
        try {
            t.region = region_from_name(row[2]);
            t.income = income_from_name(row[4]);
        } catch (const Error& e) {
            fail(Errc::SchemaError, where + ": " + e.what());
        }
        t.sub_region = row[3];
        if (!table.known(t.sub_region))
            fail(Errc::SchemaError, where + ": unknown sub-region '" + t.sub_region + "'");
        if (table.region_of(t.sub_region) != t.region)
            fail(Errc::RegionMismatch, where + ": '" + t.sub_region + "' is not in " +
                                           region_name(t.region));
        targets.push_back(std::move(t));
    }
    return targets;
}

} // namespace posture
