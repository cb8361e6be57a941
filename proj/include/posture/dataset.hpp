#pragma once

#include <map>
#include <string>
#include <vector>

namespace posture {

enum class Region { Africa, Americas, Asia, Europe, Oceania };
enum class Income { High, UpperMiddle, LowerMiddle, Low };

inline constexpr Region kAllRegions[] = {Region::Africa, Region::Americas, Region::Asia,
                                         Region::Europe, Region::Oceania};
inline constexpr Income kAllIncomes[] = {Income::High, Income::UpperMiddle, Income::LowerMiddle,
                                         Income::Low};

const char* region_name(Region r);
const char* income_name(Income i);
Region region_from_name(const std::string& s);  // SchemaError on unknown
Income income_from_name(const std::string& s);  // SchemaError on unknown

struct ScanTarget {
    std::string domain;
    int port = 443;
    Region region = Region::Africa;
    std::string sub_region;
    Income income = Income::High;
};

// The 22 UN geoscheme sub-region names and the region each belongs to.
class SubregionTable {
public:
    static SubregionTable load(const std::string& csv_path);

    bool known(const std::string& sub_region) const;
    Region region_of(const std::string& sub_region) const; // SchemaError on unknown
    const std::map<std::string, Region>& entries() const { return map_; }

private:
    std::map<std::string, Region> map_;
};

bool valid_fqdn(const std::string& domain);

// Header `domain,port,region,sub_region,income`. Domains must be unique and
// each sub_region must belong to the row's region.
std::vector<ScanTarget> load_dataset(const std::string& path, const SubregionTable& table);

} // namespace posture
