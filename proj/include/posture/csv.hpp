#pragma once

#include <string>
#include <vector>

namespace posture {

// RFC 4180 style: quoted fields may hold commas, quotes (doubled) and newlines.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

// Parses and checks the header row matches `header` exactly; returns data rows,
// each padded/checked to the header width.
std::vector<std::vector<std::string>> read_csv_file(const std::string& path,
                                                    const std::vector<std::string>& header);

std::string csv_escape(const std::string& field);
std::string csv_row(const std::vector<std::string>& fields);

} // namespace posture
