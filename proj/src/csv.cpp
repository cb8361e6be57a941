#include "posture/csv.hpp"

#include "posture/error.hpp"
#include "posture/util.hpp"

namespace posture {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        row.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        if (row.size() != 1 || !row[0].empty()) rows.push_back(row);
        row.clear();
    };

    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r') {
            // swallowed; \r\n and bare \n both end the row at the \n
        } else if (c == '\n') {
            end_row();
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) fail(Errc::SchemaError, "unterminated quoted CSV field");
    if (field_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

std::vector<std::vector<std::string>> read_csv_file(const std::string& path,
                                                    const std::vector<std::string>& header) {
    auto rows = parse_csv(read_file(path));
    if (rows.empty()) fail(Errc::SchemaError, path + ": empty CSV");
    if (rows[0] != header)
        fail(Errc::SchemaError, path + ": bad header, expected '" + join(header, ",") + "' got '" +
                                    join(rows[0], ",") + "'");
    std::vector<std::vector<std::string>> out(rows.begin() + 1, rows.end());
    for (size_t i = 0; i < out.size(); ++i)
        if (out[i].size() != header.size())
            fail(Errc::SchemaError,
                 path + ": row " + std::to_string(i + 2) + " has " + std::to_string(out[i].size()) +
                     " fields, expected " + std::to_string(header.size()));
    return out;
}

std::string csv_escape(const std::string& field) {
    bool needs_quotes = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

std::string csv_row(const std::vector<std::string>& fields) {
    std::string out;
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += csv_escape(fields[i]);
    }
    out.push_back('\n');
    return out;
}

} // namespace posture
