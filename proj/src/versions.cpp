#include "posture/versions.hpp"

#include <cctype>
#include <vector>

#include "posture/error.hpp"
#include "posture/util.hpp"

namespace posture {

namespace {

struct Token {
    bool numeric;
    std::string text;
};

std::vector<Token> tokenize_segment(const std::string& seg) {
    std::vector<Token> out;
    size_t i = 0;
    while (i < seg.size()) {
        bool digit = std::isdigit(static_cast<unsigned char>(seg[i])) != 0;
        size_t j = i;
        while (j < seg.size() &&
               (std::isdigit(static_cast<unsigned char>(seg[j])) != 0) == digit)
            ++j;
        out.push_back({digit, seg.substr(i, j - i)});
        i = j;
    }
    return out;
}

int compare_numeric(const std::string& a, const std::string& b) {
    size_t i = a.find_first_not_of('0');
    size_t j = b.find_first_not_of('0');
    std::string_view va = i == std::string::npos ? std::string_view{} : std::string_view(a).substr(i);
    std::string_view vb = j == std::string::npos ? std::string_view{} : std::string_view(b).substr(j);
    if (va.size() != vb.size()) return va.size() < vb.size() ? -1 : 1;
    int c = va.compare(vb);
    return c < 0 ? -1 : c > 0 ? 1 : 0;
}

int compare_segment(const std::string& sa, const std::string& sb) {
    auto ta = tokenize_segment(sa);
    auto tb = tokenize_segment(sb);
    size_t n = std::max(ta.size(), tb.size());
    for (size_t i = 0; i < n; ++i) {
        if (i >= ta.size()) {
            // a exhausted: a zero pad ties against "0...", loses to anything else
            if (tb[i].numeric) {
                if (compare_numeric("0", tb[i].text) != 0) return -1;
                continue;
            }
            return -1;
        }
        if (i >= tb.size()) {
            if (ta[i].numeric) {
                if (compare_numeric(ta[i].text, "0") != 0) return 1;
                continue;
            }
            return 1;
        }
        const Token& x = ta[i];
        const Token& y = tb[i];
        if (x.numeric != y.numeric) return x.numeric ? -1 : 1; // digits before letters
        if (x.numeric) {
            int c = compare_numeric(x.text, y.text);
            if (c) return c;
        } else {
            int c = x.text.compare(y.text);
            if (c) return c < 0 ? -1 : 1;
        }
    }
    return 0;
}

} // namespace

int compare_versions(const std::string& a, const std::string& b) {
    if (a.empty() || b.empty()) fail(Errc::MalformedVersion, "empty version string");
    auto sa = split(a, '.');
    auto sb = split(b, '.');
    size_t n = std::max(sa.size(), sb.size());
    for (size_t i = 0; i < n; ++i) {
        const std::string& x = i < sa.size() ? sa[i] : "0";
        const std::string& y = i < sb.size() ? sb[i] : "0";
        int c = compare_segment(x, y);
        if (c) return c;
    }
    return 0;
}

} // namespace posture
