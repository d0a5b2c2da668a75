#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace crednet {

// Calendar month, the time unit everything in the loan data is keyed on.
struct YearMonth {
    int year = 0;
    int month = 1; // 1..12

    static YearMonth parse(const std::string& s); // "YYYY-MM"
    std::string str() const;

    // months since year 0, for arithmetic and ordering
    int index() const { return year * 12 + (month - 1); }
    static YearMonth from_index(int idx);

    YearMonth plus(int months) const { return from_index(index() + months); }

    bool operator==(const YearMonth& o) const { return year == o.year && month == o.month; }
    bool operator!=(const YearMonth& o) const { return !(*this == o); }
    bool operator<(const YearMonth& o) const { return index() < o.index(); }
    bool operator<=(const YearMonth& o) const { return index() <= o.index(); }
};

std::string join(const std::vector<std::string>& parts, const std::string& sep);
std::vector<std::string> split(const std::string& s, char sep);
std::string trim(const std::string& s);
bool parse_double(const std::string& s, double& out);

// FNV-1a, used for input-file digests in run manifests.
std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t fnv1a64_file(const std::string& path);
std::string hex64(std::uint64_t v);

// Canonical float formatting for CSV outputs: shortest round-trip form,
// so reruns produce byte-identical files.
std::string fmt_double(double v);

} // namespace crednet
