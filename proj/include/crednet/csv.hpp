#pragma once

#include <string>
#include <vector>

namespace crednet {

// Minimal CSV support for the flat comma-separated files this project
// reads and writes. No quoting: none of the formats carry embedded commas.
struct CsvFile {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers; // 1-based source line per row
    std::string path;
};

CsvFile read_csv(const std::string& path);

// Throws "<path>:<line>: ..." style errors.
[[noreturn]] void csv_error(const CsvFile& csv, std::size_t row, const std::string& msg);

void write_lines(const std::string& path, const std::vector<std::string>& lines);

} // namespace crednet
