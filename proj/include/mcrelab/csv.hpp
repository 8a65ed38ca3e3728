// CSV emission with deterministic numeric formatting ("%.17g"), so identical
// inputs produce byte-identical files.
#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace mcrelab {

std::string format_double(double v);

using CsvCell = std::variant<std::int64_t, double, std::string>;

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<CsvCell>& cells);
    void close();

private:
    std::ofstream out_;
    std::size_t columns_ = 0;
};

}  // namespace mcrelab
