#include "mcrelab/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace mcrelab {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path), columns_(header.size()) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out_ << ',';
        out_ << header[i];
    }
    out_ << '\n';
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
    if (cells.size() != columns_)
        throw std::runtime_error("csv row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        if (std::holds_alternative<std::int64_t>(cells[i])) {
            out_ << std::get<std::int64_t>(cells[i]);
        } else if (std::holds_alternative<double>(cells[i])) {
            out_ << format_double(std::get<double>(cells[i]));
        } else {
            out_ << std::get<std::string>(cells[i]);
        }
    }
    out_ << '\n';
}

void CsvWriter::close() { out_.close(); }

}  // namespace mcrelab
