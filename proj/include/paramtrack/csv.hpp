#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "paramtrack/errors.hpp"

namespace paramtrack {

/// Canonical numeric formatting for all CSV output: 12 significant digits,
/// shortest form. Deterministic for a given libc, which is what the
/// byte-identical reproduction contract needs.
inline std::string format_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

/// Full-precision form used by tracker bundles so doubles round-trip exactly.
inline std::string format_exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string hex16(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
        : out_(path) {
        if (!out_) throw ConfigError("cannot open " + path.string() + " for writing");
        write_cells(columns);
    }

    void row(const std::vector<std::string>& cells) { write_cells(cells); }

    void row(const std::vector<double>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values) cells.push_back(format_num(v));
        write_cells(cells);
    }

private:
    void write_cells(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::ofstream out_;
};

} // namespace paramtrack
