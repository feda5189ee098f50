#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace overlap {

/// Locale-independent number formatting, 9 significant digits.
inline std::string fmt_g9(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
    if (ec != std::errc{}) throw std::runtime_error("fmt_g9: conversion failed");
    return std::string(buf, ptr);
}

/// Minimal comma-separated table: a header row plus string cells. Fields are
/// never quoted; none of the emitted files need quoting.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }

    std::vector<double> numeric_column(const std::string& name) const {
        const int idx = column_index(name);
        if (idx < 0) throw std::invalid_argument("csv: no column named '" + name + "'");
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& row : rows) {
            if (static_cast<std::size_t>(idx) >= row.size()) continue;
            out.push_back(std::stod(row[static_cast<std::size_t>(idx)]));
        }
        return out;
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first) {
            table.header = std::move(cells);
            first = false;
        } else {
            table.rows.push_back(std::move(cells));
        }
    }
    return table;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::trunc) {
        if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    void close() {
        out_.close();
        if (out_.fail()) throw std::runtime_error("write failed");
    }

private:
    std::ofstream out_;
};

}  // namespace overlap
