#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include "priorlab/errors.hpp"
#include "priorlab/metrics.hpp"

namespace priorlab {

// Shortest round-trip decimal form, '.' separator, no locale. Every CSV and
// SVG number goes through here so artifacts are byte-stable.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc()) throw Error("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

inline std::string format_size(std::size_t v) { return std::to_string(v); }

inline constexpr const char* kRecordCsvHeader = "task,k,seed,trial,mse,psnr_db,residual,wall_ms";

// with_timings = false zeroes the wall_ms column so reruns of the same
// config produce byte-identical files.
inline std::string records_to_csv(const std::vector<ExperimentRecord>& records,
                                  bool with_timings = false) {
    std::string out(kRecordCsvHeader);
    out += '\n';
    for (const ExperimentRecord& r : records) {
        out += r.task;
        out += ',';
        out += format_size(r.k);
        out += ',';
        out += std::to_string(r.seed);
        out += ',';
        out += format_size(r.trial);
        out += ',';
        out += format_double(r.mse);
        out += ',';
        out += format_double(r.psnr_db);
        out += ',';
        out += format_double(r.residual);
        out += ',';
        out += format_double(with_timings ? r.wall_ms : 0.0);
        out += '\n';
    }
    return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw IoError("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    std::string content((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return content;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw Error("csv: no column named " + name);
    }
};

inline CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::vector<std::string> current;
    std::string field;
    bool first_line = true;
    auto end_field = [&]() {
        current.push_back(field);
        field.clear();
    };
    auto end_line = [&]() {
        if (field.empty() && current.empty()) return;
        end_field();
        if (first_line) {
            t.header = current;
            first_line = false;
        } else {
            t.rows.push_back(current);
        }
        current.clear();
    };
    for (char c : text) {
        if (c == ',') {
            end_field();
        } else if (c == '\n') {
            end_line();
        } else if (c != '\r') {
            field += c;
        }
    }
    end_line();
    return t;
}

}  // namespace priorlab
