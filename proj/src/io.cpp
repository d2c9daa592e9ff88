// Copyright 2026-present the permlearn project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "permlearn/io.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace permlearn::io {

namespace {

Format format_from_path(const std::string& path) {
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    if (ext == "csv") return Format::Csv;
    if (ext == "json") return Format::Json;
    throw FormatError("matrix file needs a .csv or .json extension: " + path);
}

bool parse_row(const std::string& line, std::vector<double>& out) {
    out.clear();
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
        while (p < end && (*p == ' ' || *p == '\t')) ++p;
        const char* field_end = p;
        while (field_end < end && *field_end != ',') ++field_end;
        const char* num_end = field_end;
        while (num_end > p && (num_end[-1] == ' ' || num_end[-1] == '\t')) --num_end;
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(p, num_end, v);
        if (ec != std::errc() || ptr != num_end || num_end == p) return false;
        out.push_back(v);
        p = field_end < end ? field_end + 1 : end;
    }
    return !out.empty();
}

Matrix load_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw FormatError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    bool header_allowed = true;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        if (!parse_row(line, row)) {
            if (header_allowed) {  // leading header row
                header_allowed = false;
                continue;
            }
            throw FormatError(path + ": unparsable row " + std::to_string(lineno));
        }
        header_allowed = false;
        if (!rows.empty() && row.size() != rows.front().size())
            throw FormatError(path + ": ragged row " + std::to_string(rows.size() + 1) +
                              " (expected " + std::to_string(rows.front().size()) + " fields, got " +
                              std::to_string(row.size()) + ")");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FormatError(path + ": no data rows");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
    return m;
}

Matrix matrix_from_json_array(const nlohmann::json& arr, const std::string& path) {
    if (!arr.is_array() || arr.empty()) throw FormatError(path + ": expected array of arrays");
    std::size_t cols = arr[0].is_array() ? arr[0].size() : 0;
    if (cols == 0) throw FormatError(path + ": empty or non-array row");
    Matrix m(arr.size(), cols);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_array() || arr[i].size() != cols)
            throw FormatError(path + ": ragged row " + std::to_string(i + 1));
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = arr[i][j].get<double>();
    }
    return m;
}

Matrix load_json(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": invalid json: " + e.what());
    }
    if (j.is_object()) {
        if (!j.contains("matrix")) throw FormatError(path + ": missing \"matrix\" field");
        return matrix_from_json_array(j["matrix"], path);
    }
    return matrix_from_json_array(j, path);
}

}  // namespace

Matrix load_matrix(const std::string& path) {
    return format_from_path(path) == Format::Csv ? load_csv(path) : load_json(path);
}

void save_matrix(const std::string& path, const Matrix& m) {
    save_matrix(path, m, format_from_path(path));
}

void save_matrix(const std::string& path, const Matrix& m, Format f) {
    if (f == Format::Csv) {
        std::ostringstream out;
        for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << "c" << j;
        out << "\n";
        char buf[64];
        for (std::size_t i = 0; i < m.rows(); ++i) {
            for (std::size_t j = 0; j < m.cols(); ++j) {
                std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
                out << (j ? "," : "") << buf;
            }
            out << "\n";
        }
        write_file(path, out.str());
        return;
    }
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["matrix"] = std::move(rows);
    write_file(path, doc.dump(2) + "\n");
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot write " + path);
    f << content;
    if (!f) throw FormatError("write failed for " + path);
}

}  // namespace permlearn::io
