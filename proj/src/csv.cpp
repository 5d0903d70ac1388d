#include "iflow/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "iflow/common.hpp"

namespace iflow {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma == std::string::npos ? comma : comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

bool parse_float(const std::string& s, float& out) {
    try {
        std::size_t used = 0;
        out = std::stof(s, &used);
        while (used < s.size() && (s[used] == ' ' || s[used] == '\r' || s[used] == '\t')) ++used;
        return used == s.size() && !s.empty();
    } catch (const std::exception&) {
        return false;
    }
}

} // namespace

void save_csv(const Tensor& x, const std::string& path) {
    if (x.ndim() != 2) data_error("save_csv: expected a 2-D matrix, got " + x.shape_str());
    std::ofstream out(path, std::ios::binary);
    if (!out) data_error("cannot open " + path + " for writing");
    char buf[48];
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.9g", double(x.at2(r, c)));
            if (c) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) data_error("write failed for " + path);
}

Tensor load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) data_error("cannot open " + path);
    std::vector<float> values;
    std::size_t cols = 0, rows = 0;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        std::vector<float> row(fields.size());
        bool ok = true;
        for (std::size_t i = 0; i < fields.size(); ++i)
            if (!parse_float(fields[i], row[i])) {
                if (rows == 0 && i == 0) {
                    ok = false; // candidate header
                    break;
                }
                data_error(path + ":" + std::to_string(line_no) + ": field " +
                           std::to_string(i + 1) + " ('" + fields[i] + "') is not a number");
            }
        if (!ok) continue;
        if (cols == 0) cols = row.size();
        if (row.size() != cols)
            data_error(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(cols) + " fields, got " + std::to_string(row.size()));
        values.insert(values.end(), row.begin(), row.end());
        ++rows;
    }
    if (rows == 0) data_error(path + ": no numeric rows");
    return Tensor({rows, cols}, std::move(values));
}

void save_labels(const std::vector<int>& labels, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) data_error("cannot open " + path + " for writing");
    for (int v : labels) out << v << '\n';
    if (!out) data_error("write failed for " + path);
}

std::vector<int> load_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) data_error("cannot open " + path);
    std::vector<int> out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(line, &used));
            if (used != line.size()) throw std::invalid_argument(line);
        } catch (const std::exception&) {
            data_error(path + ":" + std::to_string(line_no) + ": '" + line +
                       "' is not an integer label");
        }
    }
    return out;
}

} // namespace iflow
