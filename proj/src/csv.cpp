#include "stucoco/csv.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <system_error>

#include <fmt/format.h>

#include "stucoco/errors.hpp"

namespace stucoco::csv {

std::string time(double t) { return fmt::format("{:.9f}", t); }
std::string prob(double p) { return fmt::format("{:.12f}", p); }
std::string real(double x) { return fmt::format("{:.12f}", x); }

double parse(const std::string& field) {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument("csv: trailing characters in '" + field + "'");
    return v;
}

Table::Table(std::vector<std::string> header) : header_(std::move(header)) {}

void Table::add(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw std::logic_error("csv: row width differs from header");
    rows_.push_back(std::move(row));
}

std::string Table::str() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out += ',';
            out += fields[i];
        }
        out += "\r\n";
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
}

std::size_t Table::column(const std::string& name) const {
    const auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end()) throw std::out_of_range("csv: no column " + name);
    return static_cast<std::size_t>(std::distance(header_.begin(), it));
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("csv: cannot open " + path.string());
    auto split = [](std::string line) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        return fields;
    };
    std::string line;
    while (std::getline(in, line) && !line.empty() && line[0] == '#') {
    }
    Table t(split(line));
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        t.add(split(line));
    }
    return t;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
        out << content;
        if (!out.flush()) throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw std::runtime_error(fmt::format("cannot rename {} to {}: {}", tmp.string(), path.string(), ec.message()));
}

}  // namespace stucoco::csv
