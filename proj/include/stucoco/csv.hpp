#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace stucoco::csv {

/// Times in years carry 9 decimals, probabilities 12.
std::string time(double t);
std::string prob(double p);
/// Prices, levels and other reals.
std::string real(double x);

double parse(const std::string& field);

/// RFC-4180 table with a mandatory header row; fields here never need quoting.
class Table {
public:
    explicit Table(std::vector<std::string> header);
    void add(std::vector<std::string> row);
    std::string str() const;

    const std::vector<std::string>& header() const { return header_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }
    std::size_t column(const std::string& name) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

Table read(const std::filesystem::path& path);

/// Write to a temporary sibling and rename over the target.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace stucoco::csv
