#pragma once

#include "doi/field.hpp"

#include <filesystem>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace doi {

// 17 significant digits: exact double round trip
std::string fmt17(double v);

// Row writer for plain CSV with a fixed header.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);
    void add_row(std::span<const double> values);
    void add_row(std::initializer_list<double> values) { add_row(std::span<const double>(values.begin(), values.size())); }
    // first columns as preformatted text, then numbers
    void add_row(const std::vector<std::string>& text, std::span<const double> values);
    std::string str() const { return body_; }
    std::size_t columns() const { return ncol_; }

private:
    std::size_t ncol_;
    std::string body_;
};

struct CsvData {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;  // non-numeric cells read as NaN
    int column(const std::string& name) const;  // -1 if missing
};
CsvData read_csv(const std::filesystem::path& p);

// write to a temporary sibling, then rename over the target
void write_atomic(const std::filesystem::path& p, const std::string& content);
std::string read_file(const std::filesystem::path& p);

// numbers separated by whitespace or commas; '#' starts a comment
std::vector<double> read_number_list(const std::filesystem::path& p);

} // namespace doi
