#include "doi/io.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

namespace doi {

std::string fmt17(double v) { return fmt::format("{:.17g}", v); }

CsvTable::CsvTable(std::vector<std::string> header) : ncol_(header.size())
{
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) body_ += ',';
        body_ += header[i];
    }
    body_ += '\n';
}

void CsvTable::add_row(std::span<const double> values)
{
    add_row({}, values);
}

void CsvTable::add_row(const std::vector<std::string>& text, std::span<const double> values)
{
    if (text.size() + values.size() != ncol_) throw std::invalid_argument("CsvTable: row width does not match header");
    bool first = true;
    for (const auto& s : text) {
        if (!first) body_ += ',';
        body_ += s;
        first = false;
    }
    for (double v : values) {
        if (!first) body_ += ',';
        body_ += fmt17(v);
        first = false;
    }
    body_ += '\n';
}

int CsvData::column(const std::string& name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

namespace {
std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}
} // namespace

CsvData read_csv(const std::filesystem::path& p)
{
    std::ifstream in(p);
    if (!in) throw std::invalid_argument("cannot open " + p.string());
    CsvData d;
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty CSV: " + p.string());
    d.header = split(line, ',');
    d.columns.resize(d.header.size());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split(line, ',');
        for (std::size_t i = 0; i < d.header.size(); ++i) {
            double v = std::numeric_limits<double>::quiet_NaN();
            if (i < cells.size()) {
                try {
                    std::size_t pos = 0;
                    v = std::stod(cells[i], &pos);
                } catch (const std::exception&) {
                }
            }
            d.columns[i].push_back(v);
        }
    }
    return d;
}

void write_atomic(const std::filesystem::path& p, const std::string& content)
{
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    auto tmp = p;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, p);
}

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<double> read_number_list(const std::filesystem::path& p)
{
    std::istringstream in(read_file(p));
    std::vector<double> out;
    std::string line;
    while (std::getline(in, line)) {
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        for (char& ch : line)
            if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) {
            std::size_t pos = 0;
            double v;
            try {
                v = std::stod(tok, &pos);
            } catch (const std::exception&) {
                throw std::invalid_argument("bad number '" + tok + "' in " + p.string());
            }
            if (pos != tok.size()) throw std::invalid_argument("bad number '" + tok + "' in " + p.string());
            out.push_back(v);
        }
    }
    return out;
}

} // namespace doi
