#pragma once

#include "doi/field.hpp"

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace doi::cli {

// bad flags, bad config file, out-of-range values: exit code 2
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitAbort = 3;

// number or the literal "critical" (exactly 1.0/n)
double parse_sigma(const std::string& s, int n);
// "critical", a number, a list "a,b,c" or a range "lo:hi:count"
std::vector<double> parse_sigma_grid(const std::string& s, int n);

struct IcArg {
    enum class Kind { uniform, fvm, perturbed, coeffs, aligned };
    Kind kind = Kind::uniform;
    double kappa = 0;
    bool kappa_from_sigma = false;  // fvm:equilibrium
    double eps = 0;
    std::vector<int> modes{1, 2};
    std::string path;
};
IcArg parse_ic(const std::string& s);

// key = value lines, '#' comments; keys normalized with '_' -> '-'
std::map<std::string, std::string> read_config_file(const std::filesystem::path& p);

// final field stored in a solve summary, bit-exact
ZonalField load_summary_field(const std::filesystem::path& p);

int run_cli(const std::vector<std::string>& args);  // args[0] is the program name
int run_cli(int argc, char** argv);

} // namespace doi::cli
