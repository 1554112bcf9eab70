#pragma once

#include <charconv>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trustgov::util {

// Shortest round-trip decimal form; stable for a given binary, which is what
// the replay-determinism contract needs.
std::string fmt_double(double v);

double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, std::string_view content);

// Minimal CSV handling: comma-separated, no quoting (none of the shipped
// schemas need quoted fields). Trims surrounding whitespace per cell.
std::vector<std::string> split_csv_line(std::string_view line);
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p);

struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& msg);
void require_unit(double v, const std::string& name);  // v in [0,1]

}  // namespace trustgov::util
