#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dwc::csv {

/// Shortest representation that parses back to the same double.
std::string num(double v);
/// Fixed-point with the given number of decimals.
std::string fixed(double v, int decimals);

std::vector<std::string> split_line(std::string_view line);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Parses a header + rows CSV; every row must have the header's width.
Table parse(std::string_view text);

double to_double(const std::string& field);
long long to_int(const std::string& field);

std::string read_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: the whole buffer or an IoError.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace dwc::csv
