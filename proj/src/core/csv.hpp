#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace softshape::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Parses a header line followed by numeric rows. Every row must have as many
/// fields as the header. Blank lines are skipped. Throws InputError.
Table read(std::istream& in);
Table read(const std::filesystem::path& path);

/// Shortest round-trippable text for a value ("%.10g").
std::string num(double value);

std::string join(const std::vector<std::string>& fields);

}  // namespace softshape::csv
