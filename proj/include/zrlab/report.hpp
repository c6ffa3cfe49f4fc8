#pragma once

#include <string>
#include <vector>

namespace zrlab {

// One report table: fixed header, rows of preformatted cells. Serialization
// is deterministic so reruns with the same inputs are byte-identical.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Shortest-round-trip formatting for report cells.
std::string format_full(double x);
// Fixed 12-significant-digit formatting for derived diagnostics.
std::string format_short(double x);

std::string to_csv(const CsvTable& table);

// Writes via a temp file in the destination directory plus rename, so
// readers never observe partial output.
void atomic_write(const std::string& path, const std::string& content);

// Creates the directory (and parents) if missing.
void ensure_directory(const std::string& path);

}  // namespace zrlab
