#pragma once

#include <string>
#include <vector>

#include "pmdlab/pmd.hpp"

namespace pmdlab {

/// Trace CSV schema: iter,sup_gap,eta,bound_theorem1,min_q_increase,elapsed_ns
/// with the extra columns tau_realized,samples_cumulative for inexact runs.
std::string trace_to_csv(const IterationTrace& trace);

/// Writes atomically (temp file + rename), creating parent directories.
void write_file_atomic(const std::string& path, const std::string& content);

/// Numeric CSV with a header row.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column_index(const std::string& name) const;  // -1 if absent
  bool has_column(const std::string& name) const {
    return column_index(name) >= 0;
  }
  std::vector<double> column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);
CsvTable read_csv_file(const std::string& path);

/// Shortest round-trip-safe decimal representation.
std::string format_double(double x);

}  // namespace pmdlab
