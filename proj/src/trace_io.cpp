#include "pmdlab/trace_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pmdlab {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string trace_to_csv(const IterationTrace& trace) {
  std::ostringstream out;
  out << "iter,sup_gap,eta,bound_theorem1,min_q_increase,elapsed_ns";
  if (trace.inexact) out << ",tau_realized,samples_cumulative";
  out << "\n";
  for (const IterationRecord& rec : trace.records) {
    out << rec.k << ',' << format_double(rec.sup_gap) << ','
        << format_double(rec.eta) << ',' << format_double(rec.bound_theorem1)
        << ',' << format_double(rec.min_q_increase) << ',' << rec.elapsed_ns;
    if (trace.inexact) {
      out << ',' << format_double(rec.tau_realized) << ','
          << rec.samples_cumulative;
    }
    out << "\n";
  }
  return out.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path());
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    }
    out << content;
    out.flush();
    if (!out) {
      throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
  }
  fs::rename(tmp, target);
}

int CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<double> CsvTable::column(const std::string& name) const {
  const int idx = column_index(name);
  if (idx < 0) throw std::invalid_argument("csv: no column named '" + name + "'");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[idx]);
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("csv: missing header row");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::istringstream header(line);
  std::string field;
  while (std::getline(header, field, ',')) table.columns.push_back(field);
  if (table.columns.empty()) {
    throw std::invalid_argument("csv: empty header row");
  }

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(table.columns.size());
    std::istringstream cells(line);
    while (std::getline(cells, field, ',')) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(field, &pos));
        if (pos != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw std::invalid_argument("csv: line " + std::to_string(line_no) +
                                    ": cannot parse '" + field + "' as a number");
      }
    }
    if (row.size() != table.columns.size()) {
      throw std::invalid_argument("csv: line " + std::to_string(line_no) +
                                  " has " + std::to_string(row.size()) +
                                  " fields, expected " +
                                  std::to_string(table.columns.size()));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

}  // namespace pmdlab
