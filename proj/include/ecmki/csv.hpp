#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "ecmki/common.hpp"
#include "ecmki/drive_cycle.hpp"
#include "ecmki/measurement.hpp"

namespace ecmki {

// Shortest decimal form that reparses to the same double.
inline std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline double parse_cell(std::string_view cell, std::size_t row,
                         const char* column) {
  cell = trim(cell);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size())
    throw ParseError("row " + std::to_string(row) + ": cannot parse " + column +
                         " value '" + std::string(cell) + "'",
                     row);
  return value;
}

inline std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

// Reads logical lines, skipping '#' comments and blank lines.
inline bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    std::string_view v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    line.assign(v);
    return true;
  }
  return false;
}

}  // namespace detail

// Header `time_s,current_A` or `time_s,current_A,amb_temp_K`; rows
// without the ambient column take default_amb_K. Spacing must be
// uniform. Row numbers in errors are 1-based over data rows.
inline DriveCycle parse_drive_cycle(std::istream& in,
                                    double default_amb_K = 298.15) {
  std::string line;
  if (!detail::next_line(in, line)) throw ParseError("empty drive cycle file");
  const auto header = detail::split_line(line);
  bool has_amb = false;
  if (header.size() == 3 && detail::trim(header[2]) == "amb_temp_K")
    has_amb = true;
  else if (header.size() != 2)
    throw ParseError("expected header 'time_s,current_A[,amb_temp_K]', got '" +
                     line + "'");
  if (detail::trim(header[0]) != "time_s" ||
      detail::trim(header[1]) != "current_A")
    throw ParseError("expected header 'time_s,current_A[,amb_temp_K]', got '" +
                     line + "'");

  DriveCycle cycle;
  std::size_t row = 0;
  while (detail::next_line(in, line)) {
    ++row;
    const auto cells = detail::split_line(line);
    if (cells.size() != header.size())
      throw ParseError("row " + std::to_string(row) + ": expected " +
                           std::to_string(header.size()) + " columns, got " +
                           std::to_string(cells.size()),
                       row);
    InputSample u;
    const double t = detail::parse_cell(cells[0], row, "time_s");
    u.current_A = detail::parse_cell(cells[1], row, "current_A");
    u.amb_temp_K =
        has_amb ? detail::parse_cell(cells[2], row, "amb_temp_K") : default_amb_K;
    cycle.time_s.push_back(t);
    cycle.inputs.push_back(u);
  }
  if (cycle.time_s.size() < 2)
    throw ParseError("drive cycle needs at least 2 data rows, got " +
                     std::to_string(cycle.time_s.size()));

  const double step = cycle.time_s[1] - cycle.time_s[0];
  if (!(step > 0.0))
    throw ParseError("non-increasing time at row 2", 2);
  for (std::size_t k = 1; k < cycle.time_s.size(); ++k) {
    const double gap = cycle.time_s[k] - cycle.time_s[k - 1];
    if (std::abs(gap - step) > 1e-9 * step)
      throw ParseError("non-uniform spacing at row " + std::to_string(k + 1),
                       k + 1);
  }
  return cycle;
}

inline void write_drive_cycle(const DriveCycle& cycle, std::ostream& out,
                              const std::vector<std::string>& comments = {}) {
  for (const auto& c : comments) out << "# " << c << "\n";
  out << "time_s,current_A,amb_temp_K\n";
  for (int k = 0; k < cycle.size(); ++k)
    out << fmt_double(cycle.time_s[k]) << ',' << fmt_double(cycle.inputs[k].current_A)
        << ',' << fmt_double(cycle.inputs[k].amb_temp_K) << '\n';
}

inline MeasurementSeries read_measurements(std::istream& in) {
  std::string line;
  if (!detail::next_line(in, line)) throw ParseError("empty measurement file");
  const auto header = detail::split_line(line);
  if (header.size() != 3 || detail::trim(header[0]) != "time_s" ||
      detail::trim(header[1]) != "voltage_V" ||
      detail::trim(header[2]) != "surf_temp_K")
    throw ParseError("expected header 'time_s,voltage_V,surf_temp_K', got '" +
                     line + "'");
  MeasurementSeries series;
  std::size_t row = 0;
  while (detail::next_line(in, line)) {
    ++row;
    const auto cells = detail::split_line(line);
    if (cells.size() != 3)
      throw ParseError("row " + std::to_string(row) + ": expected 3 columns, got " +
                           std::to_string(cells.size()),
                       row);
    series.time_s.push_back(detail::parse_cell(cells[0], row, "time_s"));
    OutputSample y;
    y.voltage_V = detail::parse_cell(cells[1], row, "voltage_V");
    y.surf_temp_K = detail::parse_cell(cells[2], row, "surf_temp_K");
    series.samples.push_back(y);
  }
  return series;
}

inline void write_measurements(const MeasurementSeries& series, std::ostream& out,
                               const std::vector<std::string>& comments = {}) {
  for (const auto& c : comments) out << "# " << c << "\n";
  out << "time_s,voltage_V,surf_temp_K\n";
  for (int k = 0; k < series.size(); ++k)
    out << fmt_double(series.time_s[k]) << ','
        << fmt_double(series.samples[k].voltage_V) << ','
        << fmt_double(series.samples[k].surf_temp_K) << '\n';
}

}  // namespace ecmki
