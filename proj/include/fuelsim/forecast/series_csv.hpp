#ifndef FUELSIM_FORECAST_SERIES_CSV_HPP
#define FUELSIM_FORECAST_SERIES_CSV_HPP

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fuelsim/core/error.hpp"

namespace fuelsim::forecast {

/// CSV with header `time_index,value`, one point per line.
inline void write_series_csv(std::ostream& os, const std::vector<double>& values) {
  os << "time_index,value\n";
  char buf[64];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f\n", i, values[i]);
    os << buf;
  }
}

inline std::vector<double> read_series_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "time_index,value") throw Error("series csv: expected header time_index,value");
  std::vector<double> values;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error("series csv line " + std::to_string(lineno) + ": missing comma");
    std::size_t idx = 0;
    double v = 0.0;
    try {
      idx = std::stoul(line.substr(0, comma));
      v = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw Error("series csv line " + std::to_string(lineno) + ": not a number");
    }
    if (idx != values.size()) throw Error("series csv line " + std::to_string(lineno) + ": time_index out of sequence");
    values.push_back(v);
  }
  return values;
}

}  // namespace fuelsim::forecast

#endif  // FUELSIM_FORECAST_SERIES_CSV_HPP
