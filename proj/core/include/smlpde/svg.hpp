#pragma once

#include <string>
#include <vector>

namespace smlpde {

struct Series {
  std::string name;
  std::vector<double> y;  // non-finite entries break the polyline
};

/// Writes a line chart with axes, ticks, one polyline per series and a
/// legend. With `log_y` the y axis is base-10 logarithmic and non-positive
/// values are skipped.
void write_line_chart(const std::string& path, const std::string& title, const std::string& x_label,
                      const std::vector<double>& x, const std::vector<Series>& series, bool log_y);

}  // namespace smlpde
