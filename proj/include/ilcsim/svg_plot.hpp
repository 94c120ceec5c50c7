#pragma once

#include <string>
#include <vector>

namespace ilcsim {

// Minimal static SVG line plots; no plotting-service dependency.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string x_label, std::string y_label);

  void set_log_y(bool enabled) { log_y_ = enabled; }
  void add_series(const std::string& name, const std::vector<double>& x,
                  const std::vector<double>& y);
  void add_hline(double y, const std::string& label);
  void write(const std::string& path) const;

 private:
  struct Series {
    std::string name;
    std::vector<double> x, y;
  };
  struct HLine {
    double y;
    std::string label;
  };

  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
  std::vector<HLine> hlines_;
  bool log_y_ = false;
};

}  // namespace ilcsim
