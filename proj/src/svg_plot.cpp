#include "ilcsim/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "ilcsim/csv.hpp"

namespace ilcsim {

namespace {
constexpr double kWidth = 720.0, kHeight = 480.0;
constexpr double kLeft = 80.0, kRight = 30.0, kTop = 50.0, kBottom = 60.0;
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                         "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) { return fmt_double(v); }
}  // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgPlot::add_series(const std::string& name, const std::vector<double>& x,
                         const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("series x/y size mismatch");
  series_.push_back({name, x, y});
}

void SvgPlot::add_hline(double y, const std::string& label) { hlines_.push_back({y, label}); }

void SvgPlot::write(const std::string& path) const {
  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  auto y_val = [&](double v) { return log_y_ ? std::log10(std::max(v, 1e-300)) : v; };
  for (const auto& s : series_) {
    for (double v : s.x) {
      x_min = std::min(x_min, v);
      x_max = std::max(x_max, v);
    }
    for (double v : s.y) {
      y_min = std::min(y_min, y_val(v));
      y_max = std::max(y_max, y_val(v));
    }
  }
  for (const auto& h : hlines_) {
    y_min = std::min(y_min, y_val(h.y));
    y_max = std::max(y_max, y_val(h.y));
  }
  if (!std::isfinite(x_min)) {
    x_min = 0.0;
    x_max = 1.0;
    y_min = 0.0;
    y_max = 1.0;
  }
  if (x_max - x_min < 1e-12) x_max = x_min + 1.0;
  if (y_max - y_min < 1e-12) y_max = y_min + 1.0;
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (v - x_min) / (x_max - x_min) * pw; };
  auto py = [&](double v) { return kTop + ph - (y_val(v) - y_min) / (y_max - y_min) * ph; };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write SVG: " + path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << title_ << "</text>\n"
      << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\""
      << ph << "\" fill=\"none\" stroke=\"black\"/>\n";

  // Ticks.
  for (int i = 0; i <= 5; ++i) {
    const double fx = x_min + (x_max - x_min) * i / 5.0;
    const double gx = px(fx);
    out << "<line x1=\"" << gx << "\" y1=\"" << kTop + ph << "\" x2=\"" << gx << "\" y2=\""
        << kTop + ph + 5 << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << gx << "\" y=\"" << kTop + ph + 20
        << "\" text-anchor=\"middle\" font-size=\"11\">" << num(fx) << "</text>\n";
    const double fy = y_min + (y_max - y_min) * i / 5.0;
    const double gy = kTop + ph - ph * i / 5.0;
    const double label = log_y_ ? std::pow(10.0, fy) : fy;
    out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << gy << "\" x2=\"" << kLeft << "\" y2=\""
        << gy << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << kLeft - 8 << "\" y=\"" << gy + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << num(label) << "</text>\n";
  }
  out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 14
      << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label_ << "</text>\n"
      << "<text x=\"18\" y=\"" << kTop + ph / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << kTop + ph / 2 << ")\">" << y_label_ << "</text>\n";

  for (const auto& h : hlines_) {
    out << "<line x1=\"" << kLeft << "\" y1=\"" << py(h.y) << "\" x2=\"" << kLeft + pw
        << "\" y2=\"" << py(h.y) << "\" stroke=\"#999\" stroke-dasharray=\"6 4\"/>\n"
        << "<text x=\"" << kLeft + pw - 4 << "\" y=\"" << py(h.y) - 4
        << "\" text-anchor=\"end\" font-size=\"11\" fill=\"#666\">" << h.label << "</text>\n";
  }

  for (size_t i = 0; i < series_.size(); ++i) {
    const auto& s = series_[i];
    const char* color = kColors[i % (sizeof(kColors) / sizeof(kColors[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (size_t k = 0; k < s.x.size(); ++k) out << px(s.x[k]) << ',' << py(s.y[k]) << ' ';
    out << "\"/>\n"
        << "<text x=\"" << kLeft + pw - 8 << "\" y=\"" << kTop + 16 + 16 * i
        << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">" << s.name
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace ilcsim
