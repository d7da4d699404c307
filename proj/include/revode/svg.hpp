// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace revode::svg {

/// Minimal SVG document builder.
class Canvas {
 public:
  Canvas(double width, double height);

  void rect(double x, double y, double w, double h, const std::string& fill,
            double opacity = 1.0);
  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0, bool dashed = false);
  void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                const std::string& stroke, double width = 1.5);
  void circle(double cx, double cy, double r, const std::string& fill);
  void text(double x, double y, const std::string& s, double size = 12.0,
            const std::string& anchor = "start");

  std::string str() const;

 private:
  double width_, height_;
  std::string body_;
};

std::string palette(std::size_t i);
std::string escape(const std::string& s);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = true;
  bool log_y = true;
};

/// Line plot with markers; non-positive values are skipped on log axes.
std::string line_plot(const std::vector<Series>& series, const PlotOptions& opts);

}  // namespace revode::svg
