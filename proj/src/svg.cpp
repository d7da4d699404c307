// SPDX-License-Identifier: Apache-2.0
#include "revode/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace revode::svg {

namespace {
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
}  // namespace

Canvas::Canvas(double width, double height) : width_(width), height_(height) {}

void Canvas::rect(double x, double y, double w, double h, const std::string& fill,
                  double opacity) {
  body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
           num(h) + "\" fill=\"" + fill + "\"";
  if (opacity < 1.0) body_ += " fill-opacity=\"" + num(opacity) + "\"";
  body_ += "/>\n";
}

void Canvas::line(double x1, double y1, double x2, double y2, const std::string& stroke,
                  double width, bool dashed) {
  body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
           num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\"";
  if (dashed) body_ += " stroke-dasharray=\"4 3\"";
  body_ += "/>\n";
}

void Canvas::polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                      const std::string& stroke, double width) {
  if (xs.size() < 2) return;
  body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) +
           "\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) body_ += num(xs[i]) + "," + num(ys[i]) + " ";
  body_ += "\"/>\n";
}

void Canvas::circle(double cx, double cy, double r, const std::string& fill) {
  body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" fill=\"" +
           fill + "\"/>\n";
}

void Canvas::text(double x, double y, const std::string& s, double size,
                  const std::string& anchor) {
  body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
           "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\">" + escape(s) +
           "</text>\n";
}

std::string Canvas::str() const {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) + "\" height=\"" +
         num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) + "\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body_ + "</svg>\n";
}

std::string palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
                                 "#393b79", "#637939"};
  return colors[i % (sizeof colors / sizeof colors[0])];
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string line_plot(const std::vector<Series>& series, const PlotOptions& opts) {
  const double W = 640, H = 440, L = 70, R = 170, T = 40, B = 50;
  auto tx = [&](double v) { return opts.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return opts.log_y ? std::log10(v) : v; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!opts.log_x || x > 0) && (!opts.log_y || y > 0);
  };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;

  auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };

  Canvas c(W, H);
  c.text(W / 2, 22, opts.title, 14, "middle");
  c.line(L, H - B, W - R, H - B, "black");
  c.line(L, T, L, H - B, "black");
  c.text((L + W - R) / 2, H - 12, opts.x_label, 12, "middle");
  c.text(14, T - 10, opts.y_label, 12, "start");

  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4.0;
    const double fy = y0 + (y1 - y0) * k / 4.0;
    const double gx = L + (W - L - R) * k / 4.0;
    const double gy = H - B - (H - T - B) * k / 4.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", opts.log_x ? std::pow(10.0, fx) : fx);
    c.text(gx, H - B + 16, buf, 10, "middle");
    std::snprintf(buf, sizeof buf, "%.3g", opts.log_y ? std::pow(10.0, fy) : fy);
    c.text(L - 6, gy + 4, buf, 10, "end");
    c.line(L, gy, W - R, gy, "#dddddd", 0.5);
  }

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const std::string col = palette(si);
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      xs.push_back(px(s.x[i]));
      ys.push_back(py(s.y[i]));
      c.circle(xs.back(), ys.back(), 2.5, col);
    }
    c.polyline(xs, ys, col);
    const double ly = T + 16.0 * static_cast<double>(si);
    c.line(W - R + 10, ly, W - R + 30, ly, col, 2.0);
    c.text(W - R + 36, ly + 4, s.label, 11);
  }
  return c.str();
}

}  // namespace revode::svg
