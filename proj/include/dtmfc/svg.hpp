#pragma once

#include <string>
#include <vector>

namespace dtmfc::svg {

struct Series {
  std::string label;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
};

/// Simple line chart. Output is self-contained SVG with no external
/// references and no timestamps, so identical inputs give identical bytes.
std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series,
                       int width = 880, int height = 480);

/// Stem plot of per-draw values around a zero baseline. Every value gets one
/// line element of class "stem".
std::string stem_chart(const std::string& title, const std::string& y_label,
                       const std::vector<double>& values, int width = 880, int height = 480);

/// Two side-by-side histograms (20 bins each).
std::string histogram_pair(const std::string& title, const std::string& label_a,
                           const std::vector<double>& a, const std::string& label_b,
                           const std::vector<double>& b, int width = 880, int height = 400);

}  // namespace dtmfc::svg
