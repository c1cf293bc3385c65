// src/plots.cpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "musesvs/plots.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace musesvs {

const std::vector<std::string>& plot_palette() {
  static const std::vector<std::string> palette{
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
      "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return palette;
}

void svg_plot(const std::string& path, const std::vector<PlotSeries>& series,
              const std::string& title, const std::string& x_label,
              const std::string& y_label) {
  check(!series.empty(), "svg_plot: no series");
  const double width = 860, height = 480;
  const double ml = 70, mr = 20, mt = 40, mb = 50;

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    check(s.x.size() == s.y.size() && !s.x.empty(), "svg_plot: bad series");
    for (size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto sx = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr);
  };
  auto sy = [&](double y) {
    return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb);
  };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << height << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << width / 2 << "' y='24' text-anchor='middle' "
         "font-size='16' font-family='sans-serif'>"
      << title << "</text>\n";

  // Axes + ticks.
  svg << "<line x1='" << ml << "' y1='" << height - mb << "' x2='"
      << width - mr << "' y2='" << height - mb
      << "' stroke='black'/>\n<line x1='" << ml << "' y1='" << mt << "' x2='"
      << ml << "' y2='" << height - mb << "' stroke='black'/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 5.0;
    const double yv = ymin + (ymax - ymin) * i / 5.0;
    svg << "<text x='" << sx(xv) << "' y='" << height - mb + 18
        << "' text-anchor='middle' font-size='11' "
           "font-family='sans-serif'>"
        << std::round(xv * 100) / 100 << "</text>\n";
    svg << "<text x='" << ml - 8 << "' y='" << sy(yv) + 4
        << "' text-anchor='end' font-size='11' font-family='sans-serif'>"
        << std::round(yv * 1000) / 1000 << "</text>\n";
  }
  svg << "<text x='" << width / 2 << "' y='" << height - 12
      << "' text-anchor='middle' font-size='13' font-family='sans-serif'>"
      << x_label << "</text>\n";
  svg << "<text x='18' y='" << height / 2
      << "' text-anchor='middle' font-size='13' font-family='sans-serif' "
         "transform='rotate(-90 18 "
      << height / 2 << ")'>" << y_label << "</text>\n";

  for (const auto& s : series) {
    if (s.points_only) {
      for (size_t i = 0; i < s.x.size(); ++i)
        svg << "<circle cx='" << sx(s.x[i]) << "' cy='" << sy(s.y[i])
            << "' r='3' fill='" << s.color << "'/>\n";
    } else {
      svg << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5'";
      if (s.dashed) svg << " stroke-dasharray='5,4'";
      svg << " points='";
      for (size_t i = 0; i < s.x.size(); ++i)
        svg << sx(s.x[i]) << ',' << sy(s.y[i]) << ' ';
      svg << "'/>\n";
    }
  }

  double ly = mt + 6;
  for (const auto& s : series) {
    if (s.label.empty()) continue;
    svg << "<rect x='" << width - mr - 170 << "' y='" << ly - 9
        << "' width='12' height='12' fill='" << s.color << "'/>\n";
    svg << "<text x='" << width - mr - 152 << "' y='" << ly + 2
        << "' font-size='12' font-family='sans-serif'>" << s.label
        << "</text>\n";
    ly += 18;
  }
  svg << "</svg>\n";

  std::ofstream os(path);
  check(os.good(), "svg_plot: cannot write " + path);
  os << svg.str();
}

void pgm_heatmap(const std::string& path, const Tensor& matrix) {
  check(matrix.ndim() == 2, "pgm_heatmap: rank 2 only");
  const int rows = matrix.rows(), cols = matrix.cols();
  double lo = 1e300, hi = -1e300;
  for (double v : matrix.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) hi = lo + 1;
  std::ofstream os(path, std::ios::binary);
  check(os.good(), "pgm_heatmap: cannot write " + path);
  // Image: time on x, feature index on y with bin 0 at the bottom.
  os << "P5\n" << rows << ' ' << cols << "\n255\n";
  for (int m = cols - 1; m >= 0; --m) {
    for (int t = 0; t < rows; ++t) {
      const double v = (matrix.at(t, m) - lo) / (hi - lo);
      os.put(static_cast<char>(
          static_cast<unsigned char>(std::lround(v * 255))));
    }
  }
}

std::vector<std::array<double, 2>> pca_2d(
    const std::vector<std::vector<double>>& rows) {
  check(rows.size() >= 2, "pca_2d: need at least two rows");
  const int n = static_cast<int>(rows.size());
  const int d = static_cast<int>(rows[0].size());
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i) {
    check(static_cast<int>(rows[i].size()) == d, "pca_2d: ragged rows");
    for (int j = 0; j < d; ++j) x(i, j) = rows[i][j];
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / std::max(1, n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  // Largest two eigenvectors (Eigen sorts ascending).
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(d, 2);
  basis.col(0) = solver.eigenvectors().col(d - 1);
  if (d >= 2) basis.col(1) = solver.eigenvectors().col(d - 2);
  const Eigen::MatrixXd proj = x * basis;
  std::vector<std::array<double, 2>> out(n);
  for (int i = 0; i < n; ++i) out[i] = {proj(i, 0), proj(i, 1)};
  return out;
}

}  // namespace musesvs
