// musesvs/plots.hpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef MUSESVS_PLOTS_HPP_
#define MUSESVS_PLOTS_HPP_

#include <array>
#include <string>
#include <vector>

#include "musesvs/tensor.hpp"

namespace musesvs {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
  bool points_only = false;
};

// Minimal static SVG renderer: axes, polylines, scatter groups, legend.
void svg_plot(const std::string& path, const std::vector<PlotSeries>& series,
              const std::string& title, const std::string& x_label,
              const std::string& y_label);

// Grayscale PGM heatmap (rows bottom-up so low mel bins sit at the bottom).
void pgm_heatmap(const std::string& path, const Tensor& matrix);

// First two principal components of the row vectors.
std::vector<std::array<double, 2>> pca_2d(
    const std::vector<std::vector<double>>& rows);

const std::vector<std::string>& plot_palette();

}  // namespace musesvs

#endif  // MUSESVS_PLOTS_HPP_
