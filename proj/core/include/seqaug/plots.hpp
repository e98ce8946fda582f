#pragma once

// Minimal static SVG figures. Output is a deterministic function of the
// inputs so figures can be diffed between runs.

#include <string>
#include <vector>

#include <Eigen/Core>

#include "seqaug/projection.hpp"
#include "seqaug/schema.hpp"

namespace seqaug::plots {

/// Overlaid real/synthetic histograms of one variable on a shared support.
std::string distribution_svg(const VariableSpec& spec, const std::vector<double>& real,
                             const std::vector<double>& syn, int bins = 30);

/// Diverging-colour heatmap of a [-1, 1] matrix; NaN cells are grey.
std::string heatmap_svg(const std::string& title, const Eigen::MatrixXd& m,
                        const std::vector<std::string>& names);

/// Scatter of projected real and synthetic points.
std::string scatter_svg(const std::string& title, const metrics::Projection& p);

}  // namespace seqaug::plots
