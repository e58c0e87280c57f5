#pragma once
// Deterministic text output: number formatting, CSV field dumps and SVG plots.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lab/mesh.hpp"

namespace lab {

/// Shortest round-trip decimal form of v ("nan"/"inf" for non-finite values).
std::string format_double(double v);

struct NamedField {
    std::string name;
    const std::vector<double>* values;
};

/// CSV with columns node_id,x[,y],<names...>.
void write_fields_csv(std::ostream& os, const Mesh& mesh, const std::vector<NamedField>& fields);

struct PlotSeries {
    std::string label;
    std::vector<double> values;  ///< one per node
    std::string color;
    bool dashed = false;
};

/// 1D line plot of nodal series against x.
std::string svg_line_plot(const Mesh& mesh, const std::string& title, const std::vector<PlotSeries>& series);
/// 2D raster heat map of one nodal field on the structured grid.
std::string svg_heatmap(const Mesh& mesh, const std::string& title, const std::vector<double>& values);

/// Writes text to a file, creating parent directories. Throws std::runtime_error on I/O failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace lab
