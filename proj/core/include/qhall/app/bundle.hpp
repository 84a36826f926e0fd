#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace qhall::app {

struct Column {
    std::string name;
    std::string unit;   // "1" for dimensionless
};

enum class PlotKind { none, heatmap, lines };

// How emit_plot draws a table. Heatmaps read (x, y, value) columns from long
// rows; line plots draw y against x, one polyline per distinct `series` value.
struct PlotSpec {
    PlotKind kind = PlotKind::none;
    int x = 0;
    int y = 1;
    int value = 2;
    int series = -1;
    std::vector<double> x_markers;   // vertical guide lines, e.g. cycle boundaries
    std::string title;
};

struct Table {
    std::string name;                       // file stem, [A-Za-z0-9_-]
    std::vector<Column> columns;
    std::vector<std::vector<double>> rows;
    std::string note;                       // how the numbers were produced
    PlotSpec plot;

    void add(std::vector<double> row);
};

struct ResultBundle {
    std::string experiment;
    std::string config_hash;
    std::string code_version;
    std::string timestamp;            // UTC, ISO 8601; never written into grid files
    std::uint64_t seed = 0;
    std::vector<Table> tables;
    std::vector<std::string> summary;  // one-line human-readable results

    const Table* find(const std::string& name) const;
    // FNV-1a over every grid file's bytes, in table order.
    std::string content_hash() const;
};

// Grid text: '#' header lines (table, experiment, config hash, columns with
// units, note) followed by comma-separated rows at 9 significant digits.
std::string grid_text(const ResultBundle& bundle, const Table& table);
std::string format_number(double v);

// Writes <dir>/<table>.csv; returns the path.
std::filesystem::path emit_grid(const ResultBundle& bundle, const Table& table, const std::filesystem::path& dir);

struct PlotStyle {
    int width = 720;
    int height = 480;
};

// Self-contained SVG. Throws InvalidArgument for tables without a plot kind.
std::string plot_svg(const Table& table, const PlotStyle& style = {});
std::filesystem::path emit_plot(const Table& table, const std::filesystem::path& dir, const PlotStyle& style = {});

// Every grid, manifest.json and optionally every plottable SVG.
std::vector<std::filesystem::path> emit_bundle(const ResultBundle& bundle, const std::filesystem::path& dir,
                                               bool plots, const std::string& config_text);

}  // namespace qhall::app
