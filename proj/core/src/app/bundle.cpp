#include "qhall/app/bundle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "qhall/app/config.hpp"
#include "qhall/error.hpp"

namespace qhall::app {

namespace fs = std::filesystem;

void Table::add(std::vector<double> row) {
    if (row.size() != columns.size()) {
        throw InvalidArgument("table " + name + ": row has " + std::to_string(row.size()) + " values for " +
                              std::to_string(columns.size()) + " columns");
    }
    rows.push_back(std::move(row));
}

const Table* ResultBundle::find(const std::string& name) const {
    for (const auto& t : tables) {
        if (t.name == name) {
            return &t;
        }
    }
    return nullptr;
}

std::string ResultBundle::content_hash() const {
    std::uint64_t h = fnv1a("");
    for (const auto& t : tables) {
        h = fnv1a(grid_text(*this, t), h);
    }
    return hex_hash(h);
}

std::string format_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    if (v == 0.0) {
        return "0";   // folds -0
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string grid_text(const ResultBundle& bundle, const Table& table) {
    std::string out;
    out += "# table: " + table.name + "\n";
    out += "# experiment: " + bundle.experiment + "\n";
    out += "# config_hash: " + bundle.config_hash + "\n";
    out += "# seed: " + std::to_string(bundle.seed) + "\n";
    if (!table.note.empty()) {
        out += "# note: " + table.note + "\n";
    }
    out += "# columns: ";
    for (size_t c = 0; c < table.columns.size(); ++c) {
        out += (c ? ", " : "") + table.columns[c].name + " [" + table.columns[c].unit + "]";
    }
    out += "\n";
    for (const auto& row : table.rows) {
        for (size_t c = 0; c < row.size(); ++c) {
            if (c) {
                out += ", ";
            }
            out += format_number(row[c]);
        }
        out += "\n";
    }
    return out;
}

namespace {

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << text;
    if (!out.flush()) {
        throw std::runtime_error("write to " + path.string() + " failed");
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
    }
}

std::string fmt(double v, const char* spec = "%.4g") {
    char buf[48];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

// Perceptually ordered dark-blue -> teal -> yellow ramp.
std::string ramp(double u) {
    static const std::array<std::array<double, 3>, 5> stops{{
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
    u = std::clamp(u, 0.0, 1.0) * (stops.size() - 1);
    const auto i = std::min(static_cast<size_t>(u), stops.size() - 2);
    const double f = u - static_cast<double>(i);
    char buf[8];
    int rgb[3];
    for (int c = 0; c < 3; ++c) {
        rgb[c] = static_cast<int>(std::lround(stops[i][c] + f * (stops[i + 1][c] - stops[i][c])));
    }
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
    return buf;
}

std::vector<double> distinct(const Table& t, int col) {
    std::vector<double> v;
    v.reserve(t.rows.size());
    for (const auto& r : t.rows) {
        v.push_back(r[static_cast<size_t>(col)]);
    }
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

struct Frame {
    double left = 70, right = 20, top = 30, bottom = 50;
    double w, h;
    double x0, x1, y0, y1;

    double px(double x) const { return left + (x - x0) / (x1 - x0) * (w - left - right); }
    double py(double y) const { return h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom); }
};

std::string axes(const Frame& f, const Column& xc, const Column& yc, const std::string& title) {
    std::string s;
    s += "<rect x=\"" + fmt(f.left) + "\" y=\"" + fmt(f.top) + "\" width=\"" + fmt(f.w - f.left - f.right) +
         "\" height=\"" + fmt(f.h - f.top - f.bottom) + "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
        const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
        s += "<text x=\"" + fmt(f.px(xv)) + "\" y=\"" + fmt(f.h - f.bottom + 16) +
             "\" text-anchor=\"middle\">" + fmt(xv, "%.3g") + "</text>\n";
        s += "<text x=\"" + fmt(f.left - 6) + "\" y=\"" + fmt(f.py(yv) + 4) + "\" text-anchor=\"end\">" +
             fmt(yv, "%.3g") + "</text>\n";
    }
    s += "<text x=\"" + fmt((f.left + f.w - f.right) / 2) + "\" y=\"" + fmt(f.h - 12) +
         "\" text-anchor=\"middle\">" + escape(xc.name + " [" + xc.unit + "]") + "</text>\n";
    s += "<text transform=\"translate(16," + fmt((f.top + f.h - f.bottom) / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" + escape(yc.name + " [" + yc.unit + "]") + "</text>\n";
    s += "<text x=\"" + fmt(f.left) + "\" y=\"20\">" + escape(title) + "</text>\n";
    return s;
}

std::string heatmap(const Table& t, const PlotStyle& style) {
    const auto& p = t.plot;
    const auto xs = distinct(t, p.x);
    const auto ys = distinct(t, p.y);
    double vmax = 0.0, vmin = 0.0;
    for (const auto& r : t.rows) {
        vmax = std::max(vmax, r[static_cast<size_t>(p.value)]);
        vmin = std::min(vmin, r[static_cast<size_t>(p.value)]);
    }
    Frame f{};
    f.w = style.width;
    f.h = style.height;
    const double dx = xs.size() > 1 ? (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1) : 1.0;
    const double dy = ys.size() > 1 ? (ys.back() - ys.front()) / static_cast<double>(ys.size() - 1) : 1.0;
    f.x0 = xs.front() - dx / 2;
    f.x1 = xs.back() + dx / 2;
    f.y0 = ys.front() - dy / 2;
    f.y1 = ys.back() + dy / 2;
    std::string s;
    const double span = vmax - vmin > 0 ? vmax - vmin : 1.0;
    for (const auto& r : t.rows) {
        const double x = r[static_cast<size_t>(p.x)];
        const double y = r[static_cast<size_t>(p.y)];
        const double v = r[static_cast<size_t>(p.value)];
        const double xa = f.px(x - dx / 2), xb = f.px(x + dx / 2);
        const double ya = f.py(y + dy / 2), yb = f.py(y - dy / 2);
        s += "<rect x=\"" + fmt(xa, "%.2f") + "\" y=\"" + fmt(ya, "%.2f") + "\" width=\"" +
             fmt(xb - xa + 0.3, "%.2f") + "\" height=\"" + fmt(yb - ya + 0.3, "%.2f") + "\" fill=\"" +
             ramp((v - vmin) / span) + "\"/>\n";
    }
    return s + axes(f, t.columns[static_cast<size_t>(p.x)], t.columns[static_cast<size_t>(p.y)],
                    t.plot.title.empty() ? t.name : t.plot.title);
}

std::string lines(const Table& t, const PlotStyle& style) {
    const auto& p = t.plot;
    std::map<double, std::vector<std::pair<double, double>>> series;
    Frame f{};
    f.w = style.width;
    f.h = style.height;
    f.x0 = f.y0 = INFINITY;
    f.x1 = f.y1 = -INFINITY;
    for (const auto& r : t.rows) {
        const double key = p.series >= 0 ? r[static_cast<size_t>(p.series)] : 0.0;
        const double x = r[static_cast<size_t>(p.x)], y = r[static_cast<size_t>(p.y)];
        if (!std::isfinite(x) || !std::isfinite(y)) {
            continue;
        }
        series[key].emplace_back(x, y);
        f.x0 = std::min(f.x0, x);
        f.x1 = std::max(f.x1, x);
        f.y0 = std::min(f.y0, y);
        f.y1 = std::max(f.y1, y);
    }
    if (series.empty()) {
        f.x0 = f.y0 = 0;
        f.x1 = f.y1 = 1;
    }
    if (f.x1 <= f.x0) {
        f.x1 = f.x0 + 1;
    }
    const double pad = f.y1 > f.y0 ? 0.05 * (f.y1 - f.y0) : 0.5;
    f.y0 -= pad;
    f.y1 += pad;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};
    std::string s;
    for (double m : p.x_markers) {
        if (m >= f.x0 && m <= f.x1) {
            s += "<line x1=\"" + fmt(f.px(m)) + "\" x2=\"" + fmt(f.px(m)) + "\" y1=\"" + fmt(f.py(f.y0)) +
                 "\" y2=\"" + fmt(f.py(f.y1)) + "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
        }
    }
    size_t k = 0;
    for (const auto& [key, pts] : series) {
        const char* color = colors[k % 7];
        s += "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" + std::string(color) + "\" points=\"";
        for (const auto& [x, y] : pts) {
            s += fmt(f.px(x), "%.2f") + "," + fmt(f.py(y), "%.2f") + " ";
        }
        s += "\"/>\n";
        if (p.series >= 0) {
            s += "<text x=\"" + fmt(f.w - f.right - 6) + "\" y=\"" + fmt(f.top + 16 + 14.0 * k) +
                 "\" text-anchor=\"end\" fill=\"" + color + "\">" +
                 escape(t.columns[static_cast<size_t>(p.series)].name) + " = " + format_number(key) + "</text>\n";
        }
        ++k;
    }
    return s + axes(f, t.columns[static_cast<size_t>(p.x)], t.columns[static_cast<size_t>(p.y)],
                    t.plot.title.empty() ? t.name : t.plot.title);
}

}  // namespace

fs::path emit_grid(const ResultBundle& bundle, const Table& table, const fs::path& dir) {
    ensure_dir(dir);
    const fs::path path = dir / (table.name + ".csv");
    write_file(path, grid_text(bundle, table));
    return path;
}

std::string plot_svg(const Table& table, const PlotStyle& style) {
    if (table.plot.kind == PlotKind::none) {
        throw InvalidArgument("table " + table.name + " has no plot representation");
    }
    const int ncols = static_cast<int>(table.columns.size());
    for (int c : {table.plot.x, table.plot.y}) {
        if (c < 0 || c >= ncols) {
            throw InvalidArgument("table " + table.name + ": plot column out of range");
        }
    }
    std::string body;
    if (table.rows.empty()) {
        body = "<text x=\"20\" y=\"40\">" + escape(table.name) + ": no data</text>\n";
    } else if (table.plot.kind == PlotKind::heatmap) {
        body = heatmap(table, style);
    } else {
        body = lines(table, style);
    }
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(style.width) + "\" height=\"" +
           std::to_string(style.height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n" +
           "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body + "</svg>\n";
}

fs::path emit_plot(const Table& table, const fs::path& dir, const PlotStyle& style) {
    ensure_dir(dir);
    const fs::path path = dir / (table.name + ".svg");
    write_file(path, plot_svg(table, style));
    return path;
}

std::vector<fs::path> emit_bundle(const ResultBundle& bundle, const fs::path& dir, bool plots,
                                  const std::string& config_text) {
    ensure_dir(dir);
    std::vector<fs::path> written;
    nlohmann::ordered_json manifest;
    manifest["experiment"] = bundle.experiment;
    manifest["config_hash"] = bundle.config_hash;
    manifest["content_hash"] = bundle.content_hash();
    manifest["code_version"] = bundle.code_version;
    manifest["timestamp"] = bundle.timestamp;
    manifest["seed"] = bundle.seed;
    manifest["summary"] = bundle.summary;
    auto& tables = manifest["tables"] = nlohmann::ordered_json::array();
    for (const auto& t : bundle.tables) {
        written.push_back(emit_grid(bundle, t, dir));
        nlohmann::ordered_json entry;
        entry["name"] = t.name;
        entry["file"] = t.name + ".csv";
        entry["rows"] = t.rows.size();
        entry["note"] = t.note;
        auto& cols = entry["columns"] = nlohmann::ordered_json::array();
        for (const auto& c : t.columns) {
            cols.push_back({{"name", c.name}, {"unit", c.unit}});
        }
        if (plots && t.plot.kind != PlotKind::none) {
            written.push_back(emit_plot(t, dir));
            entry["plot"] = t.name + ".svg";
        }
        tables.push_back(entry);
    }
    write_file(dir / "config.json", config_text);
    written.push_back(dir / "config.json");
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    written.push_back(dir / "manifest.json");
    return written;
}

}  // namespace qhall::app
