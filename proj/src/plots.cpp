#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mcrelab/csv.hpp"
#include "mcrelab/experiments.hpp"

namespace mcrelab::experiments {

namespace fs = std::filesystem;

namespace {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

Table read_csv(const fs::path& path) {
    Table t;
    std::ifstream in(path);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first) {
            t.header = cells;
            first = false;
        } else if (!cells.empty()) {
            t.rows.push_back(cells);
        }
    }
    return t;
}

int column(const Table& t, const std::string& name) {
    for (std::size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<double> numeric_column(const Table& t, int idx) {
    std::vector<double> out;
    for (const auto& row : t.rows)
        out.push_back(std::stod(row[static_cast<std::size_t>(idx)]));
    return out;
}

struct Series {
    std::string name;
    std::vector<double> x, y;
};

// Minimal static SVG line chart; log-scale y when requested, step mode doubles
// points into staircases.
void write_svg(const fs::path& path, const std::string& title,
               const std::vector<Series>& series, bool log_y, bool step) {
    const double W = 760, H = 480, ml = 70, mr = 20, mt = 40, mb = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double y = s.y[i];
            if (log_y && y <= 0.0) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmin > xmax || ymin > ymax) return;
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;
    auto ty = [&](double y) {
        double v = log_y ? std::log10(y) : y;
        double lo = log_y ? std::log10(ymin) : ymin;
        double hi = log_y ? std::log10(ymax) : ymax;
        if (hi == lo) hi = lo + 1.0;
        return mt + (H - mt - mb) * (1.0 - (v - lo) / (hi - lo));
    };
    auto tx = [&](double x) { return ml + (W - ml - mr) * (x - xmin) / (xmax - xmin); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    std::ofstream out(path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
        << "' viewBox='0 0 " << W << " " << H << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
        << "</text>\n";
    out << "<rect x='" << ml << "' y='" << mt << "' width='" << (W - ml - mr) << "' height='"
        << (H - mt - mb) << "' fill='none' stroke='#999'/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double x = xmin + (xmax - xmin) * i / 5.0;
        out << "<text x='" << tx(x) << "' y='" << H - mb + 18
            << "' text-anchor='middle' font-size='11'>" << format_double(x).substr(0, 8)
            << "</text>\n";
        double yv;
        if (log_y) {
            const double lo = std::log10(ymin), hi = std::log10(ymax);
            yv = std::pow(10.0, lo + (hi - lo) * i / 5.0);
        } else {
            yv = ymin + (ymax - ymin) * i / 5.0;
        }
        out << "<text x='" << ml - 6 << "' y='" << ty(yv) + 4
            << "' text-anchor='end' font-size='11'>" << format_double(yv).substr(0, 8)
            << "</text>\n";
    }
    int ci = 0;
    double legend_y = mt + 14;
    for (const auto& s : series) {
        const char* color = colors[ci % 8];
        std::ostringstream pts;
        double py = 0.0;
        bool started = false;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (log_y && s.y[i] <= 0.0) continue;
            const double X = tx(s.x[i]), Y = ty(s.y[i]);
            if (step && started) pts << " " << X << "," << py;
            pts << " " << X << "," << Y;
            py = Y;
            started = true;
        }
        out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='"
            << pts.str() << "'/>\n";
        out << "<text x='" << W - mr - 8 << "' y='" << legend_y
            << "' text-anchor='end' font-size='12' fill='" << color << "'>" << s.name
            << "</text>\n";
        legend_y += 16;
        ++ci;
    }
    out << "</svg>\n";
}

void write_dat(const fs::path& path, const std::vector<std::string>& names,
               const std::vector<std::vector<double>>& cols) {
    std::ofstream out(path);
    out << "#";
    for (const auto& n : names) out << " " << n;
    out << "\n";
    if (cols.empty()) return;
    for (std::size_t r = 0; r < cols[0].size(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) out << " ";
            out << format_double(cols[c][r]);
        }
        out << "\n";
    }
}

// Emits one .dat + .svg pair for a CSV with a numeric x column and one or
// more numeric y columns.
void plot_curve(const fs::path& dir, const std::string& csv_name, const std::string& x_col,
                const std::vector<std::string>& y_cols, bool log_y, bool step,
                int* emitted) {
    const fs::path csv_path = dir / csv_name;
    if (!fs::exists(csv_path)) return;
    const Table t = read_csv(csv_path);
    const int xi = column(t, x_col);
    if (xi < 0 || t.rows.empty()) return;
    const auto xs = numeric_column(t, xi);
    std::vector<Series> series;
    std::vector<std::vector<double>> cols{xs};
    std::vector<std::string> names{x_col};
    for (const auto& yc : y_cols) {
        const int yi = column(t, yc);
        if (yi < 0) continue;
        Series s;
        s.name = yc;
        s.x = xs;
        s.y = numeric_column(t, yi);
        series.push_back(s);
        cols.push_back(series.back().y);
        names.push_back(yc);
    }
    if (series.empty()) return;
    const std::string stem = csv_name.substr(0, csv_name.size() - 4);
    write_dat(dir / (stem + ".dat"), names, cols);
    write_svg(dir / (stem + ".svg"), stem, series, log_y, step);
    ++*emitted;
}

void plot_fclt_paths(const fs::path& dir, int* emitted) {
    const fs::path csv_path = dir / "fclt_paths.csv";
    if (!fs::exists(csv_path)) return;
    const Table t = read_csv(csv_path);
    const int ri = column(t, "replica"), ti = column(t, "t"), bi = column(t, "B_n");
    if (ri < 0 || ti < 0 || bi < 0 || t.rows.empty()) return;
    std::map<long long, Series> by_replica;
    for (const auto& row : t.rows) {
        const long long rep = std::stoll(row[static_cast<std::size_t>(ri)]);
        auto& s = by_replica[rep];
        s.x.push_back(std::stod(row[static_cast<std::size_t>(ti)]));
        s.y.push_back(std::stod(row[static_cast<std::size_t>(bi)]));
    }
    std::vector<Series> series;
    for (auto& [rep, s] : by_replica) {
        s.name = "";
        series.push_back(s);
        if (series.size() >= 50) break;
    }
    std::ofstream dat(dir / "fclt_paths.dat");
    dat << "# t B_n (blocks per replica)\n";
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i)
            dat << format_double(s.x[i]) << " " << format_double(s.y[i]) << "\n";
        dat << "\n";
    }
    write_svg(dir / "fclt_paths.svg", "empirical Brownian paths", series, false, true);
    ++*emitted;
}

}  // namespace

int emit_plots(const std::string& result_dir) {
    const fs::path dir(result_dir);
    if (!fs::is_directory(dir)) {
        std::cerr << "plot: not a directory: " << result_dir << "\n";
        return 1;
    }
    int emitted = 0;
    plot_curve(dir, "coupling_tail.csv", "n", {"p_tau_gt_n", "bound_fit"}, true, false, &emitted);
    plot_curve(dir, "tv.csv", "n", {"tv", "bound"}, true, false, &emitted);
    plot_curve(dir, "lln.csv", "n", {"mean_abs"}, true, false, &emitted);
    plot_curve(dir, "felsmann.csv", "n", {"a_n", "exact"}, true, false, &emitted);
    plot_curve(dir, "contractivity_sup.csv", "n", {"sup_root"}, false, false, &emitted);
    plot_curve(dir, "fclt_diagnostics.csv", "t", {"var_B"}, false, false, &emitted);
    plot_curve(dir, "transfer_bound.csv", "n", {"alpha_x", "bound"}, false, false, &emitted);
    plot_curve(dir, "borovkov.csv", "n", {"estimate", "coupling_tv_bound"}, true, false, &emitted);
    plot_curve(dir, "coverage.csv", "a", {"empirical", "bound"}, false, false, &emitted);
    plot_curve(dir, "cesaro.csv", "n", {"cesaro"}, false, false, &emitted);
    plot_curve(dir, "uniform_integrability.csv", "B", {"tail_mean"}, true, false, &emitted);
    plot_curve(dir, "witness.csv", "index", {"gap"}, false, false, &emitted);
    plot_fclt_paths(dir, &emitted);
    if (emitted == 0) {
        std::cout << "nothing to plot in " << result_dir << "\n";
        return 0;
    }
    std::cout << "emitted " << emitted << " plot(s) in " << result_dir << "\n";
    return 0;
}

}  // namespace mcrelab::experiments
