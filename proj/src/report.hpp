#pragma once

#include <string>
#include <vector>

namespace cps {

inline constexpr const char* kCsvHeader =
    "experiment_id,kind,graph,n,k,degrees,lambda,c,delta,eta,seed,replicate,outcome,tau,"
    "censored,hits,frozen_total,wall_ms";

std::string format_double(double v);        // shortest round-trip (%.17g), "" for NaN
std::string csv_escape(const std::string& field);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 if absent
};

CsvTable parse_csv(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

struct PlotSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

// Small deterministic SVG line plot; axes are linear or log10.
std::string svg_plot(const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, const std::vector<PlotSeries>& series,
                     bool logx = false, bool logy = false);

}  // namespace cps
