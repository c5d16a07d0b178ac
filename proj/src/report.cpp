#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace cps {

std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

int CsvTable::column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool header_done = false;
    auto end_field = [&]() {
        row.push_back(field);
        field.clear();
    };
    auto end_row = [&]() {
        end_field();
        if (!header_done) {
            table.header = row;
            header_done = true;
        } else {
            table.rows.push_back(row);
        }
        row.clear();
    };
    for (size_t i = 0; i < text.size(); ++i) {
        char ch = text[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            end_field();
        } else if (ch == '\n') {
            end_row();
        } else if (ch != '\r') {
            field += ch;
        }
    }
    if (!field.empty() || !row.empty()) end_row();
    return table;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) spec_error("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) spec_error("cannot write file: " + path);
    out << content;
    if (!out) spec_error("short write: " + path);
}

namespace {

double axis_value(double v, bool log) { return log ? std::log10(v) : v; }

std::string fmt6(double v) {
    char buf[32];
    snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

std::string svg_plot(const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, const std::vector<PlotSeries>& series,
                     bool logx, bool logy) {
    const double W = 640, H = 440, ML = 70, MR = 20, MT = 40, MB = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series) {
        for (auto [x, y] : s.points) {
            if (logx && x <= 0) continue;
            if (logy && y <= 0) continue;
            double ax = axis_value(x, logx), ay = axis_value(y, logy);
            xmin = std::min(xmin, ax), xmax = std::max(xmax, ax);
            ymin = std::min(ymin, ay), ymax = std::max(ymax, ay);
        }
    }
    if (xmin > xmax) xmin = 0, xmax = 1;
    if (ymin > ymax) ymin = 0, ymax = 1;
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    auto px = [&](double x) { return ML + (axis_value(x, logx) - xmin) / (xmax - xmin) * (W - ML - MR); };
    auto py = [&](double y) { return H - MB - (axis_value(y, logy) - ymin) / (ymax - ymin) * (H - MT - MB); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title
       << "</text>\n";
    os << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR << "\" y2=\""
       << H - MB << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\"" << H - MB
       << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        double fx = xmin + (xmax - xmin) * i / 4.0;
        double fy = ymin + (ymax - ymin) * i / 4.0;
        double vx = logx ? std::pow(10.0, fx) : fx;
        double vy = logy ? std::pow(10.0, fy) : fy;
        double sx = ML + (W - ML - MR) * i / 4.0;
        double sy = H - MB - (H - MT - MB) * i / 4.0;
        os << "<text x=\"" << sx << "\" y=\"" << H - MB + 18
           << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt6(vx) << "</text>\n";
        os << "<text x=\"" << ML - 6 << "\" y=\"" << sy + 4
           << "\" text-anchor=\"end\" font-size=\"11\">" << fmt6(vy) << "</text>\n";
    }
    os << "<text x=\"" << (ML + W - MR) / 2 << "\" y=\"" << H - 12
       << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
    os << "<text x=\"16\" y=\"" << (MT + H - MB) / 2
       << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
       << (MT + H - MB) / 2 << ")\">" << ylabel << "</text>\n";
    for (size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = colors[si % 5];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (auto [x, y] : s.points) {
            if ((logx && x <= 0) || (logy && y <= 0)) continue;
            os << fmt6(px(x)) << "," << fmt6(py(y)) << " ";
        }
        os << "\"/>\n";
        for (auto [x, y] : s.points) {
            if ((logx && x <= 0) || (logy && y <= 0)) continue;
            os << "<circle cx=\"" << fmt6(px(x)) << "\" cy=\"" << fmt6(py(y))
               << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        }
        os << "<text x=\"" << W - MR - 8 << "\" y=\"" << MT + 16 + 16 * si
           << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">" << s.label
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace cps
