#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "multifrac/errors.hpp"

// CSV tables (comma separated, header row, 17 significant digits) and
// self-contained SVG polyline plots.

namespace multifrac::io {

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header) : columns_(std::move(header)) {}

    void add_row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_.size())
            throw std::invalid_argument("CsvWriter: row width does not match header");
        rows_.push_back(cells);
    }

    void add_row(const std::vector<double>& cells) {
        std::vector<std::string> s;
        s.reserve(cells.size());
        for (double v : cells) s.push_back(format_number(v));
        add_row(s);
    }

    std::string str() const {
        std::ostringstream out;
        for (std::size_t i = 0; i < columns_.size(); ++i)
            out << (i ? "," : "") << columns_[i];
        out << "\n";
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
            out << "\n";
        }
        return out.str();
    }

    void write(const std::filesystem::path& file) const {
        std::ofstream out(file);
        if (!out) throw std::runtime_error("CsvWriter: cannot open " + file.string());
        out << str();
    }

  private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

struct Series {
    std::string label;
    std::vector<double> x, y;
    std::vector<double> yerr; // optional, drawn as vertical bars
    std::string color = "#1f77b4";
};

// minimal static line plot: axes box, polylines, optional error bars
inline std::string svg_line_plot(const std::string& title, const std::vector<Series>& series,
                                 int width = 640, int height = 400) {
    double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x_lo = std::min(x_lo, s.x[i]);
            x_hi = std::max(x_hi, s.x[i]);
            const double e = i < s.yerr.size() ? s.yerr[i] : 0.0;
            y_lo = std::min(y_lo, s.y[i] - e);
            y_hi = std::max(y_hi, s.y[i] + e);
        }
    if (!(x_hi > x_lo)) x_hi = x_lo + 1.0;
    if (!(y_hi > y_lo)) {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    const double ml = 60, mr = 15, mt = 30, mb = 40;
    const double pw = width - ml - mr, ph = height - mt - mb;
    auto px = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * pw; };
    auto py = [&](double y) { return mt + (y_hi - y) / (y_hi - y_lo) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\" "
           "font-family=\"sans-serif\">"
        << title << "</text>\n";
    svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x_lo + (x_hi - x_lo) * k / 4.0;
        const double yv = y_lo + (y_hi - y_lo) * k / 4.0;
        svg << "<text x=\"" << px(xv) << "\" y=\"" << height - mb + 16
            << "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">" << xv
            << "</text>\n";
        svg << "<text x=\"" << ml - 6 << "\" y=\"" << py(yv) + 3
            << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">" << yv
            << "</text>\n";
    }
    int legend_row = 0;
    for (const auto& s : series) {
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            svg << px(s.x[i]) << "," << py(s.y[i]) << " ";
        svg << "\"/>\n";
        for (std::size_t i = 0; i < s.yerr.size() && i < s.x.size(); ++i) {
            if (s.yerr[i] <= 0.0) continue;
            svg << "<line x1=\"" << px(s.x[i]) << "\" y1=\"" << py(s.y[i] - s.yerr[i])
                << "\" x2=\"" << px(s.x[i]) << "\" y2=\"" << py(s.y[i] + s.yerr[i])
                << "\" stroke=\"" << s.color << "\" stroke-width=\"1\"/>\n";
        }
        svg << "<text x=\"" << ml + 8 << "\" y=\"" << mt + 14 + 14 * legend_row
            << "\" font-size=\"11\" font-family=\"sans-serif\" fill=\"" << s.color << "\">"
            << s.label << "</text>\n";
        ++legend_row;
    }
    svg << "</svg>\n";
    return svg.str();
}

inline void write_text(const std::filesystem::path& file, const std::string& content) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("write_text: cannot open " + file.string());
    out << content;
}

} // namespace multifrac::io
