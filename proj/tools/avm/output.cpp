#include "output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#ifndef AVM_VERSION
#define AVM_VERSION "0.0.0"
#endif

namespace avm::cli {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    return out;
}

void check_stream(const std::ofstream& out, const std::filesystem::path& path) {
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string short_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

std::string coord(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                    "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};

} // namespace

std::string Provenance::line() const {
    return std::string("avm ") + AVM_VERSION + " command=" + command + " config_hash=" + config_hash;
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";  // folds -0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const Provenance& prov, const std::vector<std::string>& columns)
    : out_(open_output(path)), columns_(columns.size()), path_(path) {
    out_ << "# " << prov.line() << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
    check_stream(out_, path_);
}

void CsvWriter::row(std::span<const double> values) {
    if (values.size() != columns_) throw std::logic_error(path_.string() + ": row width does not match the header");
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_number(values[i]);
    out_ << '\n';
    check_stream(out_, path_);
}

void CsvWriter::comment(const std::string& text) {
    out_ << "# " << text << '\n';
    check_stream(out_, path_);
}

void write_json_records(const std::filesystem::path& path, const nlohmann::json& records) {
    auto out = open_output(path);
    out << records.dump(2) << '\n';
    check_stream(out, path);
}

void write_svg(const std::filesystem::path& path, const Provenance& prov, const Plot& plot) {
    constexpr double W = 640, H = 480, left = 70, right = 150, top = 40, bottom = 50;
    constexpr double pw = W - left - right, ph = H - top - bottom;

    double xmin = plot.xmin, xmax = plot.xmax, ymin = plot.ymin, ymax = plot.ymax;
    const bool auto_x = xmin == xmax, auto_y = ymin == ymax;
    if (auto_x || auto_y) {
        double lx = std::numeric_limits<double>::infinity(), hx = -lx, ly = lx, hy = -lx;
        for (const auto& s : plot.series)
            for (const auto& [x, y] : s.points) {
                if (!std::isfinite(x) || !std::isfinite(y)) continue;
                lx = std::min(lx, x), hx = std::max(hx, x), ly = std::min(ly, y), hy = std::max(hy, y);
            }
        if (!std::isfinite(lx)) lx = 0, hx = 1, ly = 0, hy = 1;
        if (auto_x) xmin = lx, xmax = hx;
        if (auto_y) ymin = ly, ymax = hy;
    }
    auto widen = [](double& lo, double& hi) {
        if (hi - lo <= 1e-12 * std::max(1.0, std::abs(lo))) {
            const double pad = std::max(1e-12, 0.5 * std::abs(lo));
            lo -= pad, hi += pad;
        }
    };
    widen(xmin, xmax);
    widen(ymin, ymax);
    auto px = [&](double x) { return left + pw * (x - xmin) / (xmax - xmin); };
    auto py = [&](double y) { return top + ph * (1.0 - (y - ymin) / (ymax - ymin)); };

    auto out = open_output(path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<!-- " << prov.line() << " -->\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 480\" width=\"640\" height=\"480\" "
           "font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n";
    out << "<rect x=\"" << coord(left) << "\" y=\"" << coord(top) << "\" width=\"" << coord(pw) << "\" height=\""
        << coord(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<text x=\"" << coord(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
        << xml_escape(plot.title) << "</text>\n";
    out << "<text x=\"" << coord(left + pw / 2) << "\" y=\"" << coord(H - 12)
        << "\" text-anchor=\"middle\">" << xml_escape(plot.xlabel) << "</text>\n";
    out << "<text x=\"18\" y=\"" << coord(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << coord(top + ph / 2) << ")\">" << xml_escape(plot.ylabel) << "</text>\n";

    for (int i = 0; i <= 4; ++i) {
        double fx = xmin + (xmax - xmin) * i / 4.0, fy = ymin + (ymax - ymin) * i / 4.0;
        if (std::abs(fx) <= 1e-9 * (xmax - xmin)) fx = 0.0;
        if (std::abs(fy) <= 1e-9 * (ymax - ymin)) fy = 0.0;
        out << "<text x=\"" << coord(px(fx)) << "\" y=\"" << coord(top + ph + 16) << "\" text-anchor=\"middle\">"
            << short_number(fx) << "</text>\n";
        out << "<text x=\"" << coord(left - 6) << "\" y=\"" << coord(py(fy) + 4) << "\" text-anchor=\"end\">"
            << short_number(fy) << "</text>\n";
    }

    for (std::size_t k = 0; k < plot.series.size(); ++k) {
        const auto& s = plot.series[k];
        const char* color = kPalette[k % std::size(kPalette)];
        std::string pts;
        auto flush = [&] {
            if (!pts.empty())
                out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << pts
                    << "\"/>\n";
            pts.clear();
        };
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) {
                flush();
                continue;
            }
            // Clip to the plotting window so fixed ranges stay inside the frame.
            const double cx = std::clamp(px(x), left, left + pw), cy = std::clamp(py(y), top, top + ph);
            if (!pts.empty()) pts += ' ';
            pts += coord(cx) + "," + coord(cy);
        }
        flush();
        // A single-point series (an equilibrium) is drawn as a dot.
        if (s.points.size() >= 1 && std::all_of(s.points.begin(), s.points.end(), [&](auto& q) { return q == s.points.front(); }))
            out << "<circle cx=\"" << coord(px(s.points.front().first)) << "\" cy=\"" << coord(py(s.points.front().second))
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        const double ly = top + 14 + 16 * static_cast<double>(k);
        out << "<line x1=\"" << coord(left + pw + 10) << "\" y1=\"" << coord(ly - 4) << "\" x2=\""
            << coord(left + pw + 30) << "\" y2=\"" << coord(ly - 4) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << coord(left + pw + 36) << "\" y=\"" << coord(ly) << "\">" << xml_escape(s.label)
            << "</text>\n";
    }
    out << "</svg>\n";
    check_stream(out, path);
}

} // namespace avm::cli
