#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace avm::cli {

/// Provenance written at the top of every CSV and SVG file.
struct Provenance {
    std::string command;
    std::string config_hash;

    std::string line() const;  ///< "avm <version> command=<cmd> config_hash=<hash>"
};

/// Shortest round-trip-safe text for a double ("%.17g"; non-finite values as nan/inf/-inf).
std::string format_number(double x);

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const Provenance& prov, const std::vector<std::string>& columns);

    void row(std::span<const double> values);
    void row(std::initializer_list<double> values) { row(std::span<const double>(values.begin(), values.size())); }
    /// Extra `#`-prefixed line.
    void comment(const std::string& text);

private:
    std::ofstream out_;
    std::size_t columns_;
    std::filesystem::path path_;
};

/// Writes a JSON array of flat records. JSON has no comment syntax, so no provenance line.
void write_json_records(const std::filesystem::path& path, const nlohmann::json& records);

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;  ///< non-finite points break the polyline
};

struct Plot {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    /// Fixed axis ranges; when lo == hi the range is taken from the data.
    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
    std::vector<Series> series;
};

/// Native SVG line plot with a fixed 640x480 viewBox.
void write_svg(const std::filesystem::path& path, const Provenance& prov, const Plot& plot);

} // namespace avm::cli
