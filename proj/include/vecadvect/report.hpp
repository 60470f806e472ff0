#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "vecadvect/field.hpp"

namespace vecadvect {

// Insertion-ordered so emitted files are stable and diffable across reruns.
using Json = nlohmann::ordered_json;

// Throws ConfigError on missing files or malformed JSON.
Json load_json_file(const std::string& path);

// Pretty-printed, two-space indent, trailing newline.
void write_json_file(const std::string& path, const Json& j);

// Numeric table with a header row; every row must match the header width.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void write_csv(const std::string& path, const CsvTable& table);

// One plotted line. When yerr is nonempty it must match y in length and
// draws symmetric vertical error bars.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> yerr;
};

struct PlotSpec {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
};

// Writes <stem>.svg plus the sibling <stem>.csv holding the same numbers
// in long format (series,x,y,yerr). The SVG is self contained: polylines,
// markers, error bars, ticks and a legend, no external resources. Log axes
// drop nonpositive points.
void write_plot(const std::string& stem, const PlotSpec& spec,
                const std::vector<Series>& series);

// dim, sizes, box, per-component min/max/norm and the relative divergence
// norm, as consumed by the inspect subcommand.
Json field_summary(const VectorField& f);

}  // namespace vecadvect
