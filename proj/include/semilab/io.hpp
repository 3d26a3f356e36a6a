#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semilab/carleman.hpp"
#include "semilab/grid.hpp"
#include "semilab/potential.hpp"

namespace semilab {

/// Rejected configuration; the CLI maps it to exit code 2.
class ConfigError : public Error {
public:
  using Error::Error;
};

inline const std::vector<std::string> kTaskNames{"solve",   "fbi",     "cauchy",    "growth",    "carleman",
                                                 "nodal",   "doubling", "tunneling", "vanishing", "render"};

/// Calibrated constants; every one is echoed into the manifest.
struct Thresholds {
  double C_ball = 3.0;          // zero-in-ball radius C_ball h
  double margin = 0.1;          // allowed region {V < E - margin}
  double ratio_cap = 0.9;       // mean-value ratio
  double split_min = 0.05;      // min(int u+, int u-) / int |u|
  double split_fraction = 0.9;  // share of nodal balls meeting split_min
  double ball_factor = 3.0;     // nodal balls of radius ball_factor h
  std::size_t nodal_samples = 200;
  double doubling_factor = 1.0; // doubling radii from doubling_factor h to 0.1
  int doubling_centers = 16;    // per axis
  std::vector<double> tunneling_radii{0.05, 0.1, 0.2};
  double fbi_C0 = 2.0;
  double low_fraction = 0.1;    // render overlap: |u| < low_fraction sup |u|
};

struct CarlemanConfig {
  CarlemanWeight weight{1.0, 1.0, 1.45, 0.3, 0.45, {0.75, 0.5}, 2};
  std::vector<double> mu_list{4.0, 8.0, 16.0};
};

struct ExperimentConfig {
  int spec_version = 1;
  int dim = 2;
  std::optional<int> grid; // empty: minimum_grid_size(h) per h
  std::vector<double> h_list;
  PotentialSpec potential;
  double energy_target = 1.0;
  int eigencount = 1;
  std::vector<std::string> tasks;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  int render_levels = 10;
  /// Strip half-widths for the growth task; empty picks {0, t/2, t} with t
  /// the largest width admissible at every h.
  std::vector<double> growth_t;
  CarlemanConfig carleman;
  Thresholds thresholds;
};

/// Strict JSON: unknown keys anywhere are errors, spec_version must be 1 if
/// given, h_list strictly decreasing and positive, tasks known and nonempty.
ExperimentConfig parse_config(const std::string &text);

/// The config with every default filled in, as JSON text.
std::string config_to_json(const ExperimentConfig &cfg, int indent = 2);

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string &bytes);

/// RFC 4180 writer: header row first, fields quoted only when needed,
/// CRLF line ends.
class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> header);
  /// Lines written before the header, each prefixed with '#'.
  void comment(const std::string &line);
  void row(const std::vector<std::string> &fields);
  std::string str() const;

private:
  std::vector<std::string> comments_;
  std::vector<std::string> header_;
  std::string body_;
  static std::string escape(const std::string &f);
};

/// Field CSV: '#' metadata (dim, n, label), header ix,iy,value, rows x-fastest.
std::string field_to_csv(const ScalarField &u);
ScalarField field_from_csv(const std::string &text);

struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> gray; // row-major, row 0 is y = 0
  double u_min = 0.0;
  double u_max = 0.0;
  std::vector<double> levels;
};

/// gray = round(255 (u - u_min)/(u_max - u_min)); pixels whose grid cell
/// (the point and its +x, +y, +xy neighbours) straddles a level are 0.
/// Levels sit at the centres of n_levels equal bins of [u_min, u_max]. A
/// constant field renders as uniform 128.
RasterImage render_levels(const ScalarField &u, int n_levels);

/// Binary P5 with the mapping recorded in '#' comment lines.
std::string to_pgm(const RasterImage &img);

struct OverlapReport {
  std::size_t mask_pixels = 0;    // {V > E}
  std::size_t overlap_pixels = 0; // {V > E} and |u| < low_fraction sup |u|
  double fraction = 0.0;          // overlap / mask
  std::vector<char> low;          // the low-|u| set
  std::vector<char> mask;
};

OverlapReport forbidden_overlap(const ScalarField &u, const ScalarField &V, double E, double low_fraction);

/// Writes bytes to path, creating parent directories.
void write_file(const std::string &path, const std::string &bytes);
std::string read_file(const std::string &path);

} // namespace semilab
