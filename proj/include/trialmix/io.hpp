#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "trialmix/model_selection.hpp"
#include "trialmix/simulate.hpp"
#include "trialmix/types.hpp"

namespace trialmix::io {

namespace fs = std::filesystem;

inline constexpr const char* kFormatVersion = "1";

/// Writes header.json, data.f64 and design.csv (and truth.json when given).
void write_dataset(const Dataset& data, const fs::path& dir, const simulate::SimTruth* truth = nullptr);
Dataset read_dataset(const fs::path& dir);

void write_truth(const simulate::SimTruth& truth, const fs::path& file);
simulate::SimTruth read_truth(const fs::path& file);

/// Formats a double with 17 significant digits.
std::string format_double(double v);

struct FitRecord {
  int model = 5;
  FitResult fit;
};

void write_fit(const FitRecord& record, const fs::path& file);
FitRecord read_fit(const fs::path& file);

void write_activation_csv(const Dataset& data, const ActivationMap& map, const fs::path& file);
ActivationMap read_activation_csv(const fs::path& file, std::vector<Coord>* coords = nullptr);

void write_spectrum_csv(const Spectrum& s, const fs::path& file);
void write_scores_csv(const PcAnalysis& pcs, int E, const fs::path& file);
void write_anova_csv(const PcAnalysis& pcs, const fs::path& file);
void write_comparison_csv(const selection::Comparison& cmp, const fs::path& file);
std::string comparison_text(const selection::Comparison& cmp);

/// Minimal CSV table: header plus numeric rows.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
Table read_csv(const fs::path& file);

struct PgmScaling {
  double min = 0.0;
  double max = 0.0;
  bool constant = false;
  int masked = 0;
};

/// 8-bit P5 image, min-max scaled over unmasked pixels (row-major, width
/// fastest). A constant field maps to 128 and masked pixels to 0. Writes
/// `<file>.json` with the scaling.
PgmScaling write_map_pgm(const std::vector<double>& values, const std::vector<unsigned char>& inside,
                         int width, int height, const fs::path& file);

/// One image per z-slice of a per-voxel field, with a single scaling shared
/// by all slices. Returns the written paths.
std::vector<fs::path> write_volume_pgm(const std::vector<double>& voxel_values,
                                       const std::vector<Coord>& coords,
                                       const std::array<int, 3>& grid, const fs::path& dir,
                                       const std::string& stem);

struct Pgm {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> pixels;
};
Pgm read_pgm(const fs::path& file);

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

void write_curves_svg(const std::vector<SvgSeries>& series, const std::string& title, const fs::path& file);

}  // namespace trialmix::io
