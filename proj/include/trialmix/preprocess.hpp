#pragma once

#include <array>
#include <span>
#include <vector>

#include "trialmix/types.hpp"

namespace trialmix::preprocess {

struct PreprocConfig {
  double dct_cutoff_seconds = 128.0;
  double fwhm_mm = 1.5;
  bool smooth = true;
  bool time_shift = true;
  bool highpass = true;
  bool center = true;
};

/// A scalar 3-D grid, x fastest.
struct Volume {
  std::array<int, 3> shape{0, 0, 0};
  std::vector<double> values;

  Volume() = default;
  explicit Volume(std::array<int, 3> s, double fill = 0.0)
      : shape(s), values(static_cast<std::size_t>(s[0]) * s[1] * s[2], fill) {}

  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * shape[1] + y) * shape[0] + x;
  }
  double& at(int x, int y, int z) { return values[index(x, y, z)]; }
  double at(int x, int y, int z) const { return values[index(x, y, z)]; }
};

struct Mask {
  std::array<int, 3> shape{0, 0, 0};
  std::vector<unsigned char> inside;

  Mask() = default;
  explicit Mask(std::array<int, 3> s, bool fill = true)
      : shape(s), inside(static_cast<std::size_t>(s[0]) * s[1] * s[2], fill ? 1 : 0) {}
  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * shape[1] + y) * shape[0] + x;
  }
  bool at(int x, int y, int z) const { return inside[index(x, y, z)] != 0; }
  void set(int x, int y, int z, bool v) { inside[index(x, y, z)] = v ? 1 : 0; }
};

/// Number of cosine regressors removed: floor(2 N TR / cutoff).
int dct_order(int n, double tr_seconds, double cutoff_seconds);

/// Removes the least-squares projection onto the DCT-II basis functions
/// cos(pi k (2t+1) / 2N), k = 1..K. The constant term is left alone.
VectorXd dct_highpass(const VectorXd& series, double tr_seconds, double cutoff_seconds);
MatrixXd dct_highpass_columns(const MatrixXd& columns, double tr_seconds, double cutoff_seconds);

VectorXd mean_center(const VectorXd& series);
MatrixXd center_design(const MatrixXd& design);

/// Resamples each epoch of T samples at t - shift[j] (units of TR) by a
/// Fourier phase shift. The Nyquist bin of an even-length epoch has no
/// real-valued fractional shift and is passed through unchanged.
VectorXd trial_time_shift(const VectorXd& series, std::span<const double> shifts, int T);

/// Per-epoch shifts (units of TR, in [-0.5, 0.5)) that realign every epoch's
/// samples to the first epoch's post-stimulus times.
std::vector<double> epoch_shifts(const Acquisition& acq, int T);

/// Separable Gaussian smoothing, sigma = fwhm / (2 sqrt(2 ln 2) voxel_size)
/// per axis, kernel truncated at 4 sigma and normalized. Volume edges are
/// mirrored (half-sample symmetric), which keeps both constants and the
/// total sum. Voxels outside `mask` are excluded from numerator and
/// normalizer and left untouched in the output.
Volume gaussian_smooth_3d(const Volume& volume, double fwhm_mm,
                          const std::array<double, 3>& voxel_size_mm, const Mask* mask = nullptr);

/// Extracts the voxels inside `mask` (x fastest, then y, then z) from a
/// sequence of N = T*E volumes.
Dataset apply_mask(const std::vector<Volume>& volumes, const Mask& mask, const MatrixXd& design,
                   const Acquisition& acq, int T, int E);

/// Full chain: smooth -> trial_time_shift -> dct_highpass -> mean_center,
/// with the design high-passed and centered the same way.
Dataset run(const Dataset& data, const PreprocConfig& config);

}  // namespace trialmix::preprocess
