#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trialmix/error.hpp"

namespace trialmix {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Problem sizes. Images are ordered epoch-major: image n = j*T + t for
/// epoch j and within-epoch sample t, so a voxel series of length N maps
/// onto a column-major T x E matrix without copying.
struct Dims {
  int T = 0;  ///< images per epoch
  int E = 0;  ///< epochs
  int V = 0;  ///< voxels
  int q = 0;  ///< covariate columns

  int n() const { return T * E; }
  bool operator==(const Dims&) const = default;
};

void validate(const Dims& dims);

struct Coord {
  int x = 0;
  int y = 0;
  int z = 0;
  auto operator<=>(const Coord&) const = default;
};

/// Scanner and paradigm metadata carried alongside the voxel series.
struct Acquisition {
  double tr_seconds = 2.0;
  int slice_count = 1;
  std::vector<double> stimulus_times;       ///< E onsets in seconds
  std::vector<double> post_stimulus_times;  ///< T sample times after each onset
  std::array<int, 3> grid_shape{1, 1, 1};
  std::array<double, 3> voxel_size_mm{1.0, 1.0, 1.0};

  bool operator==(const Acquisition&) const = default;
};

/// Masked voxel time series plus covariates and geometry.
struct Dataset {
  Dims dims;
  MatrixXd series;  ///< N x V, one column per voxel
  MatrixXd design;  ///< N x q, columns mean-zero
  std::vector<Coord> coords;
  Acquisition acq;

  /// Voxel i's series viewed as a T x E matrix (column j = epoch j).
  Eigen::Map<const MatrixXd> epochs(int voxel) const {
    return {series.col(voxel).data(), dims.T, dims.E};
  }
  /// Covariate c viewed as a T x E matrix.
  Eigen::Map<const MatrixXd> design_epochs(int column) const {
    return {design.col(column).data(), dims.T, dims.E};
  }
};

/// Checks shapes, design centering and coordinate uniqueness.
void validate(const Dataset& data);

/// Unit-norm response shape with a positive maximum-magnitude entry.
struct Hrf {
  VectorXd values;
  bool sign_flipped = false;  ///< true when normalization negated the input

  /// Normalizes to unit norm and fixes the sign. Returns the scale that was
  /// divided out (signed: negative when the sign was flipped).
  static Hrf normalized(const VectorXd& raw, double* signed_scale = nullptr);
  int size() const { return static_cast<int>(values.size()); }
};

/// Index of the entry of largest magnitude (first one on ties).
Eigen::Index max_abs_index(const VectorXd& v);

/// The full parameter state of the two-component mixture.
struct MixtureParams {
  double p = 0.5;
  VectorXd beta;  ///< V response scales
  MatrixXd b;     ///< q x V covariate coefficients
  Hrf h;
  MatrixXd sigma_T;  ///< T x T within-epoch covariance
  MatrixXd sigma_E;  ///< E x E between-epoch covariance
  double sigma2 = 1.0;
};

struct ValidationOptions {
  bool require_unit_trace_E = true;  ///< trace(sigma_E) == E
  double symmetry_tol = 1e-12;
  double trace_tol = 1e-9;
};

/// Throws when any MixtureParams invariant is violated.
void validate(const MixtureParams& params, const Dims& dims, const ValidationOptions& opt = {});

/// Posterior probabilities that each voxel is active.
struct Responsibilities {
  VectorXd p_i;
};

/// The T x E residual matrix of voxel i under the active component.
MatrixXd residual_matrix(const Dataset& data, const MixtureParams& params, int voxel);

/// Residual of the inactive component, Y_i - X b_i, as a length-N vector.
VectorXd inactive_residual(const Dataset& data, const MixtureParams& params, int voxel);

struct FitResult {
  MixtureParams params;
  Responsibilities resp;
  std::vector<double> loglik_trace;  ///< entry 0 is the starting value
  std::vector<double> change_trace;  ///< relative global-parameter change per iteration
  int iterations = 0;
  bool converged = false;
  Warnings warnings;
};

/// Per-voxel test results.
struct ActivationMap {
  std::vector<double> t;
  std::vector<double> p;
  std::vector<bool> reject;
  std::vector<int> cluster;  ///< 0 = unassigned
  std::vector<bool> perfect_fit;  ///< residual variance was exactly zero
  int df = 0;
  double threshold = 0.0;
};

/// Two-way additive ANOVA fit with sum-to-zero coding.
struct AnovaTable {
  double grand_mean = 0.0;
  double grand_mean_se = 0.0;
  std::vector<double> event_effects;
  std::vector<double> event_se;
  std::vector<double> cluster_effects;
  std::vector<double> cluster_se;
  std::vector<int> event_levels;    ///< label of each event level, ascending
  std::vector<int> cluster_levels;  ///< label of each cluster level, ascending
  double residual_variance = 0.0;
  int residual_df = 0;
  MatrixXd fitted;  ///< cluster level x event level cell values

  double fitted_cell(int cluster_label, int event_label) const;
};

/// Eigen-structure of a covariance factor for reporting.
struct Spectrum {
  VectorXd eigenvalues;  ///< descending
  MatrixXd loadings;     ///< columns are eigenvectors
  VectorXd percent;      ///< 100 * lambda_k / sum(lambda)
};

struct PcAnalysis {
  Spectrum time;   ///< of sigma_T
  Spectrum epoch;  ///< of sigma_E
  int K = 0;
  std::vector<int> voxels;         ///< active voxel indices
  std::vector<int> voxel_cluster;  ///< cluster label per active voxel
  std::vector<double> scores;      ///< [voxel][event][component], row-major

  double score(std::size_t active, int event, int component, int E) const {
    return scores[(active * static_cast<std::size_t>(E) + static_cast<std::size_t>(event)) *
                      static_cast<std::size_t>(K) +
                  static_cast<std::size_t>(component)];
  }

  std::vector<AnovaTable> anova;  ///< one per retained component
  std::vector<int> clusters;      ///< distinct cluster labels, ascending
  std::vector<double> cluster_beta;  ///< mean beta_i per cluster
};

}  // namespace trialmix
