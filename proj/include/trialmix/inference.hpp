#pragma once

#include <optional>
#include <span>
#include <vector>

#include "trialmix/types.hpp"

namespace trialmix::inference {

/// Applies (sigma_E (x) sigma_T)^-1/2 factor-wise to length-N vectors.
class Whitener {
 public:
  Whitener(const MatrixXd& sigma_T, const MatrixXd& sigma_E);
  VectorXd apply(const VectorXd& v) const;
  MatrixXd apply_columns(const MatrixXd& m) const;

 private:
  MatrixXd root_T_;  // sigma_T^-1/2
  MatrixXd root_E_;  // sigma_E^-1/2
};

struct Whitened {
  VectorXd y;
  VectorXd mu;
  MatrixXd X;
};

Whitened whiten(const VectorXd& y, const VectorXd& mu, const MatrixXd& X,
                const MatrixXd& sigma_T, const MatrixXd& sigma_E);

struct TStat {
  double t = 0.0;
  int df = 0;
  double beta = 0.0;
  double s2 = 0.0;
  bool perfect_fit = false;  ///< S^2 == 0; t is +-inf (0 when beta == 0)
};

/// Least squares of a whitened series on [mu*, X*] for many voxels sharing
/// the same regressors.
class TTest {
 public:
  TTest(const VectorXd& mu_star, const MatrixXd& X_star);
  TStat operator()(const VectorXd& y_star) const;
  int df() const { return df_; }

 private:
  MatrixXd Z_;
  MatrixXd pinv_;        // (Z'Z)^-1 Z'
  double var_factor_ = 0.0;  // [(Z'Z)^-1]_00
  int df_ = 0;
};

/// One-voxel convenience over TTest.
TStat t_statistic(const VectorXd& y_star, const VectorXd& mu_star, const MatrixXd& X_star);

/// Upper tail P(T > t) of Student's t with `df` degrees of freedom.
double t_sf(double t, int df);

struct FdrResult {
  double q = 0.0;
  int m = 0;
  int m0_hat = 0;
  double threshold = 0.0;  ///< largest rejected p-value, 0 if none
  std::vector<bool> reject;
  int rejections = 0;
};

/// Lowest-slope estimate of the number of true nulls.
int estimate_null_count(std::span<const double> pvals);

/// Step-up procedure at level q with the null count estimated by
/// estimate_null_count (or forced via `m0`). Rejection levels are capped at
/// q so the threshold never exceeds the target rate.
FdrResult fdr_adaptive(std::span<const double> pvals, double q, std::optional<int> m0 = std::nullopt);

/// Connected components under 26-connectivity. Components smaller than
/// `min_size` get label 0; the rest are numbered 1.. by descending size.
std::vector<int> cluster_active(const std::vector<Coord>& coords, int min_size = 5);

/// Lloyd's k-means on coordinates with farthest-point seeding; labels 1..k
/// by descending cluster size.
std::vector<int> kmeans_clusters(const std::vector<Coord>& coords, int k, int max_iter = 100);

struct InferenceConfig {
  double q = 0.05;
  std::optional<double> screen_alpha;  ///< e.g. 0.001; applied with the FDR cut
  int min_cluster_size = 5;
  bool kmeans = false;
  int kmeans_k = 3;
};

/// Whitens every voxel with the fitted covariance, tests H1: beta_i > 0,
/// applies adaptive FDR and clusters the rejected voxels.
ActivationMap infer(const Dataset& data, const MixtureParams& params, const InferenceConfig& config,
                    FdrResult* fdr_out = nullptr);

}  // namespace trialmix::inference
