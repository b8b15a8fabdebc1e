#pragma once

#include <span>
#include <utility>
#include <vector>

#include "trialmix/types.hpp"

namespace trialmix::variability {

/// Eigenvalues (descending), sign-fixed loadings and variance percentages.
Spectrum pca_cov(const MatrixXd& s);

/// Voxels with p_i >= 0.5 that the activation map rejected.
std::vector<int> active_voxels(const Responsibilities& resp, const ActivationMap& map);

/// s_ijk = gamma_k' R_i[:, j] for the listed voxels, flattened as
/// [voxel][event][component].
std::vector<double> pc_scores(const Dataset& data, const MixtureParams& params,
                              const std::vector<int>& voxels, const MatrixXd& loadings, int K);

/// Additive two-way ANOVA (event x cluster) with sum-to-zero coding. A single
/// cluster level reduces to one-way on events. With `interaction`, fitted
/// cells are cell means and the residual variance comes from the saturated
/// model.
AnovaTable anova_two_way(std::span<const double> y, std::span<const int> event,
                         std::span<const int> cluster, bool interaction = false);

/// beta * h + sum_k s_k gamma_k.
VectorXd response_from_scores(double beta, const Hrf& h, const MatrixXd& loadings,
                              std::span<const double> scores);

/// beta_c h + sum_k s_cjk gamma_k from the fitted ANOVA cells.
VectorXd fitted_response(const Hrf& h, const PcAnalysis& pcs, int cluster, int event);

/// beta h +- sqrt(lambda_k) gamma_k.
std::pair<VectorXd, VectorXd> pc_effect_curves(const Hrf& h, const Spectrum& spectrum, int k,
                                               double beta = 10.0);

/// Natural cubic spline through (or, with lambda > 0, smoothing) the knots.
class NaturalSpline {
 public:
  NaturalSpline(std::span<const double> x, std::span<const double> y, double lambda = 0.0);
  double operator()(double t) const;
  /// Second derivative at each knot (zero at both ends).
  const VectorXd& second_derivatives() const { return m_; }
  const VectorXd& knot_values() const { return g_; }

 private:
  VectorXd x_;
  VectorXd g_;
  VectorXd m_;
};

struct Curve {
  std::vector<double> t;
  std::vector<double> y;
};

/// Evaluates the spline at `resolution` uniform points spanning the knots.
Curve spline_interp(std::span<const double> x, std::span<const double> y, int resolution,
                    double lambda = 0.0);

struct PcConfig {
  int K = 3;
  bool interaction = false;
};

PcAnalysis build_pc_analysis(const Dataset& data, const MixtureParams& params,
                             const Responsibilities& resp, const ActivationMap& map,
                             const PcConfig& config = {});

}  // namespace trialmix::variability
