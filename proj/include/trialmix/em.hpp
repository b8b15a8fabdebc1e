#pragma once

#include <functional>
#include <optional>
#include <span>

#include "trialmix/linalg.hpp"
#include "trialmix/types.hpp"

namespace trialmix::em {

/// Structure of the active component's covariance.
enum class CovStructure {
  kronecker,   ///< sigma_E (x) sigma_T, both free, trace(sigma_E) = E
  epoch_only,  ///< sigma_E (x) I_T
  time_only,   ///< I_E (x) sigma_T
  spherical,   ///< s * I, stored as sigma_T = s I, sigma_E = I
};

struct IterationLog {
  int iteration = 0;
  double loglik = 0.0;
  double change = 0.0;
  double p = 0.0;
};

/// Log-density of the active component for one voxel. Used to swap the
/// Kronecker evaluation for another route (e.g. a dense reference).
using ActiveDensityFn = std::function<double(const Dataset&, const MixtureParams&, int voxel)>;

struct EmConfig {
  double tol = 1e-4;
  int max_iter = 500;
  int inner_sweeps = 1;     ///< beta/b coordinate sweeps per iteration
  int flipflop_sweeps = 2;  ///< sigma_T/sigma_E alternations per iteration
  double sigma2_floor = 1e-12;
  CovStructure structure = CovStructure::kronecker;
  bool estimate_h = true;
  bool mixture = true;  ///< false: all voxels active, no E-step

  int init_max_iter = 50;
  double init_alpha = 0.001;

  std::function<void(const IterationLog&)> on_iteration;
  ActiveDensityFn active_density;
};

/// Double-gamma response (shapes 6 and 16, unit scale, undershoot ratio 1/6)
/// sampled at `times` seconds, normalized to unit norm with a positive peak.
Hrf canonical_hrf(std::span<const double> times);

/// Raw, unnormalized double-gamma value at t seconds.
double double_gamma(double t);

/// Quantities shared by every voxel for fixed (h, sigma_T, sigma_E, sigma2).
class ModelCache {
 public:
  ModelCache(const Dataset& data, const MixtureParams& params);

  const linalg::KronPrecision& precision() const { return precision_; }
  /// Sigma_1^-1 mu as a length-N vector.
  const VectorXd& prec_mu() const { return prec_mu_; }
  /// mu' Sigma_1^-1 mu = (1' sigma_E^-1 1)(h' sigma_T^-1 h).
  double mu_prec_mu() const { return mu_prec_mu_; }
  /// Sigma_1^-1 X, N x q.
  const MatrixXd& prec_X() const { return prec_X_; }
  /// X' Sigma_1^-1 X.
  const MatrixXd& gram_active() const { return gram_active_; }
  /// X' X.
  const MatrixXd& gram() const { return gram_; }
  /// mu = 1_E (x) h.
  const VectorXd& mu() const { return mu_; }
  double sigma2() const { return sigma2_; }

 private:
  linalg::KronPrecision precision_;
  VectorXd mu_;
  VectorXd prec_mu_;
  double mu_prec_mu_ = 0.0;
  MatrixXd prec_X_;
  MatrixXd gram_active_;
  MatrixXd gram_;
  double sigma2_ = 1.0;
};

double log_density_active(const MatrixXd& residual, const linalg::KronPrecision& precision);
double log_density_active(const Dataset& data, const MixtureParams& params, int voxel);
double log_density_inactive(std::span<const double> residual, double sigma2);
double log_density_inactive(const Dataset& data, const MixtureParams& params, int voxel);

/// Posterior activity from the log-space logit c = log(1-p) - log p + log f2 - log f1.
double responsibility(double p, double log_f1, double log_f2);

Responsibilities estep(const Dataset& data, const MixtureParams& params,
                       const ActiveDensityFn& active_density = {});

double update_p(const Responsibilities& resp);

/// GLS scale for one voxel, (mu' S^-1 mu)^-1 mu' S^-1 (Y - X b).
double update_beta(const ModelCache& cache, const Dataset& data, const VectorXd& b_i, int voxel);
double update_beta(const VectorXd& y, const MatrixXd& X, const VectorXd& b_i, const Hrf& h,
                   const MatrixXd& sigma_T, const MatrixXd& sigma_E);

/// Solves the weighted normal equations that make dQ/db_i vanish.
VectorXd update_b(const ModelCache& cache, const Dataset& data, double beta_i, double p_i, int voxel);
VectorXd update_b(const VectorXd& y, double beta_i, double p_i, const Hrf& h, const MatrixXd& X,
                  const MatrixXd& sigma_T, const MatrixXd& sigma_E, double sigma2);

struct HrfUpdate {
  bool updated = false;
  VectorXd raw;  ///< the stationary point before unit-norm rescaling
  Hrf h;         ///< rescaled and sign-fixed
  VectorXd beta; ///< betas rescaled so every beta_i * h is unchanged
};

/// Closed-form response-shape update followed by rescaling to unit norm and
/// a positive peak. Returns the previous state with a warning when the
/// weighting sums vanish.
HrfUpdate update_h(const Dataset& data, const Responsibilities& resp, const MixtureParams& params,
                   Warnings* warnings = nullptr);

/// sigma_T given sigma_E: sum_i p_i R_i sigma_E^-1 R_i' / (E sum p_i).
MatrixXd update_sigma_T(const Dataset& data, const Responsibilities& resp,
                        const MixtureParams& params);
/// sigma_E given sigma_T: sum_i p_i R_i' sigma_T^-1 R_i / (T sum p_i).
MatrixXd update_sigma_E(const Dataset& data, const Responsibilities& resp,
                        const MixtureParams& params);

struct CovUpdate {
  MatrixXd sigma_T;
  MatrixXd sigma_E;
};

/// Alternates the two factor updates `sweeps` times (or the constrained
/// update for the other structures), rescales trace(sigma_E) to E and guards
/// positive definiteness. Throws EmptyGroupError when sum p_i = 0.
CovUpdate update_covariances(const Dataset& data, const Responsibilities& resp,
                             const MixtureParams& params, int sweeps,
                             CovStructure structure = CovStructure::kronecker,
                             Warnings* warnings = nullptr);

/// Weighted mean square of inactive residuals. Throws EmptyGroupError when
/// every p_i = 1; floors at `floor` with a warning when residuals vanish.
double update_sigma2(const Dataset& data, const Responsibilities& resp, const MatrixXd& b,
                     Warnings* warnings = nullptr, double floor = 1e-12);

/// sum_i log[p f1(Y_i) + (1-p) f2(Y_i)], evaluated in log space.
double observed_loglik(const Dataset& data, const MixtureParams& params,
                       const ActiveDensityFn& active_density = {});

/// Rescales (sigma_E, sigma_T) -> (sigma_E / c, sigma_T * c) so trace(sigma_E) = E.
void normalize_trace(MatrixXd& sigma_E, MatrixXd& sigma_T);

/// Relative Euclidean change of (p, h, vec sigma_T, vec sigma_E, sigma2).
double global_change(const MixtureParams& before, const MixtureParams& after);

/// Starting values: canonical response and identity covariances, an
/// all-active reduced fit, then a t-test classification at `init_alpha`.
MixtureParams init_fit(const Dataset& data, const EmConfig& config, Warnings* warnings = nullptr);

/// Fits the all-active reduced model only (no E-step), starting from the
/// canonical response and identity covariances.
MixtureParams fit_reduced(const Dataset& data, const EmConfig& config, int max_iter,
                          Warnings* warnings = nullptr);

/// Maximum-likelihood fit by (generalized) EM.
FitResult em_fit(const Dataset& data, const EmConfig& config,
                 const std::optional<MixtureParams>& start = std::nullopt);

/// Deterministically constructed starting point used by init_fit.
MixtureParams initial_params(const Dataset& data, const EmConfig& config);

}  // namespace trialmix::em
