#include "trialmix/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "trialmix/linalg.hpp"

namespace trialmix {

void validate(const Dims& dims) {
  if (dims.T < 1 || dims.E < 1 || dims.V < 1 || dims.q < 0) {
    std::ostringstream os;
    os << "invalid dimensions T=" << dims.T << " E=" << dims.E << " V=" << dims.V
       << " q=" << dims.q;
    throw InvalidArgument(os.str());
  }
  if (dims.q >= dims.n()) {
    throw InvalidArgument("covariate count q must be smaller than N = T*E");
  }
}

void validate(const Dataset& data) {
  validate(data.dims);
  const int n = data.dims.n();
  if (data.series.rows() != n || data.series.cols() != data.dims.V) {
    throw DimensionError("series must be N x V");
  }
  if (data.design.rows() != n || data.design.cols() != data.dims.q) {
    throw DimensionError("design must be N x q");
  }
  for (int c = 0; c < data.dims.q; ++c) {
    const double s = data.design.col(c).sum();
    if (!(std::abs(s) <= 1e-9 * n * std::max(1.0, data.design.col(c).cwiseAbs().maxCoeff()))) {
      throw InvalidArgument("design column " + std::to_string(c) + " is not mean-centered");
    }
  }
  if (static_cast<int>(data.coords.size()) != data.dims.V) {
    throw DimensionError("one coordinate per voxel is required");
  }
  std::set<Coord> seen(data.coords.begin(), data.coords.end());
  if (seen.size() != data.coords.size()) throw InvalidArgument("voxel coordinates are not unique");
  if (!data.series.allFinite() || !data.design.allFinite()) {
    throw InvalidArgument("dataset contains non-finite values");
  }
}

Eigen::Index max_abs_index(const VectorXd& v) {
  Eigen::Index best = 0;
  double best_abs = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > best_abs) {
      best_abs = std::abs(v(i));
      best = i;
    }
  }
  return best;
}

Hrf Hrf::normalized(const VectorXd& raw, double* signed_scale) {
  const double norm = raw.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw InvalidArgument("cannot normalize a zero or non-finite response shape");
  }
  Hrf h;
  h.values = raw / norm;
  double scale = norm;
  if (h.values(max_abs_index(h.values)) < 0.0) {
    h.values = -h.values;
    h.sign_flipped = true;
    scale = -norm;
  }
  if (signed_scale != nullptr) *signed_scale = scale;
  return h;
}

void validate(const MixtureParams& params, const Dims& dims, const ValidationOptions& opt) {
  if (!(params.p >= 0.0 && params.p <= 1.0)) throw InvalidArgument("mixing proportion outside [0,1]");
  if (!(params.sigma2 > 0.0) || !std::isfinite(params.sigma2)) {
    throw InvalidArgument("noise variance must be positive");
  }
  if (params.beta.size() != dims.V) throw DimensionError("beta must have V entries");
  if (params.b.rows() != dims.q || params.b.cols() != dims.V) throw DimensionError("b must be q x V");
  if (params.h.size() != dims.T) throw DimensionError("h must have T entries");
  if (std::abs(params.h.values.norm() - 1.0) > 1e-10) throw InvalidArgument("h must have unit norm");
  if (params.h.values(max_abs_index(params.h.values)) < 0.0) {
    throw InvalidArgument("h must have a positive peak");
  }
  if (params.sigma_T.rows() != dims.T) throw DimensionError("sigma_T must be T x T");
  if (params.sigma_E.rows() != dims.E) throw DimensionError("sigma_E must be E x E");
  linalg::require_symmetric(params.sigma_T, opt.symmetry_tol);
  linalg::require_symmetric(params.sigma_E, opt.symmetry_tol);
  // Cholesky succeeds exactly when all eigenvalues are positive.
  (void)linalg::logdet_spd(params.sigma_T);
  (void)linalg::logdet_spd(params.sigma_E);
  if (opt.require_unit_trace_E &&
      std::abs(params.sigma_E.trace() - dims.E) > opt.trace_tol * dims.E) {
    throw InvalidArgument("trace(sigma_E) must equal E");
  }
  if (!params.beta.allFinite() || !params.b.allFinite()) {
    throw InvalidArgument("non-finite voxel coefficients");
  }
}

MatrixXd residual_matrix(const Dataset& data, const MixtureParams& params, int voxel) {
  const int T = data.dims.T;
  const int E = data.dims.E;
  MatrixXd r = data.epochs(voxel);
  const double beta = params.beta(voxel);
  for (int j = 0; j < E; ++j) r.col(j) -= beta * params.h.values;
  if (data.dims.q > 0) {
    const VectorXd xb = data.design * params.b.col(voxel);
    r -= Eigen::Map<const MatrixXd>(xb.data(), T, E);
  }
  return r;
}

VectorXd inactive_residual(const Dataset& data, const MixtureParams& params, int voxel) {
  if (data.dims.q == 0) return data.series.col(voxel);
  return data.series.col(voxel) - data.design * params.b.col(voxel);
}

double AnovaTable::fitted_cell(int cluster_label, int event_label) const {
  const auto ci = std::find(cluster_levels.begin(), cluster_levels.end(), cluster_label);
  const auto ei = std::find(event_levels.begin(), event_levels.end(), event_label);
  if (ci == cluster_levels.end() || ei == event_levels.end()) {
    throw InvalidArgument("unknown factor level");
  }
  return fitted(ci - cluster_levels.begin(), ei - event_levels.begin());
}

}  // namespace trialmix
