#include "trialmix/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "trialmix/inference.hpp"
#include "trialmix/kernels.hpp"
#include "trialmix/parallel.hpp"

namespace trialmix::em {
namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2 pi)

std::span<const double> flat(const VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
std::span<const double> flat(const MatrixXd& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

double gamma_pdf(double t, double shape) {
  if (t <= 0.0) return 0.0;
  return std::exp((shape - 1.0) * std::log(t) - t - std::lgamma(shape));
}

double total(const Responsibilities& resp) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < resp.p_i.size(); ++i) s += resp.p_i(i);
  return s;
}

double total_inactive(const Responsibilities& resp) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < resp.p_i.size(); ++i) s += 1.0 - resp.p_i(i);
  return s;
}

MatrixXd symmetrized(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// sum_i p_i R_i W R_i' / (scale * sum p_i), R_i transposed first when `transpose`.
MatrixXd weighted_scatter(const Dataset& data, const Responsibilities& resp,
                          const MixtureParams& params, const MatrixXd& weight, bool transpose,
                          double scale) {
  const double wsum = total(resp);
  if (!(wsum > 0.0)) throw EmptyGroupError("no active voxels: sum of responsibilities is zero");
  const Eigen::Index dim = transpose ? data.dims.E : data.dims.T;
  const MatrixXd zero = MatrixXd::Zero(dim, dim);
  const MatrixXd acc = parallel::sum_over(data.dims.V, zero, [&](int i) -> MatrixXd {
    const double w = resp.p_i(i);
    if (w == 0.0) return MatrixXd::Zero(dim, dim);
    const MatrixXd r = residual_matrix(data, params, i);
    if (transpose) return w * (r.transpose() * weight * r);
    return w * (r * weight * r.transpose());
  });
  return symmetrized(acc / (scale * wsum));
}

VectorXd global_vector(const MixtureParams& m) {
  const Eigen::Index T = m.sigma_T.rows();
  const Eigen::Index E = m.sigma_E.rows();
  VectorXd v(2 + T + T * T + E * E);
  Eigen::Index k = 0;
  v(k++) = m.p;
  v.segment(k, T) = m.h.values;
  k += T;
  v.segment(k, T * T) = Eigen::Map<const VectorXd>(m.sigma_T.data(), T * T);
  k += T * T;
  v.segment(k, E * E) = Eigen::Map<const VectorXd>(m.sigma_E.data(), E * E);
  k += E * E;
  v(k) = m.sigma2;
  return v;
}

std::vector<double> hrf_times(const Dataset& data) {
  if (static_cast<int>(data.acq.post_stimulus_times.size()) == data.dims.T) {
    return data.acq.post_stimulus_times;
  }
  std::vector<double> t(static_cast<std::size_t>(data.dims.T));
  for (int k = 0; k < data.dims.T; ++k) t[static_cast<std::size_t>(k)] = k * data.acq.tr_seconds;
  return t;
}

}  // namespace

double double_gamma(double t) { return gamma_pdf(t, 6.0) - gamma_pdf(t, 16.0) / 6.0; }

Hrf canonical_hrf(std::span<const double> times) {
  if (times.size() < 2) throw InvalidArgument("canonical response needs at least two samples");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= 0.0) || (k > 0 && !(times[k] > times[k - 1]))) {
      throw InvalidArgument("post-stimulus times must be nonnegative and strictly increasing");
    }
  }
  VectorXd raw(static_cast<Eigen::Index>(times.size()));
  for (std::size_t k = 0; k < times.size(); ++k) raw(static_cast<Eigen::Index>(k)) = double_gamma(times[k]);
  return Hrf::normalized(raw);
}

ModelCache::ModelCache(const Dataset& data, const MixtureParams& params)
    : precision_(params.sigma_E, params.sigma_T), sigma2_(params.sigma2) {
  const int T = data.dims.T;
  const int E = data.dims.E;
  const int q = data.dims.q;
  mu_.resize(data.dims.n());
  for (int j = 0; j < E; ++j) mu_.segment(static_cast<Eigen::Index>(j) * T, T) = params.h.values;
  const MatrixXd mu_mat = Eigen::Map<const MatrixXd>(mu_.data(), T, E);
  const MatrixXd pm = precision_.apply(mu_mat);
  prec_mu_ = Eigen::Map<const VectorXd>(pm.data(), pm.size());
  const double ones_E = precision_.inv_E().sum();
  const double h_T = params.h.values.dot(precision_.inv_T() * params.h.values);
  mu_prec_mu_ = ones_E * h_T;
  prec_X_.resize(data.dims.n(), q);
  for (int c = 0; c < q; ++c) {
    const MatrixXd px = precision_.apply(data.design_epochs(c));
    prec_X_.col(c) = Eigen::Map<const VectorXd>(px.data(), px.size());
  }
  gram_active_ = symmetrized(data.design.transpose() * prec_X_);
  gram_ = symmetrized(data.design.transpose() * data.design);
}

double log_density_active(const MatrixXd& residual, const linalg::KronPrecision& precision) {
  const double n = static_cast<double>(residual.size());
  return -0.5 * n * kLogTwoPi - 0.5 * precision.logdet() - 0.5 * precision.quad_form(residual);
}

double log_density_active(const Dataset& data, const MixtureParams& params, int voxel) {
  const linalg::KronPrecision precision(params.sigma_E, params.sigma_T);
  return log_density_active(residual_matrix(data, params, voxel), precision);
}

double log_density_inactive(std::span<const double> residual, double sigma2) {
  if (!(sigma2 > 0.0)) throw SingularityError("inactive variance must be positive");
  const double n = static_cast<double>(residual.size());
  return -0.5 * n * (kLogTwoPi + std::log(sigma2)) - kernels::sum_squares(residual) / (2.0 * sigma2);
}

double log_density_inactive(const Dataset& data, const MixtureParams& params, int voxel) {
  const VectorXd r = inactive_residual(data, params, voxel);
  return log_density_inactive(flat(r), params.sigma2);
}

double responsibility(double p, double log_f1, double log_f2) {
  if (p >= 1.0) return 1.0;
  if (p <= 0.0) return 0.0;
  const double c = std::log1p(-p) - std::log(p) + log_f2 - log_f1;
  if (c > 700.0) return 0.0;
  if (c < -700.0) return 1.0;
  return 1.0 / (1.0 + std::exp(c));
}

namespace {

struct LogDensities {
  VectorXd active;
  VectorXd inactive;
};

LogDensities log_densities(const Dataset& data, const MixtureParams& params,
                           const ActiveDensityFn& active_density, bool need_inactive) {
  LogDensities out{VectorXd(data.dims.V), VectorXd::Constant(data.dims.V, 0.0)};
  std::optional<linalg::KronPrecision> precision;
  if (!active_density) precision.emplace(params.sigma_E, params.sigma_T);
  parallel::for_each_index(data.dims.V, [&](int i) {
    out.active(i) = active_density ? active_density(data, params, i)
                                   : log_density_active(residual_matrix(data, params, i), *precision);
    if (need_inactive) out.inactive(i) = log_density_inactive(data, params, i);
  });
  return out;
}

}  // namespace

Responsibilities estep(const Dataset& data, const MixtureParams& params,
                       const ActiveDensityFn& active_density) {
  Responsibilities resp{VectorXd(data.dims.V)};
  if (params.p >= 1.0 || params.p <= 0.0) {
    resp.p_i.setConstant(params.p >= 1.0 ? 1.0 : 0.0);
    return resp;
  }
  const LogDensities ld = log_densities(data, params, active_density, true);
  for (int i = 0; i < data.dims.V; ++i) {
    resp.p_i(i) = responsibility(params.p, ld.active(i), ld.inactive(i));
  }
  return resp;
}

double update_p(const Responsibilities& resp) {
  if (resp.p_i.size() == 0) throw InvalidArgument("no voxels");
  return total(resp) / static_cast<double>(resp.p_i.size());
}

double update_beta(const ModelCache& cache, const Dataset& data, const VectorXd& b_i, int voxel) {
  if (!(cache.mu_prec_mu() > 0.0)) throw SingularityError("mu' Sigma^-1 mu is not positive");
  VectorXd r = data.series.col(voxel);
  if (data.dims.q > 0) r.noalias() -= data.design * b_i;
  return kernels::dot(flat(cache.prec_mu()), flat(r)) / cache.mu_prec_mu();
}

VectorXd update_b(const ModelCache& cache, const Dataset& data, double beta_i, double p_i, int voxel) {
  const int q = data.dims.q;
  if (q == 0) return VectorXd(0);
  const auto y = data.series.col(voxel);
  VectorXd y_active(y.size());
  kernels::sub_scaled(flat(VectorXd(y)), beta_i, flat(cache.mu()),
                      {y_active.data(), static_cast<std::size_t>(y_active.size())});
  const MatrixXd a = p_i * cache.gram_active() + ((1.0 - p_i) / cache.sigma2()) * cache.gram();
  const VectorXd rhs = p_i * (cache.prec_X().transpose() * y_active) +
                       ((1.0 - p_i) / cache.sigma2()) * (data.design.transpose() * y);
  try {
    return linalg::solve_spd(symmetrized(a), rhs);
  } catch (const SingularityError&) {
    throw SingularityError("normal equations for b are rank deficient");
  }
}

namespace {

Dataset single_voxel(const VectorXd& y, const MatrixXd& X, int T) {
  Dataset d;
  d.dims = Dims{T, static_cast<int>(y.size()) / T, 1, static_cast<int>(X.cols())};
  d.series = y;
  d.design = X;
  d.coords = {Coord{}};
  return d;
}

}  // namespace

double update_beta(const VectorXd& y, const MatrixXd& X, const VectorXd& b_i, const Hrf& h,
                   const MatrixXd& sigma_T, const MatrixXd& sigma_E) {
  const Dataset d = single_voxel(y, X, h.size());
  MixtureParams m;
  m.h = h;
  m.sigma_T = sigma_T;
  m.sigma_E = sigma_E;
  return update_beta(ModelCache(d, m), d, b_i, 0);
}

VectorXd update_b(const VectorXd& y, double beta_i, double p_i, const Hrf& h, const MatrixXd& X,
                  const MatrixXd& sigma_T, const MatrixXd& sigma_E, double sigma2) {
  const Dataset d = single_voxel(y, X, h.size());
  MixtureParams m;
  m.h = h;
  m.sigma_T = sigma_T;
  m.sigma_E = sigma_E;
  m.sigma2 = sigma2;
  return update_b(ModelCache(d, m), d, beta_i, p_i, 0);
}

HrfUpdate update_h(const Dataset& data, const Responsibilities& resp, const MixtureParams& params,
                   Warnings* warnings) {
  const int T = data.dims.T;
  const int E = data.dims.E;
  HrfUpdate out;
  out.h = params.h;
  out.beta = params.beta;
  out.raw = params.h.values;

  const MatrixXd inv_E = linalg::inverse_spd(params.sigma_E);
  const VectorXd w = inv_E.rowwise().sum();  // sum_k e_jk
  const double e_total = w.sum();
  double beta_weight = 0.0;
  for (int i = 0; i < data.dims.V; ++i) beta_weight += resp.p_i(i) * params.beta(i) * params.beta(i);
  const double denom = beta_weight * e_total;
  if (!(std::abs(denom) > 0.0) || !std::isfinite(denom)) {
    warn(warnings, "response-shape update skipped: degenerate denominator");
    return out;
  }
  const VectorXd num = parallel::sum_over(data.dims.V, VectorXd(VectorXd::Zero(T)), [&](int i) -> VectorXd {
    const double weight = resp.p_i(i) * params.beta(i);
    if (weight == 0.0) return VectorXd::Zero(T);
    MatrixXd r = data.epochs(i);
    if (data.dims.q > 0) {
      const VectorXd xb = data.design * params.b.col(i);
      r -= Eigen::Map<const MatrixXd>(xb.data(), T, E);
    }
    return weight * (r * w);
  });
  out.raw = num / denom;
  if (!(out.raw.norm() > 0.0) || !out.raw.allFinite()) {
    warn(warnings, "response-shape update skipped: zero or non-finite estimate");
    out.raw = params.h.values;
    return out;
  }
  double scale = 1.0;
  out.h = Hrf::normalized(out.raw, &scale);
  out.beta = params.beta * scale;
  out.updated = true;
  return out;
}

MatrixXd update_sigma_T(const Dataset& data, const Responsibilities& resp, const MixtureParams& params) {
  return weighted_scatter(data, resp, params, linalg::inverse_spd(params.sigma_E), false,
                          static_cast<double>(data.dims.E));
}

MatrixXd update_sigma_E(const Dataset& data, const Responsibilities& resp, const MixtureParams& params) {
  return weighted_scatter(data, resp, params, linalg::inverse_spd(params.sigma_T), true,
                          static_cast<double>(data.dims.T));
}

void normalize_trace(MatrixXd& sigma_E, MatrixXd& sigma_T) {
  const double c = sigma_E.trace() / static_cast<double>(sigma_E.rows());
  if (!(c > 0.0) || !std::isfinite(c)) throw SingularityError("sigma_E has non-positive trace");
  sigma_E /= c;
  sigma_T *= c;
}

CovUpdate update_covariances(const Dataset& data, const Responsibilities& resp,
                             const MixtureParams& params, int sweeps, CovStructure structure,
                             Warnings* warnings) {
  const int T = data.dims.T;
  const int E = data.dims.E;
  MixtureParams cur = params;
  switch (structure) {
    case CovStructure::kronecker:
      for (int s = 0; s < std::max(1, sweeps); ++s) {
        cur.sigma_T = linalg::spd_guard(update_sigma_T(data, resp, cur), warnings, "sigma_T");
        cur.sigma_E = linalg::spd_guard(update_sigma_E(data, resp, cur), warnings, "sigma_E");
      }
      normalize_trace(cur.sigma_E, cur.sigma_T);
      break;
    case CovStructure::epoch_only:
      cur.sigma_T = MatrixXd::Identity(T, T);
      cur.sigma_E = linalg::spd_guard(update_sigma_E(data, resp, cur), warnings, "sigma_E");
      break;
    case CovStructure::time_only:
      cur.sigma_E = MatrixXd::Identity(E, E);
      cur.sigma_T = linalg::spd_guard(update_sigma_T(data, resp, cur), warnings, "sigma_T");
      break;
    case CovStructure::spherical: {
      cur.sigma_E = MatrixXd::Identity(E, E);
      cur.sigma_T = MatrixXd::Identity(T, T);
      const MatrixXd st = update_sigma_T(data, resp, cur);
      double s = st.trace() / static_cast<double>(T);
      if (!(s > 0.0)) {
        warn(warnings, "spherical variance is zero; floored at 1e-12");
        s = 1e-12;
      }
      cur.sigma_T = s * MatrixXd::Identity(T, T);
      break;
    }
  }
  return {cur.sigma_T, cur.sigma_E};
}

double update_sigma2(const Dataset& data, const Responsibilities& resp, const MatrixXd& b,
                     Warnings* warnings, double floor) {
  const double wsum = total_inactive(resp);
  if (!(wsum > 0.0)) throw EmptyGroupError("no inactive voxels: every responsibility is 1");
  const double acc = parallel::sum_over(data.dims.V, 0.0, [&](int i) {
    const double w = 1.0 - resp.p_i(i);
    if (w == 0.0) return 0.0;
    if (data.dims.q == 0) return w * kernels::sum_squares(flat(VectorXd(data.series.col(i))));
    const VectorXd r = data.series.col(i) - data.design * b.col(i);
    return w * kernels::sum_squares(flat(r));
  });
  const double s2 = acc / (static_cast<double>(data.dims.n()) * wsum);
  if (!(s2 > floor)) {
    warn(warnings, "inactive variance floored at " + std::to_string(floor));
    return floor;
  }
  return s2;
}

double observed_loglik(const Dataset& data, const MixtureParams& params,
                       const ActiveDensityFn& active_density) {
  const bool need_active = params.p > 0.0;
  const bool need_inactive = params.p < 1.0;
  LogDensities ld;
  if (need_active) {
    ld = log_densities(data, params, active_density, need_inactive);
  } else {
    ld.inactive.resize(data.dims.V);
    parallel::for_each_index(data.dims.V, [&](int i) { ld.inactive(i) = log_density_inactive(data, params, i); });
  }
  const double log_p = need_active ? std::log(params.p) : 0.0;
  const double log_q = need_inactive ? std::log1p(-params.p) : 0.0;
  return parallel::sum_over(data.dims.V, 0.0, [&](int i) {
    if (!need_inactive) return log_p + ld.active(i);
    if (!need_active) return log_q + ld.inactive(i);
    const double a = log_p + ld.active(i);
    const double b = log_q + ld.inactive(i);
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
  });
}

double global_change(const MixtureParams& before, const MixtureParams& after) {
  const VectorXd a = global_vector(before);
  const VectorXd b = global_vector(after);
  return (b - a).norm() / std::max(1.0, a.norm());
}

MixtureParams initial_params(const Dataset& data, const EmConfig& config) {
  (void)config;
  const int T = data.dims.T;
  const int E = data.dims.E;
  MixtureParams m;
  m.p = 1.0;
  const auto times = hrf_times(data);
  m.h = canonical_hrf(times);
  m.beta = VectorXd::Zero(data.dims.V);
  m.b = MatrixXd::Zero(data.dims.q, data.dims.V);
  m.sigma_T = MatrixXd::Identity(T, T);
  m.sigma_E = MatrixXd::Identity(E, E);
  m.sigma2 = 1.0;
  return m;
}

namespace {

bool debug_checks() {
#ifndef NDEBUG
  return true;
#else
  return false;
#endif
}

struct LoopResult {
  MixtureParams params;
  Responsibilities resp;
  std::vector<double> loglik;
  std::vector<double> change;
  int iterations = 0;
  bool converged = false;
};

LoopResult run_em(const Dataset& data, const EmConfig& config, MixtureParams params, bool mixture,
                  int max_iter, Warnings* warnings) {
  LoopResult out;
  const int V = data.dims.V;
  if (!mixture) params.p = 1.0;
  out.loglik.push_back(observed_loglik(data, params, config.active_density));
  bool warned_no_active = false;
  bool warned_no_inactive = false;
  Responsibilities resp{VectorXd::Ones(V)};

  for (int iter = 1; iter <= max_iter; ++iter) {
    if (mixture) resp = estep(data, params, config.active_density);
    MixtureParams next = params;
    if (mixture) next.p = update_p(resp);

    {
      const ModelCache cache(data, next);
      for (int sweep = 0; sweep < std::max(1, config.inner_sweeps); ++sweep) {
        parallel::for_each_index(V, [&](int i) {
          next.beta(i) = update_beta(cache, data, next.b.col(i), i);
          if (data.dims.q > 0) next.b.col(i) = update_b(cache, data, next.beta(i), resp.p_i(i), i);
        });
      }
    }

    const double active_weight = total(resp);
    if (config.estimate_h && active_weight > 0.0) {
      HrfUpdate hu = update_h(data, resp, next, warnings);
      next.h = std::move(hu.h);
      next.beta = std::move(hu.beta);
    }
    if (active_weight > 0.0) {
      const CovUpdate cov =
          update_covariances(data, resp, next, config.flipflop_sweeps, config.structure, warnings);
      next.sigma_T = cov.sigma_T;
      next.sigma_E = cov.sigma_E;
    } else if (!warned_no_active) {
      warn(warnings, "no active voxels: covariance and response-shape updates skipped");
      warned_no_active = true;
    }
    if (mixture) {
      if (total_inactive(resp) > 0.0) {
        next.sigma2 = update_sigma2(data, resp, next.b, warnings, config.sigma2_floor);
      } else if (!warned_no_inactive) {
        warn(warnings, "no inactive voxels: noise-variance update skipped");
        warned_no_inactive = true;
      }
    }
    if (debug_checks()) {
      validate(next, data.dims,
               ValidationOptions{.require_unit_trace_E = config.structure == CovStructure::kronecker});
    }

    const double change = global_change(params, next);
    params = std::move(next);
    out.loglik.push_back(observed_loglik(data, params, config.active_density));
    out.change.push_back(change);
    out.iterations = iter;
    if (config.on_iteration) config.on_iteration({iter, out.loglik.back(), change, params.p});
    if (change < config.tol) {
      out.converged = true;
      break;
    }
  }
  out.resp = mixture ? estep(data, params, config.active_density) : Responsibilities{VectorXd::Ones(V)};
  out.params = std::move(params);
  return out;
}

}  // namespace

MixtureParams fit_reduced(const Dataset& data, const EmConfig& config, int max_iter, Warnings* warnings) {
  validate(data);
  LoopResult r = run_em(data, config, initial_params(data, config), false, max_iter, warnings);
  return r.params;
}

MixtureParams init_fit(const Dataset& data, const EmConfig& config, Warnings* warnings) {
  MixtureParams reduced = fit_reduced(data, config, config.init_max_iter, warnings);
  const int V = data.dims.V;

  // Classify by a one-sided t-test of beta_i on pre-whitened data.
  const inference::Whitener whitener(reduced.sigma_T, reduced.sigma_E);
  VectorXd mu(data.dims.n());
  for (int j = 0; j < data.dims.E; ++j) {
    mu.segment(static_cast<Eigen::Index>(j) * data.dims.T, data.dims.T) = reduced.h.values;
  }
  const inference::TTest test(whitener.apply(mu), whitener.apply_columns(data.design));
  std::vector<double> t(static_cast<std::size_t>(V));
  parallel::for_each_index(V, [&](int i) {
    t[static_cast<std::size_t>(i)] = test(whitener.apply(data.series.col(i))).t;
  });
  Responsibilities resp{VectorXd::Zero(V)};
  int n_active = 0;
  for (int i = 0; i < V; ++i) {
    if (inference::t_sf(t[static_cast<std::size_t>(i)], test.df()) < config.init_alpha) {
      resp.p_i(i) = 1.0;
      ++n_active;
    }
  }
  std::vector<int> order(static_cast<std::size_t>(V));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return t[static_cast<std::size_t>(a)] > t[static_cast<std::size_t>(b)];
  });
  const int one_percent = std::max(1, static_cast<int>(std::ceil(0.01 * V)));
  if (n_active == 0) {
    warn(warnings, "initial t-test found no active voxels; using the top 1% by t-statistic");
    for (int k = 0; k < one_percent; ++k) resp.p_i(order[static_cast<std::size_t>(k)]) = 1.0;
    n_active = one_percent;
  } else if (n_active == V && V > 1) {
    warn(warnings, "initial t-test found no inactive voxels; using the bottom 1% by t-statistic");
    for (int k = 0; k < std::min(one_percent, V - 1); ++k) resp.p_i(order[static_cast<std::size_t>(V - 1 - k)]) = 0.0;
    n_active = V - std::min(one_percent, V - 1);
  }

  MixtureParams start = reduced;
  start.p = std::clamp(static_cast<double>(n_active) / V, 0.01, 0.99);
  const CovUpdate cov = update_covariances(data, resp, reduced, std::max(config.flipflop_sweeps, 5),
                                           config.structure, warnings);
  start.sigma_T = cov.sigma_T;
  start.sigma_E = cov.sigma_E;
  if (total_inactive(resp) > 0.0) {
    start.sigma2 = update_sigma2(data, resp, reduced.b, warnings, config.sigma2_floor);
  } else {
    start.sigma2 = std::max(config.sigma2_floor, cov.sigma_T.trace() * cov.sigma_E.trace() / data.dims.n());
  }
  return start;
}

FitResult em_fit(const Dataset& data, const EmConfig& config, const std::optional<MixtureParams>& start) {
  validate(data);
  if (!(config.tol > 0.0) || config.max_iter < 1) throw InvalidArgument("invalid EM configuration");
  FitResult result;
  MixtureParams params;
  if (start) {
    params = *start;
  } else if (config.mixture) {
    params = init_fit(data, config, &result.warnings);
  } else {
    params = initial_params(data, config);
  }
  LoopResult r = run_em(data, config, std::move(params), config.mixture, config.max_iter, &result.warnings);
  result.params = std::move(r.params);
  result.resp = std::move(r.resp);
  result.loglik_trace = std::move(r.loglik);
  result.change_trace = std::move(r.change);
  result.iterations = r.iterations;
  result.converged = r.converged;
  return result;
}

}  // namespace trialmix::em
