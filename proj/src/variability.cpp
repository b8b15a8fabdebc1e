#include "trialmix/variability.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "trialmix/linalg.hpp"
#include "trialmix/parallel.hpp"

namespace trialmix::variability {
namespace {

std::vector<int> levels_of(std::span<const int> labels) {
  std::set<int> s(labels.begin(), labels.end());
  return {s.begin(), s.end()};
}

int level_index(const std::vector<int>& levels, int label) {
  return static_cast<int>(std::lower_bound(levels.begin(), levels.end(), label) - levels.begin());
}

// Sum-to-zero contrast for level `idx` out of `count`, written to columns
// [offset, offset + count - 1).
void code_factor(MatrixXd& z, Eigen::Index row, int offset, int idx, int count) {
  for (int k = 0; k < count - 1; ++k) {
    z(row, offset + k) = idx == count - 1 ? -1.0 : (idx == k ? 1.0 : 0.0);
  }
}

}  // namespace

Spectrum pca_cov(const MatrixXd& s) {
  const linalg::SymEigen eig = linalg::sym_eigen(s);
  Spectrum out;
  out.eigenvalues = eig.values;
  out.loadings = eig.vectors;
  for (Eigen::Index k = 0; k < out.loadings.cols(); ++k) {
    const Eigen::Index i = max_abs_index(out.loadings.col(k));
    if (out.loadings(i, k) < 0.0) out.loadings.col(k) *= -1.0;
  }
  const double total = out.eigenvalues.sum();
  out.percent = out.eigenvalues * (100.0 / total);
  return out;
}

std::vector<int> active_voxels(const Responsibilities& resp, const ActivationMap& map) {
  std::vector<int> out;
  for (std::size_t i = 0; i < map.reject.size(); ++i) {
    if (map.reject[i] && resp.p_i(static_cast<Eigen::Index>(i)) >= 0.5) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<double> pc_scores(const Dataset& data, const MixtureParams& params,
                              const std::vector<int>& voxels, const MatrixXd& loadings, int K) {
  if (voxels.empty()) throw EmptyGroupError("no active voxels for principal-component scores");
  if (K < 1 || K > data.dims.T || K > loadings.cols()) {
    throw InvalidArgument("component count must be between 1 and T");
  }
  const int E = data.dims.E;
  std::vector<double> scores(voxels.size() * static_cast<std::size_t>(E * K));
  const MatrixXd gamma = loadings.leftCols(K).transpose();
  parallel::for_each_index(static_cast<int>(voxels.size()), [&](int a) {
    const MatrixXd r = residual_matrix(data, params, voxels[static_cast<std::size_t>(a)]);
    const MatrixXd s = gamma * r;  // K x E
    double* out = scores.data() + static_cast<std::size_t>(a) * E * K;
    for (int j = 0; j < E; ++j)
      for (int k = 0; k < K; ++k) out[j * K + k] = s(k, j);
  });
  return scores;
}

AnovaTable anova_two_way(std::span<const double> y, std::span<const int> event,
                         std::span<const int> cluster, bool interaction) {
  const std::size_t n = y.size();
  if (event.size() != n || cluster.size() != n) throw DimensionError("label count differs from score count");
  AnovaTable out;
  out.event_levels = levels_of(event);
  out.cluster_levels = levels_of(cluster);
  const int J = static_cast<int>(out.event_levels.size());
  const int C = static_cast<int>(out.cluster_levels.size());
  if (J < 2) throw InvalidArgument("event factor needs at least two levels");
  const int p = J + C - 1;

  MatrixXd Z(static_cast<Eigen::Index>(n), p);
  VectorXd yv(static_cast<Eigen::Index>(n));
  std::vector<int> ei(n), ci(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    ei[r] = level_index(out.event_levels, event[r]);
    ci[r] = level_index(out.cluster_levels, cluster[r]);
    Z(row, 0) = 1.0;
    code_factor(Z, row, 1, ei[r], J);
    code_factor(Z, row, J, ci[r], C);
    yv(row) = y[r];
  }
  const MatrixXd gram = Z.transpose() * Z;
  Eigen::FullPivLU<MatrixXd> lu(gram);
  if (lu.rank() < p) throw InvalidArgument("factor levels are confounded; design is rank deficient");
  const MatrixXd cov = lu.inverse();
  const VectorXd theta = cov * (Z.transpose() * yv);

  const VectorXd resid = yv - Z * theta;
  double rss = resid.squaredNorm();
  int df = static_cast<int>(n) - p;

  MatrixXd cell_sum = MatrixXd::Zero(C, J);
  MatrixXd cell_count = MatrixXd::Zero(C, J);
  if (interaction) {
    for (std::size_t r = 0; r < n; ++r) {
      cell_sum(ci[r], ei[r]) += y[r];
      cell_count(ci[r], ei[r]) += 1.0;
    }
    rss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double m = cell_sum(ci[r], ei[r]) / cell_count(ci[r], ei[r]);
      rss += (y[r] - m) * (y[r] - m);
    }
    df = static_cast<int>(n) - static_cast<int>((cell_count.array() > 0.0).count());
  }
  out.residual_df = df;
  out.residual_variance = df > 0 ? rss / df : 0.0;
  const double s2 = out.residual_variance;

  auto effect = [&](int offset, int count, int idx, double* se) {
    VectorXd l = VectorXd::Zero(p);
    if (idx < count - 1) {
      l(offset + idx) = 1.0;
    } else {
      l.segment(offset, count - 1).setConstant(-1.0);
    }
    *se = std::sqrt(std::max(0.0, s2 * l.dot(cov * l)));
    return l.dot(theta);
  };

  out.grand_mean = theta(0);
  out.grand_mean_se = std::sqrt(std::max(0.0, s2 * cov(0, 0)));
  out.event_effects.resize(static_cast<std::size_t>(J));
  out.event_se.resize(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) {
    out.event_effects[static_cast<std::size_t>(j)] = effect(1, J, j, &out.event_se[static_cast<std::size_t>(j)]);
  }
  out.cluster_effects.assign(static_cast<std::size_t>(C), 0.0);
  out.cluster_se.assign(static_cast<std::size_t>(C), 0.0);
  if (C > 1) {
    for (int c = 0; c < C; ++c) {
      out.cluster_effects[static_cast<std::size_t>(c)] = effect(J, C, c, &out.cluster_se[static_cast<std::size_t>(c)]);
    }
  }
  out.fitted.resize(C, J);
  for (int c = 0; c < C; ++c) {
    for (int j = 0; j < J; ++j) {
      if (interaction && cell_count(c, j) > 0.0) {
        out.fitted(c, j) = cell_sum(c, j) / cell_count(c, j);
      } else {
        out.fitted(c, j) = out.grand_mean + out.event_effects[static_cast<std::size_t>(j)] +
                           out.cluster_effects[static_cast<std::size_t>(c)];
      }
    }
  }
  return out;
}

VectorXd response_from_scores(double beta, const Hrf& h, const MatrixXd& loadings,
                              std::span<const double> scores) {
  if (static_cast<Eigen::Index>(scores.size()) > loadings.cols()) {
    throw DimensionError("more scores than loadings");
  }
  VectorXd out = beta * h.values;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out += scores[k] * loadings.col(static_cast<Eigen::Index>(k));
  }
  return out;
}

VectorXd fitted_response(const Hrf& h, const PcAnalysis& pcs, int cluster, int event) {
  const auto it = std::find(pcs.clusters.begin(), pcs.clusters.end(), cluster);
  if (it == pcs.clusters.end()) throw InvalidArgument("unknown cluster " + std::to_string(cluster));
  const double beta_c = pcs.cluster_beta[static_cast<std::size_t>(it - pcs.clusters.begin())];
  std::vector<double> s(pcs.anova.size());
  for (std::size_t k = 0; k < pcs.anova.size(); ++k) s[k] = pcs.anova[k].fitted_cell(cluster, event);
  return response_from_scores(beta_c, h, pcs.time.loadings, s);
}

std::pair<VectorXd, VectorXd> pc_effect_curves(const Hrf& h, const Spectrum& spectrum, int k,
                                               double beta) {
  if (k < 0 || k >= spectrum.loadings.cols()) throw InvalidArgument("component index out of range");
  const VectorXd d = std::sqrt(std::max(0.0, spectrum.eigenvalues(k))) * spectrum.loadings.col(k);
  const VectorXd base = beta * h.values;
  return {base + d, base - d};
}

NaturalSpline::NaturalSpline(std::span<const double> x, std::span<const double> y, double lambda) {
  const int n = static_cast<int>(x.size());
  if (static_cast<int>(y.size()) != n) throw DimensionError("spline needs one value per knot");
  if (n < 4) throw InvalidArgument("spline needs at least four knots");
  if (!(lambda >= 0.0)) throw InvalidArgument("smoothing weight must be non-negative");
  for (int i = 1; i < n; ++i) {
    if (!(x[static_cast<std::size_t>(i)] > x[static_cast<std::size_t>(i - 1)])) {
      throw InvalidArgument("spline knots must be strictly increasing (duplicate time?)");
    }
  }
  x_ = Eigen::Map<const VectorXd>(x.data(), n);
  const VectorXd yv = Eigen::Map<const VectorXd>(y.data(), n);
  const VectorXd hs = x_.tail(n - 1) - x_.head(n - 1);
  const int m = n - 2;
  MatrixXd Q = MatrixXd::Zero(n, m);
  MatrixXd R = MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    Q(i, i) = 1.0 / hs(i);
    Q(i + 1, i) = -1.0 / hs(i) - 1.0 / hs(i + 1);
    Q(i + 2, i) = 1.0 / hs(i + 1);
    R(i, i) = (hs(i) + hs(i + 1)) / 3.0;
    if (i + 1 < m) R(i, i + 1) = R(i + 1, i) = hs(i + 1) / 6.0;
  }
  const MatrixXd A = R + lambda * Q.transpose() * Q;
  const VectorXd gamma = A.ldlt().solve(Q.transpose() * yv);
  g_ = yv - lambda * (Q * gamma);
  m_ = VectorXd::Zero(n);
  m_.segment(1, m) = gamma;
}

double NaturalSpline::operator()(double t) const {
  const Eigen::Index n = x_.size();
  if (t <= x_(0)) {
    const double h = x_(1) - x_(0);
    const double slope = (g_(1) - g_(0)) / h - h * m_(1) / 6.0;
    return g_(0) + slope * (t - x_(0));
  }
  if (t >= x_(n - 1)) {
    const double h = x_(n - 1) - x_(n - 2);
    const double slope = (g_(n - 1) - g_(n - 2)) / h + h * m_(n - 2) / 6.0;
    return g_(n - 1) + slope * (t - x_(n - 1));
  }
  const auto it = std::upper_bound(x_.data(), x_.data() + n, t);
  const Eigen::Index i = std::max<Eigen::Index>(0, (it - x_.data()) - 1);
  const double h = x_(i + 1) - x_(i);
  const double a = t - x_(i);
  const double b = x_(i + 1) - t;
  return (b * g_(i) + a * g_(i + 1)) / h -
         a * b / 6.0 * ((1.0 + a / h) * m_(i + 1) + (1.0 + b / h) * m_(i));
}

Curve spline_interp(std::span<const double> x, std::span<const double> y, int resolution, double lambda) {
  if (resolution < 2) throw InvalidArgument("resolution must be at least 2");
  const NaturalSpline s(x, y, lambda);
  Curve out;
  out.t.resize(static_cast<std::size_t>(resolution));
  out.y.resize(static_cast<std::size_t>(resolution));
  const double lo = x.front();
  const double hi = x.back();
  for (int k = 0; k < resolution; ++k) {
    const double t = k == resolution - 1 ? hi : lo + (hi - lo) * k / (resolution - 1);
    out.t[static_cast<std::size_t>(k)] = t;
    out.y[static_cast<std::size_t>(k)] = s(t);
  }
  return out;
}

PcAnalysis build_pc_analysis(const Dataset& data, const MixtureParams& params,
                             const Responsibilities& resp, const ActivationMap& map,
                             const PcConfig& config) {
  PcAnalysis out;
  out.time = pca_cov(params.sigma_T);
  out.epoch = pca_cov(params.sigma_E);
  out.K = std::clamp(config.K, 1, data.dims.T);
  out.voxels = active_voxels(resp, map);
  if (out.voxels.empty()) throw EmptyGroupError("no active voxels for principal-component analysis");
  for (int v : out.voxels) out.voxel_cluster.push_back(map.cluster[static_cast<std::size_t>(v)]);
  out.scores = pc_scores(data, params, out.voxels, out.time.loadings, out.K);

  // Voxels outside any retained cluster are left out of the ANOVA unless no
  // clusters survived at all.
  const bool any_cluster =
      std::any_of(out.voxel_cluster.begin(), out.voxel_cluster.end(), [](int c) { return c > 0; });
  std::map<int, std::pair<double, int>> beta_sum;
  std::vector<std::size_t> used;
  for (std::size_t a = 0; a < out.voxels.size(); ++a) {
    const int c = out.voxel_cluster[a];
    if (any_cluster && c == 0) continue;
    used.push_back(a);
    auto& acc = beta_sum[c];
    acc.first += params.beta(out.voxels[a]);
    acc.second += 1;
  }
  for (const auto& [c, acc] : beta_sum) {
    out.clusters.push_back(c);
    out.cluster_beta.push_back(acc.first / acc.second);
  }
  const int E = data.dims.E;
  std::vector<int> events;
  std::vector<int> clusters;
  for (std::size_t a : used) {
    for (int j = 0; j < E; ++j) {
      events.push_back(j + 1);
      clusters.push_back(out.voxel_cluster[a]);
    }
  }
  for (int k = 0; k < out.K; ++k) {
    std::vector<double> y;
    y.reserve(events.size());
    for (std::size_t a : used)
      for (int j = 0; j < E; ++j) y.push_back(out.score(a, j, k, E));
    out.anova.push_back(anova_two_way(y, events, clusters, config.interaction));
  }
  return out;
}

}  // namespace trialmix::variability
