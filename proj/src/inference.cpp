#include "trialmix/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>

#include "trialmix/kernels.hpp"
#include "trialmix/linalg.hpp"
#include "trialmix/parallel.hpp"

namespace trialmix::inference {

Whitener::Whitener(const MatrixXd& sigma_T, const MatrixXd& sigma_E)
    : root_T_(linalg::inv_sqrt(sigma_T)), root_E_(linalg::inv_sqrt(sigma_E)) {}

VectorXd Whitener::apply(const VectorXd& v) const {
  const Eigen::Index T = root_T_.rows();
  const Eigen::Index E = root_E_.rows();
  if (v.size() != T * E) throw DimensionError("vector length is not T*E");
  const Eigen::Map<const MatrixXd> m(v.data(), T, E);
  const MatrixXd w = root_T_ * m * root_E_;
  return Eigen::Map<const VectorXd>(w.data(), T * E);
}

MatrixXd Whitener::apply_columns(const MatrixXd& m) const {
  MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) out.col(c) = apply(m.col(c));
  return out;
}

Whitened whiten(const VectorXd& y, const VectorXd& mu, const MatrixXd& X,
                const MatrixXd& sigma_T, const MatrixXd& sigma_E) {
  const Whitener w(sigma_T, sigma_E);
  return {w.apply(y), w.apply(mu), w.apply_columns(X)};
}

TTest::TTest(const VectorXd& mu_star, const MatrixXd& X_star) {
  const Eigen::Index n = mu_star.size();
  if (X_star.rows() != n) throw DimensionError("mu* and X* row mismatch");
  const Eigen::Index k = X_star.cols() + 1;
  df_ = static_cast<int>(n - k);
  if (df_ < 1) throw InvalidArgument("t-test needs TE > q + 1");
  Z_.resize(n, k);
  Z_.col(0) = mu_star;
  Z_.rightCols(k - 1) = X_star;
  const MatrixXd gram = Z_.transpose() * Z_;
  const MatrixXd inv = linalg::inverse_spd(gram);
  pinv_ = inv * Z_.transpose();
  var_factor_ = inv(0, 0);
}

TStat TTest::operator()(const VectorXd& y_star) const {
  if (y_star.size() != Z_.rows()) throw DimensionError("whitened series length mismatch");
  const VectorXd coef = pinv_ * y_star;
  const VectorXd fitted = Z_ * coef;
  TStat out;
  out.df = df_;
  out.beta = coef(0);
  const double rss = kernels::sum_sq_diff({y_star.data(), static_cast<std::size_t>(y_star.size())},
                                          {fitted.data(), static_cast<std::size_t>(fitted.size())});
  out.s2 = rss / df_;
  // Rounding leaves a residual of order eps * ||y||; treat that as an exact fit.
  const double tiny = 1e-26 * std::max(1.0, y_star.squaredNorm());
  if (!(rss > tiny)) {
    out.s2 = 0.0;
    out.perfect_fit = true;
    out.t = out.beta > 0.0   ? std::numeric_limits<double>::infinity()
            : out.beta < 0.0 ? -std::numeric_limits<double>::infinity()
                             : 0.0;
    return out;
  }
  out.t = out.beta / std::sqrt(out.s2 * var_factor_);
  return out;
}

TStat t_statistic(const VectorXd& y_star, const VectorXd& mu_star, const MatrixXd& X_star) {
  return TTest(mu_star, X_star)(y_star);
}

double t_sf(double t, int df) {
  if (df < 1) throw InvalidArgument("degrees of freedom must be >= 1");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double nu = df;
  const double t2 = t * t;
  // P(|T| > |t|) = I_{nu/(nu+t^2)}(nu/2, 1/2); the complementary form keeps
  // precision when t^2 is small relative to nu.
  double two_tail;
  if (t2 < nu) {
    two_tail = boost::math::ibetac(0.5, 0.5 * nu, t2 / (nu + t2));
  } else {
    two_tail = boost::math::ibeta(0.5 * nu, 0.5, nu / (nu + t2));
  }
  return t >= 0.0 ? 0.5 * two_tail : 1.0 - 0.5 * two_tail;
}

int estimate_null_count(std::span<const double> pvals) {
  const int m = static_cast<int>(pvals.size());
  if (m == 0) return 0;
  std::vector<double> p(pvals.begin(), pvals.end());
  std::sort(p.begin(), p.end());
  double prev = 0.0;
  for (int k = 1; k <= m; ++k) {
    const double slope = (1.0 - p[static_cast<std::size_t>(k - 1)]) / (m + 1 - k);
    if (k > 1 && slope < prev) {
      if (!(slope > 0.0)) return m;
      const double est = std::ceil(1.0 / slope + 1.0);
      return est >= m ? m : static_cast<int>(est);
    }
    prev = slope;
  }
  return m;
}

FdrResult fdr_adaptive(std::span<const double> pvals, double q, std::optional<int> m0) {
  FdrResult out;
  out.q = q;
  out.m = static_cast<int>(pvals.size());
  out.reject.assign(pvals.size(), false);
  if (pvals.empty()) return out;
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("FDR level must lie in (0,1)");
  for (double v : pvals) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("p-values must lie in [0,1]");
  }
  out.m0_hat = m0 ? std::clamp(*m0, 1, out.m) : estimate_null_count(pvals);
  std::vector<double> p(pvals.begin(), pvals.end());
  std::sort(p.begin(), p.end());
  int k_star = 0;
  for (int k = out.m; k >= 1; --k) {
    const double level = std::min(q, k * q / out.m0_hat);
    if (p[static_cast<std::size_t>(k - 1)] <= level) {
      k_star = k;
      break;
    }
  }
  if (k_star > 0) {
    out.threshold = p[static_cast<std::size_t>(k_star - 1)];
    for (std::size_t i = 0; i < pvals.size(); ++i) {
      out.reject[i] = pvals[i] <= out.threshold;
      out.rejections += out.reject[i] ? 1 : 0;
    }
  }
  return out;
}

namespace {

std::vector<int> relabel_by_size(const std::vector<int>& comp, int n_comp, int min_size) {
  std::vector<int> size(static_cast<std::size_t>(n_comp), 0);
  std::vector<int> first(static_cast<std::size_t>(n_comp), -1);
  for (std::size_t i = 0; i < comp.size(); ++i) {
    const auto c = static_cast<std::size_t>(comp[i]);
    ++size[c];
    if (first[c] < 0) first[c] = static_cast<int>(i);
  }
  std::vector<int> order(static_cast<std::size_t>(n_comp));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto ua = static_cast<std::size_t>(a);
    const auto ub = static_cast<std::size_t>(b);
    return size[ua] != size[ub] ? size[ua] > size[ub] : first[ua] < first[ub];
  });
  std::vector<int> label(static_cast<std::size_t>(n_comp), 0);
  int next = 1;
  for (int c : order) {
    if (size[static_cast<std::size_t>(c)] >= min_size) label[static_cast<std::size_t>(c)] = next++;
  }
  std::vector<int> out(comp.size());
  for (std::size_t i = 0; i < comp.size(); ++i) out[i] = label[static_cast<std::size_t>(comp[i])];
  return out;
}

}  // namespace

std::vector<int> cluster_active(const std::vector<Coord>& coords, int min_size) {
  const int n = static_cast<int>(coords.size());
  std::map<Coord, int> where;
  for (int i = 0; i < n; ++i) where.emplace(coords[static_cast<std::size_t>(i)], i);
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  int n_comp = 0;
  std::vector<int> stack;
  for (int seed = 0; seed < n; ++seed) {
    if (comp[static_cast<std::size_t>(seed)] >= 0) continue;
    comp[static_cast<std::size_t>(seed)] = n_comp;
    stack.push_back(seed);
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      const Coord c = coords[static_cast<std::size_t>(cur)];
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0 && dz == 0) continue;
            const auto it = where.find({c.x + dx, c.y + dy, c.z + dz});
            if (it == where.end()) continue;
            auto& slot = comp[static_cast<std::size_t>(it->second)];
            if (slot < 0) {
              slot = n_comp;
              stack.push_back(it->second);
            }
          }
    }
    ++n_comp;
  }
  return relabel_by_size(comp, n_comp, min_size);
}

std::vector<int> kmeans_clusters(const std::vector<Coord>& coords, int k, int max_iter) {
  const int n = static_cast<int>(coords.size());
  if (k < 1) throw InvalidArgument("k-means needs k >= 1");
  if (n == 0) return {};
  k = std::min(k, n);
  auto point = [&](int i) {
    const auto& c = coords[static_cast<std::size_t>(i)];
    return Eigen::Vector3d(c.x, c.y, c.z);
  };
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) centroid += point(i);
  centroid /= n;
  std::vector<Eigen::Vector3d> centers;
  int start = 0;
  for (int i = 1; i < n; ++i) {
    if ((point(i) - centroid).squaredNorm() < (point(start) - centroid).squaredNorm()) start = i;
  }
  centers.push_back(point(start));
  std::vector<double> dist(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  while (static_cast<int>(centers.size()) < k) {
    int far = 0;
    for (int i = 0; i < n; ++i) {
      auto& d = dist[static_cast<std::size_t>(i)];
      d = std::min(d, (point(i) - centers.back()).squaredNorm());
      if (d > dist[static_cast<std::size_t>(far)]) far = i;
    }
    centers.push_back(point(far));
  }
  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      for (int c = 1; c < k; ++c) {
        if ((point(i) - centers[static_cast<std::size_t>(c)]).squaredNorm() <
            (point(i) - centers[static_cast<std::size_t>(best)]).squaredNorm()) {
          best = c;
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    std::vector<Eigen::Vector3d> sum(static_cast<std::size_t>(k), Eigen::Vector3d::Zero());
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      sum[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])] += point(i);
      ++count[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (count[static_cast<std::size_t>(c)] > 0) {
        centers[static_cast<std::size_t>(c)] =
            sum[static_cast<std::size_t>(c)] / count[static_cast<std::size_t>(c)];
      }
    }
    if (!changed && iter > 0) break;
  }
  return relabel_by_size(assign, k, 1);
}

ActivationMap infer(const Dataset& data, const MixtureParams& params, const InferenceConfig& config,
                    FdrResult* fdr_out) {
  const int V = data.dims.V;
  const int E = data.dims.E;
  const Whitener whitener(params.sigma_T, params.sigma_E);
  VectorXd mu(data.dims.n());
  for (int j = 0; j < E; ++j) mu.segment(static_cast<Eigen::Index>(j) * data.dims.T, data.dims.T) = params.h.values;
  const TTest test(whitener.apply(mu), whitener.apply_columns(data.design));

  ActivationMap map;
  map.t.assign(static_cast<std::size_t>(V), 0.0);
  map.p.assign(static_cast<std::size_t>(V), 1.0);
  map.df = test.df();
  std::vector<unsigned char> perfect(static_cast<std::size_t>(V), 0);
  parallel::for_each_index(V, [&](int i) {
    const TStat st = test(whitener.apply(data.series.col(i)));
    map.t[static_cast<std::size_t>(i)] = st.t;
    map.p[static_cast<std::size_t>(i)] = t_sf(st.t, st.df);
    perfect[static_cast<std::size_t>(i)] = st.perfect_fit ? 1 : 0;
  });
  map.perfect_fit.assign(perfect.begin(), perfect.end());

  FdrResult fdr = fdr_adaptive(map.p, config.q);
  map.reject = fdr.reject;
  map.threshold = fdr.threshold;
  if (config.screen_alpha) {
    for (int i = 0; i < V; ++i) {
      if (map.p[static_cast<std::size_t>(i)] > *config.screen_alpha) map.reject[static_cast<std::size_t>(i)] = false;
    }
    map.threshold = std::min(map.threshold, *config.screen_alpha);
  }

  std::vector<Coord> active;
  std::vector<int> index;
  for (int i = 0; i < V; ++i) {
    if (map.reject[static_cast<std::size_t>(i)]) {
      active.push_back(data.coords[static_cast<std::size_t>(i)]);
      index.push_back(i);
    }
  }
  map.cluster.assign(static_cast<std::size_t>(V), 0);
  const auto labels = config.kmeans ? kmeans_clusters(active, config.kmeans_k)
                                    : cluster_active(active, config.min_cluster_size);
  for (std::size_t a = 0; a < index.size(); ++a) {
    map.cluster[static_cast<std::size_t>(index[a])] = labels[a];
  }
  if (fdr_out != nullptr) *fdr_out = std::move(fdr);
  return map;
}

}  // namespace trialmix::inference
