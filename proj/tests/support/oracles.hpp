#pragma once

// Dense reference computations used to check the structured code paths.
// Nothing here calls into the library's own linear algebra.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "trialmix/types.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline MatrixXd random_spd(int n, std::mt19937_64& rng, double ridge = 0.5) {
  std::normal_distribution<double> z(0.0, 1.0);
  MatrixXd a(n, n);
  for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = z(rng);
  MatrixXd s = a * a.transpose() / n + ridge * MatrixXd::Identity(n, n);
  return 0.5 * (s + s.transpose());
}

inline MatrixXd random_matrix(int r, int c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> z(0.0, sd);
  MatrixXd a(r, c);
  for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = z(rng);
  return a;
}

inline double dense_logdet(const MatrixXd& s) {
  Eigen::LLT<MatrixXd> llt(s);
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

inline double dense_quad(const MatrixXd& s, const VectorXd& r) {
  return r.dot(Eigen::LLT<MatrixXd>(s).solve(r));
}

inline double gauss_logpdf(const VectorXd& r, const MatrixXd& cov) {
  const double n = static_cast<double>(r.size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * dense_logdet(cov) - 0.5 * dense_quad(cov, r);
}

/// Symmetric inverse square root through Eigen's self-adjoint solver.
inline MatrixXd dense_inv_sqrt(const MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
  return es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

inline VectorXd mu_vector(const VectorXd& h, int E) {
  VectorXd mu(h.size() * E);
  for (int j = 0; j < E; ++j) mu.segment(j * h.size(), h.size()) = h;
  return mu;
}

/// Expected complete-data log-likelihood Q evaluated with dense TE x TE
/// covariances. `h` need not have unit norm.
inline double dense_q(const trialmix::Dataset& d, const VectorXd& p_i, double p, const VectorXd& beta,
                      const MatrixXd& b, const VectorXd& h, const MatrixXd& sigma_T, const MatrixXd& sigma_E,
                      double sigma2) {
  const int N = d.dims.n();
  const MatrixXd cov1 = kron(sigma_E, sigma_T);
  const MatrixXd cov2 = sigma2 * MatrixXd::Identity(N, N);
  const VectorXd mu = mu_vector(h, d.dims.E);
  double q = 0.0;
  for (int i = 0; i < d.dims.V; ++i) {
    VectorXd xb = VectorXd::Zero(N);
    if (d.dims.q > 0) xb = d.design * b.col(i);
    const VectorXd r0 = d.series.col(i) - xb;
    const VectorXd r1 = r0 - beta(i) * mu;
    const double w = p_i(i);
    if (w > 0.0) q += w * (std::log(p) + gauss_logpdf(r1, cov1));
    if (w < 1.0) q += (1.0 - w) * (std::log1p(-p) + gauss_logpdf(r0, cov2));
  }
  return q;
}

/// Central finite-difference derivative of f at x along a unit coordinate.
inline double central_diff(const std::function<double(double)>& f, double x, double step = 1e-6) {
  return (f(x + step) - f(x - step)) / (2.0 * step);
}

/// Standard Student-t survival functions for one and two degrees of freedom.
inline double t_sf_df1(double t) { return 0.5 - std::atan(t) / std::numbers::pi; }
inline double t_sf_df2(double t) { return 0.5 - t / (2.0 * std::sqrt(2.0 + t * t)); }

/// Kolmogorov-Smirnov distance of a sample to Uniform(0, 1).
inline double ks_uniform(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    d = std::max(d, std::max((k + 1) / n - u[k], u[k] - k / n));
  }
  return d;
}

/// Two-way additive least squares with treatment (reference-level) dummies,
/// solved through a QR of the dummy design. Returns fitted cell values as a
/// C x J matrix.
inline MatrixXd anova_cells_oracle(const std::vector<double>& y, const std::vector<int>& event_idx,
                                   const std::vector<int>& cluster_idx, int J, int C) {
  const int n = static_cast<int>(y.size());
  const int p = 1 + (J - 1) + (C - 1);
  MatrixXd Z = MatrixXd::Zero(n, p);
  VectorXd yv(n);
  for (int r = 0; r < n; ++r) {
    Z(r, 0) = 1.0;
    if (event_idx[r] > 0) Z(r, event_idx[r]) = 1.0;
    if (cluster_idx[r] > 0) Z(r, J - 1 + cluster_idx[r]) = 1.0;
    yv(r) = y[r];
  }
  const VectorXd theta = Z.colPivHouseholderQr().solve(yv);
  MatrixXd cells(C, J);
  for (int c = 0; c < C; ++c)
    for (int j = 0; j < J; ++j) {
      double v = theta(0);
      if (j > 0) v += theta(j);
      if (c > 0) v += theta(J - 1 + c);
      cells(c, j) = v;
    }
  return cells;
}

/// Natural cubic spline written in the truncated-power basis:
/// f(t) = a + b t + sum_j c_j (t - k_j)_+^3 with sum c_j = sum c_j k_j = 0,
/// which makes f linear outside the knots (zero second derivative at the
/// ends). The first two coefficients of `c` are solved from the rest.
struct TruncatedPowerSpline {
  double a = 0.0;
  double b = 0.0;
  std::vector<double> knots;
  std::vector<double> c;

  double operator()(double t) const {
    double v = a + b * t;
    for (std::size_t j = 0; j < knots.size(); ++j) {
      const double d = t - knots[j];
      if (d > 0.0) v += c[j] * d * d * d;
    }
    return v;
  }

  static TruncatedPowerSpline random(const std::vector<double>& knots, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    TruncatedPowerSpline s;
    s.a = z(rng);
    s.b = z(rng);
    s.knots = knots;
    s.c.assign(knots.size(), 0.0);
    for (std::size_t j = 2; j < knots.size(); ++j) s.c[j] = z(rng);
    // c0 + c1 = -S0, c0 k0 + c1 k1 = -S1
    double s0 = 0.0;
    double s1 = 0.0;
    for (std::size_t j = 2; j < knots.size(); ++j) {
      s0 += s.c[j];
      s1 += s.c[j] * knots[j];
    }
    const double k0 = knots[0];
    const double k1 = knots[1];
    s.c[1] = (-s1 + k0 * s0) / (k1 - k0);
    s.c[0] = -s0 - s.c[1];
    return s;
  }
};

}  // namespace oracle
