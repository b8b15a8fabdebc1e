#include "trialmix/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "trialmix/kernels.hpp"

namespace trialmix::linalg {
namespace {

std::span<const double> flat(const MatrixXd& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

Eigen::LLT<MatrixXd> cholesky(const MatrixXd& a) {
  if (a.rows() != a.cols()) throw DimensionError("matrix is not square");
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw SingularityError("matrix is not positive definite");
  }
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) {
      throw SingularityError("matrix is not positive definite");
    }
  }
  return llt;
}

}  // namespace

void require_symmetric(const MatrixXd& a, double tol) {
  if (a.rows() != a.cols()) {
    std::ostringstream os;
    os << "expected a square matrix, got " << a.rows() << "x" << a.cols();
    throw DimensionError(os.str());
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= tol * scale)) {
    std::ostringstream os;
    os << "matrix is not symmetric (max |a - a'| = " << asym << ")";
    throw DimensionError(os.str());
  }
}

SymEigen sym_eigen(const MatrixXd& a) {
  require_symmetric(a);
  const Eigen::Index n = a.rows();
  if (n > kMaxJacobiDim) {
    throw DimensionError("sym_eigen supports dimension <= 64, got " + std::to_string(n));
  }
  MatrixXd m = 0.5 * (a + a.transpose());
  MatrixXd v = MatrixXd::Identity(n, n);
  const double norm = m.norm();
  const double target = 1e-12 * norm;

  auto off_norm = [&m, n] {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != j) s += m(i, j) * m(i, j);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 100 && norm > 0.0; ++sweep) {
    if (off_norm() < target) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        // Rotation angle from the symmetric Schur decomposition of the
        // 2x2 block, using the smaller root for stability.
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double mkp = m(k, p);
          const double mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double mpk = m(p, k);
          const double mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        m(p, q) = 0.0;
        m(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&m](Eigen::Index x, Eigen::Index y) { return m(x, x) > m(y, y); });
  SymEigen out{VectorXd(n), MatrixXd(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = m(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

double logdet_spd(const MatrixXd& a) {
  const auto llt = cholesky(a);
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double kron_logdet(const MatrixXd& sigma_E, const MatrixXd& sigma_T) {
  return static_cast<double>(sigma_T.rows()) * logdet_spd(sigma_E) +
         static_cast<double>(sigma_E.rows()) * logdet_spd(sigma_T);
}

double kron_quad_form(const MatrixXd& sigma_E, const MatrixXd& sigma_T, const MatrixXd& r) {
  if (r.rows() != sigma_T.rows() || r.cols() != sigma_E.rows()) {
    throw DimensionError("residual shape does not match the Kronecker factors");
  }
  const auto llt_T = cholesky(sigma_T);
  const auto llt_E = cholesky(sigma_E);
  // W = sigma_T^-1 r sigma_E^-1
  const MatrixXd left = llt_T.solve(r);
  const MatrixXd w = llt_E.solve(left.transpose()).transpose();
  return std::max(0.0, kernels::dot(flat(r), flat(w)));
}

MatrixXd inv_sqrt(const MatrixXd& a) {
  const SymEigen eig = sym_eigen(a);
  const double n = static_cast<double>(a.rows());
  const double floor = 1e-12 * a.trace() / n;
  if (!(eig.values.minCoeff() > floor) || !(floor > 0.0)) {
    throw SingularityError("matrix is singular or not positive definite (inverse square root)");
  }
  const VectorXd d = eig.values.array().rsqrt();
  MatrixXd out = eig.vectors * d.asDiagonal() * eig.vectors.transpose();
  return 0.5 * (out + out.transpose());
}

MatrixXd sqrt_psd(const MatrixXd& a) {
  const SymEigen eig = sym_eigen(a);
  if (eig.values.minCoeff() < -1e-10 * std::max(1.0, std::abs(eig.values(0)))) {
    throw SingularityError("matrix has a negative eigenvalue (square root)");
  }
  const VectorXd d = eig.values.cwiseMax(0.0).cwiseSqrt();
  MatrixXd out = eig.vectors * d.asDiagonal() * eig.vectors.transpose();
  return 0.5 * (out + out.transpose());
}

VectorXd solve_spd(const MatrixXd& a, const VectorXd& rhs) {
  if (a.rows() != rhs.size()) throw DimensionError("right-hand side length mismatch");
  return cholesky(a).solve(rhs);
}

MatrixXd solve_spd(const MatrixXd& a, const MatrixXd& rhs) {
  if (a.rows() != rhs.rows()) throw DimensionError("right-hand side row mismatch");
  return cholesky(a).solve(rhs);
}

MatrixXd inverse_spd(const MatrixXd& a) {
  MatrixXd inv = cholesky(a).solve(MatrixXd::Identity(a.rows(), a.cols()));
  return 0.5 * (inv + inv.transpose());
}

MatrixXd spd_guard(const MatrixXd& a, Warnings* warnings, const char* what) {
  const SymEigen eig = sym_eigen(a);
  const double lmax = eig.values(0);
  const double lmin = eig.values(eig.values.size() - 1);
  if (lmin > 0.0 && lmax / lmin <= 1e12) return a;
  const double n = static_cast<double>(a.rows());
  const double tr = a.trace();
  const double ridge = tr > 0.0 ? 1e-8 * tr / n : 1e-8;
  std::ostringstream os;
  os << what << " is ill-conditioned (eigenvalues " << lmax << " .. " << lmin
     << "); added ridge " << ridge;
  warn(warnings, os.str());
  MatrixXd out = a;
  out.diagonal().array() += ridge;
  return out;
}

KronPrecision::KronPrecision(const MatrixXd& sigma_E, const MatrixXd& sigma_T)
    : inv_T_(inverse_spd(sigma_T)),
      inv_E_(inverse_spd(sigma_E)),
      logdet_(kron_logdet(sigma_E, sigma_T)) {}

MatrixXd KronPrecision::apply(const MatrixXd& r) const {
  if (r.rows() != inv_T_.rows() || r.cols() != inv_E_.rows()) {
    throw DimensionError("residual shape does not match the Kronecker factors");
  }
  return inv_T_ * r * inv_E_;
}

double KronPrecision::quad_form(const MatrixXd& r) const {
  const MatrixXd w = apply(r);
  return std::max(0.0, kernels::dot(flat(r), flat(w)));
}

double KronPrecision::inner(const MatrixXd& a, const MatrixXd& b) const {
  const MatrixXd w = apply(b);
  return kernels::dot(flat(a), flat(w));
}

}  // namespace trialmix::linalg
