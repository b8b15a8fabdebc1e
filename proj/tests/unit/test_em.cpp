#include <doctest.h>

#include <cmath>
#include <random>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "trialmix/em.hpp"
#include "trialmix/parallel.hpp"
#include "trialmix/simulate.hpp"

using namespace trialmix;

namespace {

double max_abs_grad_symmetric(const std::function<double(const MatrixXd&)>& f, const MatrixXd& at) {
  double worst = 0.0;
  for (Eigen::Index a = 0; a < at.rows(); ++a)
    for (Eigen::Index b = a; b < at.cols(); ++b) {
      auto g = [&](double x) {
        MatrixXd m = at;
        m(a, b) += x;
        if (a != b) m(b, a) += x;
        return f(m);
      };
      worst = std::max(worst, std::abs(oracle::central_diff(g, 0.0)));
    }
  return worst;
}

simulate::SimResult small_sim(std::uint64_t seed, int V = 200) {
  simulate::SimConfig c;
  c.V = V;
  c.T = 8;
  c.E = 5;
  c.q = 2;
  c.snr = 5.0;
  return simulate::generate(simulate::make_scenario(c, seed), seed);
}

}  // namespace

TEST_SUITE("em") {
  TEST_CASE("canonical response") {
    std::vector<double> t;
    for (int k = 0; k < 14; ++k) t.push_back(5.0 / 6.0 + 2.0 * k);
    const Hrf h = em::canonical_hrf(t);
    CHECK(h.values.norm() == doctest::Approx(1.0));
    CHECK(max_abs_index(h.values) == 2);
    CHECK(h.values(h.size() - 1) < 0.0);
    CHECK(em::double_gamma(0.0) == 0.0);
    CHECK_THROWS_AS(em::canonical_hrf(std::vector<double>{1.0}), InvalidArgument);
    CHECK_THROWS_AS(em::canonical_hrf(std::vector<double>{2.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(em::canonical_hrf(std::vector<double>{-1.0, 1.0}), InvalidArgument);
  }

  TEST_CASE("responsibility edge cases") {
    CHECK(em::responsibility(0.5, -3.0, -3.0) == doctest::Approx(0.5));
    CHECK(em::responsibility(0.5, -1000.0, 0.0) == 0.0);
    CHECK(em::responsibility(0.5, 0.0, -1000.0) == 1.0);
    CHECK(em::responsibility(1.0, -1e9, 0.0) == 1.0);
    CHECK(em::responsibility(0.0, 0.0, -1e9) == 0.0);
  }

  TEST_CASE("component densities match dense evaluation") {
    std::mt19937_64 rng(20);
    for (int rep = 0; rep < 10; ++rep) {
      auto in = fixture::random_instance(rng, 2 + rep % 3, 1 + rep % 4, 3, rep % 3);
      const auto& d = in.data;
      const auto& m = in.params;
      for (int i = 0; i < d.dims.V; ++i) {
        const MatrixXd r = residual_matrix(d, m, i);
        const VectorXd vr = Eigen::Map<const VectorXd>(r.data(), r.size());
        CHECK(em::log_density_active(d, m, i) ==
              doctest::Approx(oracle::gauss_logpdf(vr, oracle::kron(m.sigma_E, m.sigma_T))).epsilon(1e-12));
        const VectorXd r2 = inactive_residual(d, m, i);
        CHECK(em::log_density_inactive(d, m, i) ==
              doctest::Approx(oracle::gauss_logpdf(r2, m.sigma2 * MatrixXd::Identity(r2.size(), r2.size())))
                  .epsilon(1e-12));
      }
    }
  }

  TEST_CASE("beta and b updates match dense solves") {
    std::mt19937_64 rng(21);
    auto in = fixture::random_instance(rng, 3, 3, 2, 2);
    const auto& d = in.data;
    const auto& m = in.params;
    const MatrixXd cov = oracle::kron(m.sigma_E, m.sigma_T);
    const MatrixXd prec = cov.inverse();
    const VectorXd mu = oracle::mu_vector(m.h.values, 3);
    const VectorXd y = d.series.col(0);
    const VectorXd r = y - d.design * m.b.col(0);
    const double beta = mu.dot(prec * r) / mu.dot(prec * mu);
    CHECK(em::update_beta(y, d.design, m.b.col(0), m.h, m.sigma_T, m.sigma_E) == doctest::Approx(beta).epsilon(1e-12));

    const double pi = 0.7;
    const MatrixXd A = pi * d.design.transpose() * prec * d.design +
                       (1 - pi) / m.sigma2 * d.design.transpose() * d.design;
    const VectorXd rhs = pi * d.design.transpose() * prec * (y - beta * mu) +
                         (1 - pi) / m.sigma2 * d.design.transpose() * y;
    const VectorXd b = A.ldlt().solve(rhs);
    const VectorXd got = em::update_b(y, beta, pi, m.h, d.design, m.sigma_T, m.sigma_E, m.sigma2);
    CHECK((got - b).cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("closed-form updates are stationary points of Q") {
    std::mt19937_64 rng(22);
    for (int rep = 0; rep < 8; ++rep) {
      auto in = fixture::random_instance(rng, 2 + rep % 2, 2 + (rep / 2) % 2, 12, rep % 3);
      MixtureParams m = in.params;

      // h: the raw stationary point, before rescaling.
      const em::HrfUpdate hu = em::update_h(in.data, in.resp, m);
      REQUIRE(hu.updated);
      double worst = 0.0;
      for (int t = 0; t < m.h.size(); ++t) {
        auto f = [&](double x) {
          VectorXd h = hu.raw;
          h(t) += x;
          return oracle::dense_q(in.data, in.resp.p_i, m.p, m.beta, m.b, h, m.sigma_T, m.sigma_E, m.sigma2);
        };
        worst = std::max(worst, std::abs(oracle::central_diff(f, 0.0)));
      }
      CHECK(worst < 1e-5);
      // Rescaling leaves every beta_i * h unchanged.
      for (int i = 0; i < in.data.dims.V; ++i) {
        CHECK((hu.beta(i) * hu.h.values - m.beta(i) * hu.raw).norm() < 1e-10 * (1 + std::abs(m.beta(i))));
      }

      m.sigma_T = em::update_sigma_T(in.data, in.resp, m);
      CHECK(max_abs_grad_symmetric(
                [&](const MatrixXd& s) {
                  return oracle::dense_q(in.data, in.resp.p_i, m.p, m.beta, m.b, m.h.values, s, m.sigma_E, m.sigma2);
                },
                m.sigma_T) < 1e-5);
      m.sigma_E = em::update_sigma_E(in.data, in.resp, m);
      CHECK(max_abs_grad_symmetric(
                [&](const MatrixXd& s) {
                  return oracle::dense_q(in.data, in.resp.p_i, m.p, m.beta, m.b, m.h.values, m.sigma_T, s, m.sigma2);
                },
                m.sigma_E) < 1e-5);

      m.sigma2 = em::update_sigma2(in.data, in.resp, m.b);
      auto fs = [&](double x) {
        return oracle::dense_q(in.data, in.resp.p_i, m.p, m.beta, m.b, m.h.values, m.sigma_T, m.sigma_E,
                               m.sigma2 + x);
      };
      CHECK(std::abs(oracle::central_diff(fs, 0.0)) < 1e-5);

      m.p = em::update_p(in.resp);
      auto fp = [&](double x) {
        return oracle::dense_q(in.data, in.resp.p_i, m.p + x, m.beta, m.b, m.h.values, m.sigma_T, m.sigma_E,
                               m.sigma2);
      };
      CHECK(std::abs(oracle::central_diff(fp, 0.0)) < 1e-5);
    }
  }

  TEST_CASE("zero betas leave the response shape alone with a warning") {
    std::mt19937_64 rng(23);
    auto in = fixture::random_instance(rng, 3, 2, 5, 1);
    in.params.beta.setZero();
    Warnings w;
    const auto hu = em::update_h(in.data, in.resp, in.params, &w);
    CHECK_FALSE(hu.updated);
    CHECK(hu.h.values == in.params.h.values);
    CHECK(w.size() == 1);
  }

  TEST_CASE("covariance updates normalize the trace and reject empty groups") {
    std::mt19937_64 rng(24);
    auto in = fixture::random_instance(rng, 3, 4, 20, 1);
    const auto cov = em::update_covariances(in.data, in.resp, in.params, 2);
    CHECK(cov.sigma_E.trace() == doctest::Approx(4.0).epsilon(1e-12));
    const auto epoch = em::update_covariances(in.data, in.resp, in.params, 2, em::CovStructure::epoch_only);
    CHECK(epoch.sigma_T == MatrixXd::Identity(3, 3));
    const auto sph = em::update_covariances(in.data, in.resp, in.params, 2, em::CovStructure::spherical);
    CHECK(sph.sigma_E == MatrixXd::Identity(4, 4));
    CHECK(sph.sigma_T(0, 1) == 0.0);
    Responsibilities none{VectorXd::Zero(20)};
    CHECK_THROWS_AS(em::update_covariances(in.data, none, in.params, 2), EmptyGroupError);
    Responsibilities all{VectorXd::Ones(20)};
    CHECK_THROWS_AS(em::update_sigma2(in.data, all, in.params.b), EmptyGroupError);
  }

  TEST_CASE("noise variance is floored when residuals vanish") {
    std::mt19937_64 rng(25);
    auto in = fixture::random_instance(rng, 2, 2, 3, 0);
    in.data.series.setZero();
    Warnings w;
    CHECK(em::update_sigma2(in.data, in.resp, in.params.b, &w, 1e-12) == 1e-12);
    CHECK(w.size() == 1);
  }

  TEST_CASE("observed log-likelihood matches the dense mixture") {
    std::mt19937_64 rng(26);
    auto in = fixture::random_instance(rng, 3, 2, 6, 1);
    const auto& d = in.data;
    const auto& m = in.params;
    double ll = 0.0;
    for (int i = 0; i < d.dims.V; ++i) {
      const double a = std::log(m.p) + em::log_density_active(d, m, i);
      const double b = std::log(1 - m.p) + em::log_density_inactive(d, m, i);
      ll += std::log(std::exp(a) + std::exp(b));
    }
    CHECK(em::observed_loglik(d, m) == doctest::Approx(ll).epsilon(1e-12));
    MixtureParams all = m;
    all.p = 1.0;
    double ll1 = 0.0;
    for (int i = 0; i < d.dims.V; ++i) ll1 += em::log_density_active(d, all, i);
    CHECK(em::observed_loglik(d, all) == ll1);
  }

  TEST_CASE("EM increases the likelihood and stops at its fixed point") {
    const auto sim = small_sim(5);
    em::EmConfig cfg;
    cfg.tol = 1e-9;
    const FitResult fit = em::em_fit(sim.data, cfg);
    CHECK(fit.converged);
    for (std::size_t k = 1; k < fit.loglik_trace.size(); ++k) {
      CHECK(fit.loglik_trace[k] >= fit.loglik_trace[k - 1] - 1e-8 * std::abs(fit.loglik_trace[k - 1]));
    }
    em::EmConfig again;
    const FitResult restart = em::em_fit(sim.data, again, fit.params);
    CHECK(restart.iterations <= 2);
    CHECK(restart.converged);
  }

  TEST_CASE("thread count does not change the fit") {
    const auto sim = small_sim(6);
    parallel::set_threads(1);
    const FitResult a = em::em_fit(sim.data, em::EmConfig{});
    parallel::set_threads(4);
    const FitResult b = em::em_fit(sim.data, em::EmConfig{});
    parallel::set_threads(1);
    CHECK(a.loglik_trace == b.loglik_trace);
    CHECK(a.params.sigma_T == b.params.sigma_T);
    CHECK(a.resp.p_i == b.resp.p_i);
  }

  TEST_CASE("dense density route gives the same fit") {
    const auto sim = small_sim(7, 60);
    em::EmConfig dense;
    dense.active_density = [](const Dataset& d, const MixtureParams& m, int i) {
      const MatrixXd r = residual_matrix(d, m, i);
      return oracle::gauss_logpdf(Eigen::Map<const VectorXd>(r.data(), r.size()), oracle::kron(m.sigma_E, m.sigma_T));
    };
    const FitResult a = em::em_fit(sim.data, em::EmConfig{});
    const FitResult b = em::em_fit(sim.data, dense);
    CHECK(a.iterations == b.iterations);
    CHECK(std::abs(a.loglik_trace.back() - b.loglik_trace.back()) < 1e-8 * std::abs(a.loglik_trace.back()));
    CHECK((a.params.h.values - b.params.h.values).norm() < 1e-8);
  }

  TEST_CASE("reduced fit freezes h when asked") {
    const auto sim = small_sim(8, 50);
    em::EmConfig cfg;
    cfg.mixture = false;
    cfg.estimate_h = false;
    cfg.structure = em::CovStructure::spherical;
    const FitResult fit = em::em_fit(sim.data, cfg);
    const Hrf canon = em::canonical_hrf(sim.data.acq.post_stimulus_times);
    CHECK(fit.params.h.values == canon.values);
    CHECK(fit.params.p == 1.0);
    CHECK((fit.resp.p_i.array() == 1.0).all());
  }
}
