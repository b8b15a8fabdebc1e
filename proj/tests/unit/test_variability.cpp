#include <doctest.h>

#include <cmath>
#include <random>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "trialmix/linalg.hpp"
#include "trialmix/variability.hpp"

using namespace trialmix;
using namespace trialmix::variability;

TEST_SUITE("variability") {
  TEST_CASE("principal components of a covariance") {
    const Spectrum id = pca_cov(MatrixXd::Identity(5, 5));
    for (int k = 0; k < 5; ++k) CHECK(id.percent(k) == doctest::Approx(20.0));
    MatrixXd d = MatrixXd::Zero(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = 4.0;
    const Spectrum s = pca_cov(d);
    CHECK(s.percent(0) == doctest::Approx(80.0));
    CHECK(s.percent(1) == doctest::Approx(20.0));

    std::mt19937_64 rng(40);
    for (int rep = 0; rep < 20; ++rep) {
      const MatrixXd a = oracle::random_spd(6, rng);
      const Spectrum r = pca_cov(a);
      CHECK(std::abs(r.percent.sum() - 100.0) < 1e-9);
      const MatrixXd back = r.loadings * r.eigenvalues.asDiagonal() * r.loadings.transpose();
      CHECK((back - a).cwiseAbs().maxCoeff() < 1e-9);
      for (int k = 0; k < 6; ++k) CHECK(r.loadings(max_abs_index(r.loadings.col(k)), k) > 0.0);
    }
  }

  TEST_CASE("scores") {
    std::mt19937_64 rng(41);
    auto in = fixture::random_instance(rng, 4, 3, 5, 1);
    const Spectrum s = pca_cov(in.params.sigma_T);
    const std::vector<int> voxels{0, 2, 4};
    const auto scores = pc_scores(in.data, in.params, voxels, s.loadings, 4);
    CHECK(scores.size() == 3u * 3u * 4u);
    for (std::size_t a = 0; a < voxels.size(); ++a) {
      const MatrixXd r = residual_matrix(in.data, in.params, voxels[a]);
      for (int j = 0; j < 3; ++j) {
        double ss = 0.0;
        for (int k = 0; k < 4; ++k) ss += std::pow(scores[(a * 3 + j) * 4 + k], 2);
        CHECK(std::abs(ss - r.col(j).squaredNorm()) < 1e-9 * (1 + ss));
        const VectorXd back = response_from_scores(in.params.beta(voxels[a]), in.params.h, s.loadings,
                                                   std::span(scores).subspan((a * 3 + j) * 4, 4));
        const VectorXd want = in.params.beta(voxels[a]) * in.params.h.values + r.col(j);
        CHECK((back - want).cwiseAbs().maxCoeff() < 1e-9);
      }
    }
    CHECK_THROWS_AS(pc_scores(in.data, in.params, {}, s.loadings, 2), EmptyGroupError);
    CHECK_THROWS_AS(pc_scores(in.data, in.params, voxels, s.loadings, 5), InvalidArgument);
  }

  TEST_CASE("residual along the first loading") {
    std::mt19937_64 rng(42);
    auto in = fixture::random_instance(rng, 3, 2, 1, 0);
    const Spectrum s = pca_cov(in.params.sigma_T);
    for (int j = 0; j < 2; ++j) {
      in.data.series.col(0).segment(j * 3, 3) = in.params.beta(0) * in.params.h.values + s.loadings.col(0);
    }
    const auto sc = pc_scores(in.data, in.params, {0}, s.loadings, 3);
    CHECK(sc[0] == doctest::Approx(1.0));
    CHECK(std::abs(sc[1]) < 1e-12);
    CHECK(std::abs(sc[2]) < 1e-12);
  }

  TEST_CASE("two-way analysis of variance") {
    const std::vector<double> flat(12, 2.5);
    std::vector<int> ev, cl;
    for (int r = 0; r < 12; ++r) {
      ev.push_back(r % 3);
      cl.push_back(1 + (r / 3) % 2);
    }
    const AnovaTable c = anova_two_way(flat, ev, cl);
    CHECK(c.grand_mean == doctest::Approx(2.5));
    for (double e : c.event_effects) CHECK(std::abs(e) < 1e-12);
    CHECK(c.residual_variance < 1e-20);

    const std::vector<double> y22{1, 2, 3, 4};
    const std::vector<int> e22{0, 1, 0, 1}, c22{0, 0, 1, 1};
    const AnovaTable t22 = anova_two_way(y22, e22, c22);
    const MatrixXd o22 = oracle::anova_cells_oracle(y22, e22, c22, 2, 2);
    CHECK((t22.fitted - o22).cwiseAbs().maxCoeff() < 1e-10);

    std::mt19937_64 rng(43);
    std::normal_distribution<double> g;
    std::uniform_int_distribution<int> pick_e(0, 4), pick_c(0, 2);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> y;
      std::vector<int> e, cc;
      for (int j = 0; j < 5; ++j)
        for (int k = 0; k < 3; ++k) {
          y.push_back(g(rng));
          e.push_back(j);
          cc.push_back(k);
        }
      for (int r = 0; r < 25; ++r) {
        y.push_back(g(rng));
        e.push_back(pick_e(rng));
        cc.push_back(pick_c(rng));
      }
      const AnovaTable a = anova_two_way(y, e, cc);
      const MatrixXd o = oracle::anova_cells_oracle(y, e, cc, 5, 3);
      CHECK((a.fitted - o).cwiseAbs().maxCoeff() < 1e-10);

      // Relabel both factors.
      std::vector<int> e2, c2;
      for (int v : e) e2.push_back(10 * (4 - v) + 7);
      for (int v : cc) c2.push_back(v == 0 ? 9 : (v == 1 ? 3 : 5));
      const AnovaTable b = anova_two_way(y, e2, c2);
      for (int j = 0; j < 5; ++j)
        for (int k = 0; k < 3; ++k) {
          const int lab = k == 0 ? 9 : (k == 1 ? 3 : 5);
          CHECK(std::abs(b.fitted_cell(lab, 10 * (4 - j) + 7) - a.fitted_cell(k, j)) < 1e-10);
        }
    }
  }

  TEST_CASE("one cluster reduces to one-way") {
    const std::vector<double> y{1, 2, 3, 5, 6, 7};
    const std::vector<int> e{0, 0, 1, 1, 2, 2}, c(6, 1);
    const AnovaTable a = anova_two_way(y, e, c);
    CHECK(a.fitted_cell(1, 0) == doctest::Approx(1.5));
    CHECK(a.fitted_cell(1, 1) == doctest::Approx(4.0));
    CHECK(a.fitted_cell(1, 2) == doctest::Approx(6.5));
    CHECK_THROWS_AS(anova_two_way(y, std::vector<int>(6, 0), c), InvalidArgument);
  }

  TEST_CASE("fitted responses") {
    PcAnalysis pcs;
    pcs.time = pca_cov(MatrixXd::Identity(3, 3));
    pcs.K = 2;
    pcs.clusters = {1};
    pcs.cluster_beta = {2.0};
    for (int k = 0; k < 2; ++k) {
      AnovaTable t;
      t.cluster_levels = {1};
      t.event_levels = {0, 1};
      t.fitted = MatrixXd::Zero(1, 2);
      if (k == 0) t.fitted(0, 1) = 1.0;
      pcs.anova.push_back(t);
    }
    const Hrf h = Hrf::normalized(VectorXd::Ones(3));
    CHECK((fitted_response(h, pcs, 1, 0) - 2.0 * h.values).norm() < 1e-14);
    CHECK((fitted_response(h, pcs, 1, 1) - (2.0 * h.values + pcs.time.loadings.col(0))).norm() < 1e-14);
    CHECK_THROWS(fitted_response(h, pcs, 7, 0));

    const auto [plus, minus] = pc_effect_curves(h, pcs.time, 0);
    CHECK((plus - (10.0 * h.values + pcs.time.loadings.col(0))).norm() < 1e-12);
    CHECK((minus - (10.0 * h.values - pcs.time.loadings.col(0))).norm() < 1e-12);
  }

  TEST_CASE("natural spline") {
    const std::vector<double> x{0.0, 0.5, 1.5, 2.0, 3.5};
    std::vector<double> lin;
    for (double v : x) lin.push_back(2.0 - 3.0 * v);
    const NaturalSpline line(x, lin);
    for (double t = -1.0; t < 5.0; t += 0.13) CHECK(std::abs(line(t) - (2.0 - 3.0 * t)) < 1e-12);

    std::mt19937_64 rng(44);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> knots{0.0};
      std::uniform_real_distribution<double> step(0.1, 1.0);
      for (int k = 0; k < 6; ++k) knots.push_back(knots.back() + step(rng));
      const auto truth = oracle::TruncatedPowerSpline::random(knots, rng);
      std::vector<double> y;
      for (double k : knots) y.push_back(truth(k));
      const NaturalSpline s(knots, y);
      for (std::size_t k = 0; k < knots.size(); ++k) CHECK(std::abs(s(knots[k]) - y[k]) < 1e-9);
      for (double t = knots.front(); t <= knots.back(); t += 0.01) CHECK(std::abs(s(t) - truth(t)) < 1e-8);
    }

    const Curve c = spline_interp(x, lin, 11);
    CHECK(c.t.size() == 11u);
    CHECK(c.t.front() == 0.0);
    CHECK(c.t.back() == 3.5);

    CHECK_THROWS_AS(NaturalSpline(std::vector<double>{0, 1, 1, 2}, std::vector<double>{0, 0, 0, 0}), InvalidArgument);
    CHECK_THROWS_AS(NaturalSpline(std::vector<double>{0, 1, 2}, std::vector<double>{0, 0, 0}), InvalidArgument);
  }

  TEST_CASE("smoothing spline flattens with large weight") {
    const std::vector<double> x{0, 1, 2, 3, 4, 5};
    const std::vector<double> y{0, 1, -1, 1, -1, 0};
    const NaturalSpline rough(x, y, 0.0);
    const NaturalSpline smooth(x, y, 1e6);
    double sr = 0.0, ss = 0.0;
    for (int k = 0; k < 6; ++k) {
      sr += std::abs(rough.second_derivatives()(k));
      ss += std::abs(smooth.second_derivatives()(k));
    }
    CHECK(ss < 1e-3 * sr);
  }
}
