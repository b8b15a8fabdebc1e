#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "support/oracles.hpp"
#include "trialmix/inference.hpp"

using namespace trialmix;
using namespace trialmix::inference;

namespace {

std::vector<bool> plain_bh(std::vector<double> p, double q) {
  const int m = static_cast<int>(p.size());
  std::vector<double> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  double cut = -1.0;
  for (int k = m; k >= 1; --k) {
    if (sorted[k - 1] <= k * q / m) {
      cut = sorted[k - 1];
      break;
    }
  }
  std::vector<bool> r(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) r[i] = p[i] <= cut;
  return r;
}

}  // namespace

TEST_SUITE("inference") {
  TEST_CASE("t tail probabilities") {
    CHECK(t_sf(0.0, 7) == 0.5);
    CHECK(t_sf(1.0, 1) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(t_sf(std::sqrt(2.0), 2) == doctest::Approx(0.1464466094067262).epsilon(1e-13));
    for (double t = -8.0; t <= 8.0; t += 0.37) {
      CHECK(std::abs(t_sf(t, 1) - oracle::t_sf_df1(t)) <= 1e-12 * oracle::t_sf_df1(t) + 1e-300);
      CHECK(std::abs(t_sf(t, 2) - oracle::t_sf_df2(t)) <= 1e-12 * oracle::t_sf_df2(t) + 1e-300);
      CHECK(std::abs(t_sf(t, 37) + t_sf(-t, 37) - 1.0) < 1e-12);
      CHECK(t_sf(t + 0.01, 37) < t_sf(t, 37));
    }
    CHECK(t_sf(40.0, 100) > 0.0);
  }

  TEST_CASE("whitening") {
    std::mt19937_64 rng(30);
    const VectorXd y = oracle::random_matrix(6, 1, rng);
    const MatrixXd X = oracle::random_matrix(6, 2, rng);
    const VectorXd mu = oracle::random_matrix(6, 1, rng);
    const Whitened same = whiten(y, mu, X, MatrixXd::Identity(3, 3), MatrixXd::Identity(2, 2));
    CHECK((same.y - y).norm() < 1e-15);
    CHECK((same.X - X).norm() < 1e-15);

    const Whitened half = whiten(y, mu, X, MatrixXd::Identity(3, 3), 4.0 * MatrixXd::Identity(2, 2));
    CHECK((half.y - y / 2.0).norm() < 1e-15);

    const MatrixXd sT = oracle::random_spd(3, rng);
    const MatrixXd sE = oracle::random_spd(2, rng);
    const MatrixXd root = oracle::dense_inv_sqrt(oracle::kron(sE, sT));
    const Whitened w = whiten(y, mu, X, sT, sE);
    CHECK((w.y - root * y).norm() < 1e-9);
    CHECK((w.mu - root * mu).norm() < 1e-9);
    CHECK((w.X - root * X).norm() < 1e-9);
  }

  TEST_CASE("t statistic") {
    std::mt19937_64 rng(31);
    const int n = 12;
    MatrixXd X = oracle::random_matrix(n, 2, rng);
    VectorXd mu = oracle::random_matrix(n, 1, rng);
    // Make mu orthogonal to the covariates.
    mu -= X * (X.transpose() * X).ldlt().solve(X.transpose() * mu);
    const VectorXd y = oracle::random_matrix(n, 1, rng);

    MatrixXd Z(n, 3);
    Z << mu, X;
    const MatrixXd inv = (Z.transpose() * Z).inverse();
    const VectorXd coef = inv * Z.transpose() * y;
    const double s2 = (y - Z * coef).squaredNorm() / (n - 3);
    const double t = coef(0) / std::sqrt(s2 / mu.squaredNorm());
    const TStat got = t_statistic(y, mu, X);
    CHECK(got.df == n - 3);
    CHECK(got.t == doctest::Approx(t).epsilon(1e-8));

    const TStat scaled = t_statistic(3.0 * y, 3.0 * mu, X);
    CHECK(std::abs(scaled.t - got.t) < 1e-10 * std::abs(got.t));

    // Pure noise orthogonal to mu and the covariates.
    VectorXd orth = y - Z * coef;
    const TStat zero = t_statistic(orth, mu, X);
    CHECK(std::abs(zero.t) < 1e-10);

    const TStat perfect = t_statistic(mu, mu, X);
    CHECK(perfect.perfect_fit);
    CHECK(std::isinf(perfect.t));
    CHECK(perfect.t > 0.0);
  }

  TEST_CASE("adaptive false discovery rate") {
    const std::vector<double> ones(20, 1.0);
    const FdrResult none = fdr_adaptive(ones, 0.05);
    CHECK(none.rejections == 0);
    CHECK(none.m0_hat == 20);
    CHECK(none.threshold == 0.0);

    const std::vector<double> four{0.001, 0.008, 0.039, 0.041};
    const FdrResult all = fdr_adaptive(four, 0.05, 4);
    CHECK(all.rejections == 4);
    CHECK(all.threshold == 0.041);

    CHECK(fdr_adaptive(std::vector<double>{}, 0.05).m == 0);

    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> p(60);
      for (auto& v : p) v = u(rng) < 0.3 ? std::pow(u(rng), 6.0) : u(rng);
      const FdrResult r = fdr_adaptive(p, 0.1, 60);
      CHECK(r.reject == plain_bh(p, 0.1));
      const FdrResult a = fdr_adaptive(p, 0.1);
      CHECK(a.threshold <= 0.1);
      for (std::size_t i = 0; i < p.size(); ++i) CHECK(a.reject[i] == (a.rejections > 0 && p[i] <= a.threshold));
    }
  }

  TEST_CASE("null count estimate") {
    std::vector<double> p;
    for (int k = 1; k <= 100; ++k) p.push_back((k - 0.5) / 100.0);
    CHECK(estimate_null_count(p) >= 95);
    CHECK(estimate_null_count(p) <= 100);
  }

  TEST_CASE("false rejections under the global null") {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double total = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> p(1000);
      for (auto& v : p) v = u(rng);
      total += fdr_adaptive(p, 0.05).rejections > 0 ? 1.0 : 0.0;
    }
    CHECK(total / 200.0 <= 0.07);
  }

  TEST_CASE("clustering") {
    CHECK(cluster_active({{0, 0, 0}}) == std::vector<int>{0});
    CHECK(cluster_active({{0, 0, 0}, {1, 1, 1}}, 1) == std::vector<int>{1, 1});
    CHECK(cluster_active({{0, 0, 0}, {2, 0, 0}}, 1) == std::vector<int>{1, 2});

    std::vector<Coord> c;
    const int sizes[3] = {3, 3, 3};
    const int offsets[3] = {0, 10, 20};
    for (int b = 0; b < 3; ++b)
      for (int x = 0; x < sizes[b]; ++x)
        for (int y = 0; y < 3; ++y)
          for (int z = 0; z < 3; ++z) c.push_back({offsets[b] + x, y, z});
    c.push_back({40, 0, 0});
    c.push_back({41, 0, 0});
    c.push_back({50, 0, 0});
    c.push_back({51, 0, 0});
    c.push_back({52, 0, 0});
    c.push_back({53, 0, 0});
    c.push_back({54, 0, 0});
    const auto labels = cluster_active(c);
    std::vector<int> count(5, 0);
    for (int l : labels) ++count[static_cast<std::size_t>(l)];
    CHECK(count[1] == 27);
    CHECK(count[2] == 27);
    CHECK(count[3] == 27);
    CHECK(count[4] == 5);
    CHECK(count[0] == 2);
    CHECK(labels[0] == 1);
  }

  TEST_CASE("k-means labels") {
    std::vector<Coord> c;
    for (int i = 0; i < 6; ++i) c.push_back({i % 2, i / 2, 0});
    for (int i = 0; i < 4; ++i) c.push_back({30 + i % 2, i / 2, 0});
    const auto labels = kmeans_clusters(c, 2);
    for (int i = 0; i < 6; ++i) CHECK(labels[i] == 1);
    for (int i = 6; i < 10; ++i) CHECK(labels[i] == 2);
  }
}
