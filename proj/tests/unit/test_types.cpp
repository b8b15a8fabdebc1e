#include <doctest.h>

#include "trialmix/types.hpp"

using namespace trialmix;

namespace {

Dataset tiny(int T, int E, int V, int q) {
  Dataset d;
  d.dims = {T, E, V, q};
  d.series = MatrixXd::Random(T * E, V);
  d.design = MatrixXd::Random(T * E, q);
  for (int c = 0; c < q; ++c) d.design.col(c).array() -= d.design.col(c).mean();
  for (int i = 0; i < V; ++i) d.coords.push_back({i, 0, 0});
  return d;
}

}  // namespace

TEST_SUITE("types") {
  TEST_CASE("dims validation") {
    CHECK_NOTHROW(validate(Dims{3, 2, 1, 0}));
    CHECK_THROWS_AS(validate(Dims{0, 2, 1, 0}), InvalidArgument);
    CHECK_THROWS_AS(validate(Dims{2, 2, 1, 4}), InvalidArgument);
  }

  TEST_CASE("dataset validation") {
    Dataset d = tiny(3, 2, 4, 1);
    CHECK_NOTHROW(validate(d));
    d.design(0, 0) += 1.0;
    CHECK_THROWS_AS(validate(d), InvalidArgument);
    d = tiny(3, 2, 4, 1);
    d.coords[1] = d.coords[0];
    CHECK_THROWS_AS(validate(d), InvalidArgument);
    d = tiny(3, 2, 4, 1);
    d.series.resize(5, 4);
    CHECK_THROWS_AS(validate(d), DimensionError);
  }

  TEST_CASE("epoch view is column-major T x E") {
    Dataset d = tiny(3, 2, 1, 0);
    const auto m = d.epochs(0);
    CHECK(m(2, 1) == d.series(1 * 3 + 2, 0));
  }

  TEST_CASE("response normalization fixes norm and sign") {
    VectorXd raw(3);
    raw << -1.0, -3.0, 2.0;
    double scale = 0.0;
    const Hrf h = Hrf::normalized(raw, &scale);
    CHECK(h.values.norm() == doctest::Approx(1.0));
    CHECK(h.values(1) > 0.0);
    CHECK(h.sign_flipped);
    CHECK(scale == doctest::Approx(-raw.norm()));
    CHECK((h.values * scale - raw).norm() < 1e-14);
    CHECK_THROWS_AS(Hrf::normalized(VectorXd::Zero(3)), InvalidArgument);
  }

  TEST_CASE("max-magnitude index takes the first of ties") {
    VectorXd v(4);
    v << 1, -3, 3, 2;
    CHECK(max_abs_index(v) == 1);
  }

  TEST_CASE("parameter validation") {
    MixtureParams m;
    m.p = 0.3;
    m.beta = VectorXd::Zero(2);
    m.b = MatrixXd::Zero(1, 2);
    m.h = Hrf::normalized(VectorXd::Ones(3));
    m.sigma_T = MatrixXd::Identity(3, 3);
    m.sigma_E = MatrixXd::Identity(2, 2);
    const Dims dims{3, 2, 2, 1};
    CHECK_NOTHROW(validate(m, dims));
    m.sigma_E *= 2.0;
    CHECK_THROWS_AS(validate(m, dims), InvalidArgument);
    CHECK_NOTHROW(validate(m, dims, ValidationOptions{.require_unit_trace_E = false}));
    m.sigma_E = MatrixXd::Identity(2, 2);
    m.p = 1.5;
    CHECK_THROWS_AS(validate(m, dims), InvalidArgument);
  }

  TEST_CASE("residuals") {
    Dataset d = tiny(3, 2, 2, 1);
    MixtureParams m;
    m.beta = VectorXd::Constant(2, 2.0);
    m.b = MatrixXd::Constant(1, 2, 0.5);
    m.h = Hrf::normalized(VectorXd::Ones(3));
    const MatrixXd r = residual_matrix(d, m, 1);
    for (int j = 0; j < 2; ++j)
      for (int t = 0; t < 3; ++t) {
        const int n = j * 3 + t;
        CHECK(r(t, j) == doctest::Approx(d.series(n, 1) - 2.0 * m.h.values(t) - 0.5 * d.design(n, 0)));
      }
    const VectorXd r2 = inactive_residual(d, m, 0);
    CHECK((r2 - (d.series.col(0) - 0.5 * d.design.col(0))).norm() < 1e-14);
  }
}
