#include <doctest.h>

#include <cmath>

#include "trialmix/em.hpp"
#include "trialmix/model_selection.hpp"
#include "trialmix/simulate.hpp"

using namespace trialmix;
using namespace trialmix::selection;

namespace {

simulate::SimResult sim_from(int model, std::uint64_t seed, double delay = 0.0) {
  simulate::SimConfig c;
  c.V = 200;
  c.T = 8;
  c.E = 5;
  c.q = 2;
  c.generative_model = model;
  c.hrf_delay = delay;
  return simulate::generate(simulate::make_scenario(c, seed), seed);
}

}  // namespace

TEST_SUITE("model_selection") {
  TEST_CASE("parameter counts") {
    const Dims d{14, 10, 10062, 6};
    CHECK(count_params(ModelSpec::from_id(1), d) == 70434);
    CHECK(count_params(ModelSpec::from_id(2), d) == 70447);
    CHECK(count_params(ModelSpec::from_id(3), d) == 80566);
    CHECK(count_params(ModelSpec::from_id(4), d) == 80616);
    CHECK(count_params(ModelSpec::from_id(5), d) == 80671);
    CHECK(count_params(ModelSpec::from_id(1), d, CountConvention::textbook) == 70435);
    CHECK(count_params(ModelSpec::from_id(5), d, CountConvention::textbook) == 80671 - 10062);
    CHECK_THROWS_AS(ModelSpec::from_id(6), InvalidArgument);
  }

  TEST_CASE("model flags") {
    CHECK_FALSE(ModelSpec::from_id(1).estimate_h);
    CHECK_FALSE(ModelSpec::from_id(2).mixture);
    CHECK(ModelSpec::from_id(3).structure == em::CovStructure::epoch_only);
    CHECK(ModelSpec::from_id(4).structure == em::CovStructure::time_only);
    CHECK(ModelSpec::from_id(5).structure == em::CovStructure::kronecker);
  }

  TEST_CASE("information criteria") {
    CHECK(aic(0.0, 0) == 0.0);
    CHECK(aic(-12348551.0, 70447) == 24837996.0);
    CHECK(std::abs(bic(-12348551.0, 70447, 10062.0 * 140.0) - 25694502.0) <= 5.0);
    CHECK_THROWS_AS(bic(0.0, 1, 0.5), InvalidArgument);
  }

  TEST_CASE("model 5 fit equals the plain fit") {
    const auto sim = sim_from(5, 2);
    const FitResult a = fit_model(sim.data, ModelSpec::from_id(5));
    const FitResult b = em::em_fit(sim.data, em::EmConfig{});
    CHECK(a.loglik_trace == b.loglik_trace);
  }

  TEST_CASE("model 1 keeps the canonical response") {
    const auto sim = sim_from(5, 3);
    const FitResult a = fit_model(sim.data, ModelSpec::from_id(1));
    CHECK(a.params.h.values == em::canonical_hrf(sim.data.acq.post_stimulus_times).values);
  }

  TEST_CASE("comparison flags one minimum") {
    const auto sim = sim_from(5, 4);
    const Comparison c = compare_models(sim.data);
    REQUIRE(c.rows.size() == 5u);
    int aic_flags = 0;
    int bic_flags = 0;
    for (const auto& r : c.rows) {
      aic_flags += r.min_aic;
      bic_flags += r.min_bic;
      CHECK(r.aic == 2.0 * r.P - 2.0 * r.loglik);
      CHECK(r.bic == r.P * std::log(r.n) - 2.0 * r.loglik);
    }
    CHECK(aic_flags == 1);
    CHECK(bic_flags == 1);
    CHECK(c.rows[4].loglik >= c.rows[2].loglik - 1e-3);
  }

  TEST_CASE("a shifted response favors model 2 over model 1") {
    const auto sim = sim_from(2, 5, 2.0);
    CompareConfig cfg;
    cfg.models = {1, 2};
    const Comparison c = compare_models(sim.data, cfg);
    CHECK(c.rows[1].loglik > c.rows[0].loglik);
    CHECK(c.rows[1].aic < c.rows[0].aic);
  }
}
