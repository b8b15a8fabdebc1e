#pragma once

#include <random>

#include "support/oracles.hpp"
#include "trialmix/types.hpp"

namespace fixture {

using namespace trialmix;

struct Instance {
  Dataset data;
  MixtureParams params;
  Responsibilities resp;
};

/// Random small dataset with random (valid) parameters and responsibilities.
inline Instance random_instance(std::mt19937_64& rng, int T, int E, int V, int q) {
  Instance in;
  Dataset& d = in.data;
  d.dims = {T, E, V, q};
  d.series = oracle::random_matrix(T * E, V, rng, 1.5);
  d.design = oracle::random_matrix(T * E, q, rng);
  for (int c = 0; c < q; ++c) d.design.col(c).array() -= d.design.col(c).mean();
  for (int i = 0; i < V; ++i) d.coords.push_back({i, 0, 0});
  d.acq.grid_shape = {V, 1, 1};
  std::uniform_real_distribution<double> u(0.05, 0.95);
  MixtureParams& m = in.params;
  m.p = u(rng);
  m.beta = oracle::random_matrix(V, 1, rng);
  m.b = oracle::random_matrix(q, V, rng, 0.5);
  m.h = Hrf::normalized(oracle::random_matrix(T, 1, rng).cwiseAbs());
  m.sigma_T = oracle::random_spd(T, rng);
  m.sigma_E = oracle::random_spd(E, rng);
  m.sigma_E *= E / m.sigma_E.trace();
  m.sigma2 = 0.5 + u(rng);
  in.resp.p_i.resize(V);
  for (int i = 0; i < V; ++i) in.resp.p_i(i) = u(rng);
  return in;
}

inline double q_of(const Instance& in, const MixtureParams& m) {
  return oracle::dense_q(in.data, in.resp.p_i, m.p, m.beta, m.b, m.h.values, m.sigma_T, m.sigma_E, m.sigma2);
}

}  // namespace fixture
