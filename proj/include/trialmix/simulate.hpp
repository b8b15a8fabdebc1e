#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "trialmix/types.hpp"

namespace trialmix::simulate {

std::uint64_t splitmix64(std::uint64_t x);

/// Independent stream `stream` derived from `seed`.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);
  double uniform();  ///< in (0, 1]
  double normal();   ///< Box-Muller, the second variate is cached
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Everything needed to draw a dataset: geometry, covariates and the truth.
/// truth.beta and truth.b hold per-voxel values; beta is applied only to
/// voxels drawn active.
struct Scenario {
  Dims dims;
  MixtureParams truth;
  Acquisition acq;
  MatrixXd design;
  std::vector<Coord> coords;
};

struct SimTruth {
  MixtureParams params;  ///< beta_i = 0 for inactive voxels
  std::vector<int> z;    ///< 1 = active
  std::uint64_t seed = 0;
};

struct SimResult {
  Dataset data;
  SimTruth truth;
};

/// Draws Z_i ~ Bernoulli(p) and the noise, one stream per voxel.
SimResult generate(const Scenario& scenario, std::uint64_t seed);

struct SimConfig {
  int V = 2000;
  int T = 14;
  int E = 10;
  int q = 6;
  double p = 0.3;
  /// Expected whitened t-statistic of an active voxel with median beta.
  double snr = 4.5;
  double beta_log_sd = 0.25;
  double b_sd = 0.5;
  double covariate_step_sd = 0.1;
  double rho_T = 0.4;  ///< AR(1)-style correlation within an epoch
  double rho_E = 0.2;  ///< compound-symmetry correlation between epochs
  double sigma2 = 1.0;
  double tr_seconds = 2.0;
  double stimulus_interval = 28.25;
  double first_sample = 5.0 / 6.0;
  double hrf_delay = 0.0;  ///< true response = canonical shifted later by this many seconds
  int generative_model = 5;  ///< 1..5, selects which structure the truth has
};

/// Builds the geometry, covariates, truth covariances, h and per-voxel beta/b.
Scenario make_scenario(const SimConfig& config, std::uint64_t seed);

/// T=14, E=10, q=6, TR 2 s, stimuli every 28.25 s, samples at 5/6 + 2k s.
Scenario default_scenario(int V = 2000, std::uint64_t seed = 1);

/// Median beta giving the requested expected t-statistic.
double beta_for_snr(double snr, const MixtureParams& truth, int E);

}  // namespace trialmix::simulate
