#include "trialmix/simulate.hpp"

#include <cmath>
#include <numbers>

#include "trialmix/em.hpp"
#include "trialmix/linalg.hpp"
#include "trialmix/parallel.hpp"

namespace trialmix::simulate {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kVoxelStream = 1;
constexpr std::uint64_t kScenarioStream = 0;

MatrixXd ar1(int n, double rho) {
  MatrixXd m(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) m(a, b) = std::pow(rho, std::abs(a - b));
  return m;
}

MatrixXd compound(int n, double rho) {
  MatrixXd m = MatrixXd::Constant(n, n, rho);
  m.diagonal().setOnes();
  return m;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream * kGolden + 0x5851F42D4C957F2DULL))) {}

double Rng::uniform() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

SimResult generate(const Scenario& sc, std::uint64_t seed) {
  const Dims& d = sc.dims;
  validate(d);
  validate(sc.truth, d, ValidationOptions{.require_unit_trace_E = false});
  if (sc.truth.beta.size() != d.V || sc.truth.b.cols() != d.V) {
    throw DimensionError("scenario needs per-voxel beta and b");
  }
  if (sc.design.rows() != d.n() || sc.design.cols() != d.q) throw DimensionError("design must be N x q");
  const MatrixXd L_T = linalg::sqrt_psd(sc.truth.sigma_T);
  const MatrixXd L_E = linalg::sqrt_psd(sc.truth.sigma_E);
  const double sigma = std::sqrt(sc.truth.sigma2);

  SimResult out;
  out.data.dims = d;
  out.data.series.resize(d.n(), d.V);
  out.data.design = sc.design;
  out.data.coords = sc.coords;
  out.data.acq = sc.acq;
  out.truth.params = sc.truth;
  out.truth.z.assign(static_cast<std::size_t>(d.V), 0);
  out.truth.seed = seed;

  std::vector<int> z(static_cast<std::size_t>(d.V));
  parallel::for_each_index(d.V, [&](int i) {
    Rng rng(seed, kVoxelStream + static_cast<std::uint64_t>(i));
    const bool active = rng.uniform() <= sc.truth.p && sc.truth.p > 0.0;
    z[static_cast<std::size_t>(i)] = active ? 1 : 0;
    MatrixXd g(d.T, d.E);
    for (Eigen::Index k = 0; k < g.size(); ++k) g.data()[k] = rng.normal();
    auto y = out.data.series.col(i);
    if (d.q > 0) {
      y = sc.design * sc.truth.b.col(i);
    } else {
      y.setZero();
    }
    if (active) {
      const MatrixXd u = L_T * g * L_E.transpose();
      for (int j = 0; j < d.E; ++j) {
        y.segment(static_cast<Eigen::Index>(j) * d.T, d.T) +=
            sc.truth.beta(i) * sc.truth.h.values + u.col(j);
      }
    } else {
      y += sigma * Eigen::Map<const VectorXd>(g.data(), g.size());
    }
  });
  for (int i = 0; i < d.V; ++i) {
    out.truth.z[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)];
    if (z[static_cast<std::size_t>(i)] == 0) out.truth.params.beta(i) = 0.0;
  }
  return out;
}

double beta_for_snr(double snr, const MixtureParams& truth, int E) {
  const MatrixXd inv_T = linalg::inverse_spd(truth.sigma_T);
  const MatrixXd inv_E = linalg::inverse_spd(truth.sigma_E);
  const double info = inv_E.sum() * truth.h.values.dot(inv_T * truth.h.values);
  (void)E;
  return snr / std::sqrt(info);
}

Scenario make_scenario(const SimConfig& c, std::uint64_t seed) {
  if (c.V < 1 || c.T < 2 || c.E < 1 || c.q < 0) throw InvalidArgument("invalid simulation dimensions");
  if (!(c.p >= 0.0 && c.p <= 1.0)) throw InvalidArgument("p must lie in [0, 1]");
  if (c.generative_model < 1 || c.generative_model > 5) throw InvalidArgument("generative_model must be 1..5");
  Scenario sc;
  sc.dims = Dims{c.T, c.E, c.V, c.q};
  const int N = sc.dims.n();

  sc.acq.tr_seconds = c.tr_seconds;
  sc.acq.slice_count = 1;
  for (int j = 0; j < c.E; ++j) sc.acq.stimulus_times.push_back(c.stimulus_interval * j);
  for (int k = 0; k < c.T; ++k) sc.acq.post_stimulus_times.push_back(c.first_sample + c.tr_seconds * k);
  const int side = std::max(1, static_cast<int>(std::ceil(std::sqrt(c.V / 4.0))));
  const int slices = (c.V + side * side - 1) / (side * side);
  sc.acq.grid_shape = {side, side, slices};
  sc.acq.voxel_size_mm = {1.0, 1.0, 1.0};
  for (int i = 0; i < c.V; ++i) sc.coords.push_back({i % side, (i / side) % side, i / (side * side)});

  MixtureParams& m = sc.truth;
  const int model = c.generative_model;
  std::vector<double> shifted;
  for (double t : sc.acq.post_stimulus_times) shifted.push_back(std::max(0.0, t - c.hrf_delay));
  VectorXd raw(c.T);
  for (int k = 0; k < c.T; ++k) raw(k) = em::double_gamma(shifted[static_cast<std::size_t>(k)]);
  m.h = model == 1 ? em::canonical_hrf(sc.acq.post_stimulus_times) : Hrf::normalized(raw);
  m.p = model <= 2 ? 1.0 : c.p;
  m.sigma_T = (model == 4 || model == 5) ? ar1(c.T, c.rho_T) : MatrixXd::Identity(c.T, c.T);
  m.sigma_E = (model == 3 || model == 5) ? compound(c.E, c.rho_E) : MatrixXd::Identity(c.E, c.E);
  m.sigma2 = c.sigma2;

  Rng rng(seed, kScenarioStream);
  sc.design.resize(N, c.q);
  for (int col = 0; col < c.q; ++col) {
    double level = 0.0;
    for (int n = 0; n < N; ++n) {
      level += c.covariate_step_sd * rng.normal();
      sc.design(n, col) = level;
    }
    sc.design.col(col).array() -= sc.design.col(col).mean();
  }
  const double beta0 = beta_for_snr(c.snr, m, c.E);
  m.beta.resize(c.V);
  m.b.resize(c.q, c.V);
  for (int i = 0; i < c.V; ++i) {
    m.beta(i) = beta0 * std::exp(c.beta_log_sd * rng.normal());
    for (int col = 0; col < c.q; ++col) m.b(col, i) = c.b_sd * rng.normal();
  }
  return sc;
}

Scenario default_scenario(int V, std::uint64_t seed) {
  SimConfig c;
  c.V = V;
  return make_scenario(c, seed);
}

}  // namespace trialmix::simulate
