#include "trialmix/preprocess.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "trialmix/kernels.hpp"

namespace trialmix::preprocess {
namespace {

std::vector<double> gaussian_kernel(double sigma_vox) {
  const int radius = static_cast<int>(std::ceil(4.0 * sigma_vox));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int d = -radius; d <= radius; ++d) {
    const double w = std::exp(-0.5 * (d * d) / (sigma_vox * sigma_vox));
    k[static_cast<std::size_t>(d + radius)] = w;
    total += w;
  }
  for (double& w : k) w /= total;
  return k;
}

// Half-sample symmetric reflection into [0, n): ... 1 0 | 0 1 ... n-1 | n-1 n-2 ...
int reflect(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

}  // namespace

int dct_order(int n, double tr_seconds, double cutoff_seconds) {
  if (n < 2) throw InvalidArgument("high-pass filter needs at least two samples");
  if (!(tr_seconds > 0.0)) throw InvalidArgument("TR must be positive");
  if (!(cutoff_seconds > 2.0 * tr_seconds)) {
    throw InvalidArgument("high-pass cutoff must exceed 2*TR");
  }
  const int k = static_cast<int>(std::floor(2.0 * n * tr_seconds / cutoff_seconds));
  if (k >= n) {
    std::ostringstream os;
    os << "high-pass cutoff " << cutoff_seconds << " s removes " << k << " of " << n
       << " basis functions";
    throw InvalidArgument(os.str());
  }
  return k;
}

VectorXd dct_highpass(const VectorXd& series, double tr_seconds, double cutoff_seconds) {
  const int n = static_cast<int>(series.size());
  const int order = dct_order(n, tr_seconds, cutoff_seconds);
  VectorXd out = series;
  VectorXd basis(n);
  // The DCT-II columns are mutually orthogonal with squared norm N/2, so the
  // least-squares projection decouples per column.
  for (int k = 1; k <= order; ++k) {
    for (int t = 0; t < n; ++t) {
      basis(t) = std::cos(std::numbers::pi * k * (2.0 * t + 1.0) / (2.0 * n));
    }
    const double coef = kernels::dot({out.data(), out.size()}, {basis.data(), basis.size()}) /
                        kernels::sum_squares({basis.data(), basis.size()});
    kernels::axpy(-coef, {basis.data(), basis.size()}, {out.data(), out.size()});
  }
  return out;
}

MatrixXd dct_highpass_columns(const MatrixXd& columns, double tr_seconds, double cutoff_seconds) {
  MatrixXd out(columns.rows(), columns.cols());
  for (Eigen::Index c = 0; c < columns.cols(); ++c) {
    out.col(c) = dct_highpass(columns.col(c), tr_seconds, cutoff_seconds);
  }
  return out;
}

VectorXd mean_center(const VectorXd& series) {
  if (series.size() == 0) throw InvalidArgument("cannot center an empty series");
  return series.array() - series.mean();
}

MatrixXd center_design(const MatrixXd& design) {
  if (design.rows() == 0) throw InvalidArgument("cannot center an empty design");
  MatrixXd out = design;
  for (Eigen::Index c = 0; c < out.cols(); ++c) out.col(c).array() -= out.col(c).mean();
  return out;
}

VectorXd trial_time_shift(const VectorXd& series, std::span<const double> shifts, int T) {
  if (T < 1 || series.size() % T != 0) throw DimensionError("series length is not a multiple of T");
  const int E = static_cast<int>(series.size() / T);
  if (static_cast<int>(shifts.size()) != E) throw DimensionError("one shift per epoch is required");
  VectorXd out = series;
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(T));
  const double two_pi = 2.0 * std::numbers::pi;
  for (int j = 0; j < E; ++j) {
    const double shift = shifts[static_cast<std::size_t>(j)];
    if (!std::isfinite(shift)) throw InvalidArgument("non-finite time shift");
    if (shift == 0.0) continue;
    const double* x = series.data() + static_cast<std::ptrdiff_t>(j) * T;
    for (int f = 0; f < T; ++f) {
      std::complex<double> acc{0.0, 0.0};
      for (int t = 0; t < T; ++t) acc += x[t] * std::polar(1.0, -two_pi * f * t / T);
      const bool nyquist = (T % 2 == 0) && (2 * f == T);
      const int signed_f = (2 * f < T) ? f : f - T;
      spec[static_cast<std::size_t>(f)] =
          nyquist ? acc : acc * std::polar(1.0, -two_pi * signed_f * shift / T);
    }
    double* y = out.data() + static_cast<std::ptrdiff_t>(j) * T;
    for (int t = 0; t < T; ++t) {
      double acc = 0.0;
      for (int f = 0; f < T; ++f) {
        acc += (spec[static_cast<std::size_t>(f)] * std::polar(1.0, two_pi * f * t / T)).real();
      }
      y[t] = acc / T;
    }
  }
  return out;
}

std::vector<double> epoch_shifts(const Acquisition& acq, int T) {
  (void)T;
  std::vector<double> shifts(acq.stimulus_times.size(), 0.0);
  if (acq.stimulus_times.empty()) return shifts;
  const double s0 = acq.stimulus_times.front();
  for (std::size_t j = 0; j < shifts.size(); ++j) {
    // Epoch j's samples sit (s_j - s_0) mod TR earlier relative to its onset.
    double d = -(acq.stimulus_times[j] - s0) / acq.tr_seconds;
    d -= std::floor(d + 0.5);
    shifts[j] = d;
  }
  return shifts;
}

Volume gaussian_smooth_3d(const Volume& volume, double fwhm_mm,
                          const std::array<double, 3>& voxel_size_mm, const Mask* mask) {
  if (!(fwhm_mm >= 0.0)) throw InvalidArgument("FWHM must be non-negative");
  if (mask != nullptr && mask->shape != volume.shape) {
    throw DimensionError("mask shape does not match volume shape");
  }
  if (fwhm_mm == 0.0) return volume;
  const double fwhm_to_sigma = 1.0 / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  Volume cur = volume;
  const auto& shape = volume.shape;
  for (int axis = 0; axis < 3; ++axis) {
    if (!(voxel_size_mm[static_cast<std::size_t>(axis)] > 0.0)) {
      throw InvalidArgument("voxel size must be positive");
    }
    const double sigma = fwhm_mm * fwhm_to_sigma / voxel_size_mm[static_cast<std::size_t>(axis)];
    const auto kernel = gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);
    const int len = shape[static_cast<std::size_t>(axis)];
    Volume next = cur;
    std::array<int, 3> other{};
    int a1 = (axis + 1) % 3;
    int a2 = (axis + 2) % 3;
    for (int u = 0; u < shape[static_cast<std::size_t>(a1)]; ++u) {
      for (int v = 0; v < shape[static_cast<std::size_t>(a2)]; ++v) {
        auto idx = [&](int i) {
          other[static_cast<std::size_t>(axis)] = i;
          other[static_cast<std::size_t>(a1)] = u;
          other[static_cast<std::size_t>(a2)] = v;
          return cur.index(other[0], other[1], other[2]);
        };
        for (int i = 0; i < len; ++i) {
          const std::size_t out_idx = idx(i);
          if (mask != nullptr && mask->inside[out_idx] == 0) continue;
          double num = 0.0;
          double den = 0.0;
          for (int d = -radius; d <= radius; ++d) {
            const std::size_t src = idx(reflect(i + d, len));
            if (mask != nullptr && mask->inside[src] == 0) continue;
            const double w = kernel[static_cast<std::size_t>(d + radius)];
            num += w * cur.values[src];
            den += w;
          }
          if (mask == nullptr) {
            next.values[out_idx] = num;
          } else if (den > 0.0) {
            next.values[out_idx] = num / den;
          }
        }
      }
    }
    cur = std::move(next);
  }
  return cur;
}

Dataset apply_mask(const std::vector<Volume>& volumes, const Mask& mask, const MatrixXd& design,
                   const Acquisition& acq, int T, int E) {
  const int n = T * E;
  if (static_cast<int>(volumes.size()) != n) throw DimensionError("expected N = T*E volumes");
  for (const auto& v : volumes) {
    if (v.shape != mask.shape) throw DimensionError("mask shape does not match volume shape");
  }
  Dataset out;
  for (int z = 0; z < mask.shape[2]; ++z)
    for (int y = 0; y < mask.shape[1]; ++y)
      for (int x = 0; x < mask.shape[0]; ++x)
        if (mask.at(x, y, z)) out.coords.push_back({x, y, z});
  if (out.coords.empty()) throw InvalidArgument("mask selects no voxels (empty dataset)");
  const int V = static_cast<int>(out.coords.size());
  out.dims = Dims{T, E, V, static_cast<int>(design.cols())};
  out.series.resize(n, V);
  for (int i = 0; i < V; ++i) {
    const auto& c = out.coords[static_cast<std::size_t>(i)];
    const std::size_t idx = mask.index(c.x, c.y, c.z);
    for (int t = 0; t < n; ++t) out.series(t, i) = volumes[static_cast<std::size_t>(t)].values[idx];
  }
  out.design = design;
  out.acq = acq;
  out.acq.grid_shape = mask.shape;
  return out;
}

Dataset run(const Dataset& data, const PreprocConfig& config) {
  Dataset out = data;
  const int T = data.dims.T;
  const int n = data.dims.n();
  if (config.smooth && config.fwhm_mm > 0.0) {
    Mask mask(data.acq.grid_shape, false);
    for (const auto& c : data.coords) mask.set(c.x, c.y, c.z, true);
    Volume vol(data.acq.grid_shape);
    for (int t = 0; t < n; ++t) {
      for (int i = 0; i < data.dims.V; ++i) {
        const auto& c = data.coords[static_cast<std::size_t>(i)];
        vol.at(c.x, c.y, c.z) = data.series(t, i);
      }
      const Volume sm = gaussian_smooth_3d(vol, config.fwhm_mm, data.acq.voxel_size_mm, &mask);
      for (int i = 0; i < data.dims.V; ++i) {
        const auto& c = data.coords[static_cast<std::size_t>(i)];
        out.series(t, i) = sm.at(c.x, c.y, c.z);
      }
    }
  }
  if (config.time_shift && static_cast<int>(data.acq.stimulus_times.size()) == data.dims.E) {
    const auto shifts = epoch_shifts(data.acq, T);
    for (int i = 0; i < data.dims.V; ++i) {
      out.series.col(i) = trial_time_shift(out.series.col(i), shifts, T);
    }
  }
  if (config.highpass) {
    for (int i = 0; i < data.dims.V; ++i) {
      out.series.col(i) = dct_highpass(out.series.col(i), data.acq.tr_seconds,
                                       config.dct_cutoff_seconds);
    }
    out.design = dct_highpass_columns(out.design, data.acq.tr_seconds, config.dct_cutoff_seconds);
  }
  if (config.center) {
    for (int i = 0; i < data.dims.V; ++i) out.series.col(i) = mean_center(out.series.col(i));
  }
  out.design = center_design(out.design);
  return out;
}

}  // namespace trialmix::preprocess
