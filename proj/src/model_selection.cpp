#include "trialmix/model_selection.hpp"

#include <algorithm>
#include <cmath>

namespace trialmix::selection {

ModelSpec ModelSpec::from_id(int id) {
  using em::CovStructure;
  switch (id) {
    case 1: return {1, false, false, CovStructure::spherical};
    case 2: return {2, true, false, CovStructure::spherical};
    case 3: return {3, true, true, CovStructure::epoch_only};
    case 4: return {4, true, true, CovStructure::time_only};
    case 5: return {5, true, true, CovStructure::kronecker};
    default: throw InvalidArgument("model id must be 1..5, got " + std::to_string(id));
  }
}

std::string ModelSpec::description() const {
  switch (id) {
    case 1: return "all active, canonical h, s^2 I";
    case 2: return "all active, estimated h, s^2 I";
    case 3: return "mixture, sigma_E (x) I";
    case 4: return "mixture, I (x) sigma_T";
    case 5: return "mixture, sigma_E (x) sigma_T";
    default: return "unknown";
  }
}

long long count_params(const ModelSpec& spec, const Dims& dims, CountConvention convention) {
  const long long V = dims.V;
  const long long T = dims.T;
  const long long E = dims.E;
  const long long q = dims.q;
  long long P = (1 + q) * V;
  if (spec.estimate_h) P += T - 1;
  const bool free_E = spec.structure == em::CovStructure::kronecker ||
                      spec.structure == em::CovStructure::epoch_only;
  const bool free_T = spec.structure == em::CovStructure::kronecker ||
                      spec.structure == em::CovStructure::time_only;
  if (spec.mixture) {
    if (convention == CountConvention::table) P += V + 2;
    else P += 2;
    if (free_E) P += E * (E + 1) / 2;
    if (free_T) P += T * (T + 1) / 2;
  } else if (convention == CountConvention::textbook) {
    P += 1;
  }
  return P;
}

double aic(double loglik, long long P) { return 2.0 * static_cast<double>(P) - 2.0 * loglik; }

double bic(double loglik, long long P, double n) {
  if (!(n >= 1.0)) throw InvalidArgument("observation count must be at least 1");
  return static_cast<double>(P) * std::log(n) - 2.0 * loglik;
}

FitResult fit_model(const Dataset& data, const ModelSpec& spec, const em::EmConfig& base) {
  em::EmConfig cfg = base;
  cfg.structure = spec.structure;
  cfg.estimate_h = spec.estimate_h;
  cfg.mixture = spec.mixture;
  return em::em_fit(data, cfg);
}

Comparison compare_models(const Dataset& data, const CompareConfig& config) {
  std::vector<int> ids = config.models;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const double n = config.n.value_or(static_cast<double>(data.dims.V) * data.dims.n());
  Comparison out;
  for (int id : ids) {
    const ModelSpec spec = ModelSpec::from_id(id);
    FitResult fit = fit_model(data, spec, config.em);
    ComparisonRow row;
    row.model = id;
    row.P = count_params(spec, data.dims, config.convention);
    row.loglik = fit.loglik_trace.back();
    row.aic = aic(row.loglik, row.P);
    row.bic = bic(row.loglik, row.P, n);
    row.n = n;
    row.iterations = fit.iterations;
    row.converged = fit.converged;
    out.rows.push_back(row);
    out.fits.push_back(std::move(fit));
  }
  if (!out.rows.empty()) {
    auto by = [&](auto key) {
      return std::min_element(out.rows.begin(), out.rows.end(),
                              [&](const ComparisonRow& a, const ComparisonRow& b) { return key(a) < key(b); });
    };
    by([](const ComparisonRow& r) { return r.aic; })->min_aic = true;
    by([](const ComparisonRow& r) { return r.bic; })->min_bic = true;
  }
  return out;
}

}  // namespace trialmix::selection
