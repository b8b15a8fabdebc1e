#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trialmix/em.hpp"

namespace trialmix::selection {

struct ModelSpec {
  int id = 5;
  bool estimate_h = true;
  bool mixture = true;
  em::CovStructure structure = em::CovStructure::kronecker;

  /// Flags for models 1..5; throws InvalidArgument otherwise.
  static ModelSpec from_id(int id);
  std::string description() const;
};

enum class CountConvention {
  table,     ///< counts class indicators, omits sigma2 for all-active models
  textbook,  ///< no indicators; sigma2 counted whenever a noise variance is fitted
};

long long count_params(const ModelSpec& spec, const Dims& dims,
                       CountConvention convention = CountConvention::table);

double aic(double loglik, long long P);
double bic(double loglik, long long P, double n);

/// Runs the fitter for the model; `base` supplies tolerances and hooks.
FitResult fit_model(const Dataset& data, const ModelSpec& spec, const em::EmConfig& base = {});

struct ComparisonRow {
  int model = 0;
  long long P = 0;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  double n = 0.0;
  int iterations = 0;
  bool converged = false;
  bool min_aic = false;
  bool min_bic = false;
};

struct CompareConfig {
  std::vector<int> models{1, 2, 3, 4, 5};
  CountConvention convention = CountConvention::table;
  std::optional<double> n;  ///< default V * N
  em::EmConfig em;
};

struct Comparison {
  std::vector<ComparisonRow> rows;  ///< sorted by model id
  std::vector<FitResult> fits;      ///< parallel to rows
};

Comparison compare_models(const Dataset& data, const CompareConfig& config = {});

}  // namespace trialmix::selection
