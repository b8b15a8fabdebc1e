#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "trialmix/em.hpp"
#include "trialmix/inference.hpp"
#include "trialmix/io.hpp"
#include "trialmix/model_selection.hpp"
#include "trialmix/preprocess.hpp"
#include "trialmix/simulate.hpp"
#include "trialmix/variability.hpp"

namespace trialmix::cli {

namespace fs = std::filesystem;

/// Bad flags, unknown config keys or missing inputs (exit code 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::uint64_t seed = 1;
  simulate::SimConfig simulate;
  preprocess::PreprocConfig preprocess;
  em::EmConfig em;
  inference::InferenceConfig inference;
  variability::PcConfig pcs;
  int fit_model = 5;
  std::vector<int> models{1, 2, 3, 4, 5};
  selection::CountConvention convention = selection::CountConvention::table;
  std::optional<double> bic_n;
  bool verbose = false;
};

/// Parses JSON text; unknown keys and wrong types raise UsageError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const fs::path& file);
/// The defaults as JSON.
std::string default_config_json();

void cmd_simulate(const RunConfig& cfg, const fs::path& out);
void cmd_preprocess(const RunConfig& cfg, const fs::path& in, const fs::path& out);
io::FitRecord cmd_fit(const RunConfig& cfg, const fs::path& in, const fs::path& out);
ActivationMap cmd_infer(const RunConfig& cfg, const fs::path& in, const fs::path& fit, const fs::path& out);
PcAnalysis cmd_pcs(const RunConfig& cfg, const fs::path& in, const fs::path& fit, const fs::path& activation,
                   const fs::path& out);
selection::Comparison cmd_compare(const RunConfig& cfg, const fs::path& in, const fs::path& out);
/// Full pipeline; simulates into `out/data` first when `in` is empty.
void cmd_report(const RunConfig& cfg, const fs::path& in, const fs::path& out);

/// Command-line entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace trialmix::cli
