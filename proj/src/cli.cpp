#include "trialmix/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "trialmix/parallel.hpp"

namespace trialmix::cli {

using nlohmann::json;

namespace {

using Setter = std::function<void(const json&)>;

void apply(const json& obj, const std::string& where, const std::map<std::string, Setter>& fields) {
  if (!obj.is_object()) throw UsageError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw UsageError("config: unknown key '" + where + (where.empty() ? "" : ".") + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw UsageError("config: bad value for '" + key + "': " + e.what());
    }
  }
}

template <class T>
Setter set(T& target) {
  return [&target](const json& v) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw UsageError("config: expected a boolean");
    } else if constexpr (std::is_arithmetic_v<T>) {
      if (!v.is_number()) throw UsageError("config: expected a number");
    }
    target = v.get<T>();
  };
}

json config_json(const RunConfig& c) {
  const auto& s = c.simulate;
  const auto& p = c.preprocess;
  const auto& e = c.em;
  const auto& i = c.inference;
  return json{
      {"seed", c.seed},
      {"simulate",
       {{"V", s.V}, {"T", s.T}, {"E", s.E}, {"q", s.q}, {"p", s.p}, {"snr", s.snr},
        {"beta_log_sd", s.beta_log_sd}, {"b_sd", s.b_sd}, {"covariate_step_sd", s.covariate_step_sd},
        {"rho_T", s.rho_T}, {"rho_E", s.rho_E}, {"sigma2", s.sigma2}, {"tr_seconds", s.tr_seconds},
        {"stimulus_interval", s.stimulus_interval}, {"first_sample", s.first_sample}, {"hrf_delay", s.hrf_delay},
        {"generative_model", s.generative_model}}},
      {"preprocess",
       {{"dct_cutoff_seconds", p.dct_cutoff_seconds}, {"fwhm_mm", p.fwhm_mm}, {"smooth", p.smooth},
        {"time_shift", p.time_shift}, {"highpass", p.highpass}, {"center", p.center}}},
      {"em",
       {{"tol", e.tol}, {"max_iter", e.max_iter}, {"inner_sweeps", e.inner_sweeps},
        {"flipflop_sweeps", e.flipflop_sweeps}, {"sigma2_floor", e.sigma2_floor},
        {"init_max_iter", e.init_max_iter}, {"init_alpha", e.init_alpha}}},
      {"inference",
       {{"q", i.q}, {"screen_alpha", i.screen_alpha ? json(*i.screen_alpha) : json(nullptr)},
        {"min_cluster_size", i.min_cluster_size}, {"kmeans", i.kmeans}, {"kmeans_k", i.kmeans_k}}},
      {"pcs", {{"K", c.pcs.K}, {"interaction", c.pcs.interaction}}},
      {"fit_model", c.fit_model},
      {"models", c.models},
      {"count_convention", c.convention == selection::CountConvention::table ? "table" : "textbook"},
      {"bic_n", c.bic_n ? json(*c.bic_n) : json(nullptr)},
  };
}

void check(const RunConfig& c) {
  auto bad = [](const std::string& m) { throw UsageError("config: " + m); };
  if (c.fit_model < 1 || c.fit_model > 5) bad("fit_model must be 1..5");
  for (int m : c.models)
    if (m < 1 || m > 5) bad("models entries must be 1..5");
  if (c.models.empty()) bad("models must not be empty");
  if (!(c.em.tol > 0.0) || c.em.max_iter < 1) bad("em.tol must be positive and em.max_iter >= 1");
  if (!(c.inference.q > 0.0 && c.inference.q < 1.0)) bad("inference.q must lie in (0, 1)");
  if (c.pcs.K < 1) bad("pcs.K must be >= 1");
  if (c.simulate.V < 1 || c.simulate.T < 2 || c.simulate.E < 1 || c.simulate.q < 0) bad("invalid simulate dims");
}

void write_text(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file);
  out << text;
}

em::EmConfig em_config(const RunConfig& cfg) {
  em::EmConfig e = cfg.em;
  if (cfg.verbose) {
    e.on_iteration = [](const em::IterationLog& log) {
      std::cerr << json{{"event", "iteration"}, {"iteration", log.iteration}, {"loglik", log.loglik},
                        {"change", log.change}, {"p", log.p}}
                       .dump()
                << '\n';
    };
  }
  return e;
}

Dataset load_bundle(const fs::path& in) {
  if (in.empty()) throw UsageError("missing input bundle (--in)");
  if (!fs::exists(in / "header.json")) throw UsageError("input bundle not found: " + in.string());
  return io::read_dataset(in);
}

io::FitRecord load_fit(const fs::path& file, const Dataset& data) {
  if (file.empty()) throw UsageError("missing fit file (--fit)");
  if (!fs::exists(file)) throw UsageError("fit file not found: " + file.string());
  io::FitRecord r = io::read_fit(file);
  if (r.fit.params.beta.size() != data.dims.V || r.fit.params.h.size() != data.dims.T ||
      r.fit.params.b.rows() != data.dims.q) {
    throw UsageError("fit file does not match the dataset dimensions");
  }
  return r;
}

double finite_or(double v, double cap) {
  if (std::isnan(v)) return 0.0;
  return std::clamp(v, -cap, cap);
}

void write_fitted_curves(const Dataset& data, const MixtureParams& params, const PcAnalysis& pcs,
                         const fs::path& out) {
  const int T = data.dims.T;
  const int E = data.dims.E;
  const auto& times = data.acq.post_stimulus_times;
  std::ofstream fitted(out / "fitted_responses.csv");
  fitted << "cluster,event";
  for (int t = 0; t < T; ++t) fitted << ",t" << t + 1;
  fitted << '\n';
  std::ofstream dense(out / "fitted_curves.csv");
  dense << "cluster,event,time,value\n";
  for (int c : pcs.clusters) {
    std::vector<io::SvgSeries> lines;
    for (int j = 1; j <= E; ++j) {
      const VectorXd y = variability::fitted_response(params.h, pcs, c, j);
      fitted << c << ',' << j;
      for (int t = 0; t < T; ++t) fitted << ',' << io::format_double(y(t));
      fitted << '\n';
      if (static_cast<int>(times.size()) == T && T >= 4) {
        const auto curve = variability::spline_interp(times, std::span<const double>(y.data(), T), 100);
        for (std::size_t k = 0; k < curve.t.size(); ++k) {
          dense << c << ',' << j << ',' << io::format_double(curve.t[k]) << ',' << io::format_double(curve.y[k])
                << '\n';
        }
        lines.push_back({"event " + std::to_string(j), curve.t, curve.y});
      }
    }
    if (!lines.empty()) {
      io::write_curves_svg(lines, "Fitted responses, cluster " + std::to_string(c),
                           out / ("fitted_cluster" + std::to_string(c) + ".svg"));
    }
  }

  std::ofstream effects(out / "pc_effects.csv");
  effects << "component,sign";
  for (int t = 0; t < T; ++t) effects << ",t" << t + 1;
  effects << '\n';
  std::vector<io::SvgSeries> lines;
  std::vector<double> x(times.begin(), times.end());
  if (static_cast<int>(x.size()) != T) {
    x.clear();
    for (int t = 0; t < T; ++t) x.push_back(t);
  }
  for (int k = 0; k < pcs.K; ++k) {
    const auto [plus, minus] = variability::pc_effect_curves(params.h, pcs.time, k);
    for (const auto& [sign, v] : {std::pair{"+", plus}, std::pair{"-", minus}}) {
      effects << k + 1 << ',' << sign;
      for (int t = 0; t < T; ++t) effects << ',' << io::format_double(v(t));
      effects << '\n';
      lines.push_back({"PC" + std::to_string(k + 1) + sign, x, std::vector<double>(v.data(), v.data() + T)});
    }
  }
  io::write_curves_svg(lines, "Effect of each principal component", out / "pc_effects.svg");
}

std::string recovery_summary(const Dataset& data, const MixtureParams& params, const Responsibilities& resp,
                             const simulate::SimTruth& truth) {
  std::ostringstream os;
  const double corr = std::abs(params.h.values.dot(truth.params.h.values));
  int correct = 0;
  int active = 0;
  for (int i = 0; i < data.dims.V; ++i) {
    const bool hat = resp.p_i(i) >= 0.5;
    correct += hat == (truth.z[static_cast<std::size_t>(i)] == 1);
    active += truth.z[static_cast<std::size_t>(i)];
  }
  os << std::setprecision(6);
  os << "| |corr(h, h_true)| | " << corr << " |\n";
  os << "| classification accuracy | " << static_cast<double>(correct) / data.dims.V << " |\n";
  os << "| p (fitted / true fraction) | " << params.p << " / " << static_cast<double>(active) / data.dims.V
     << " |\n";
  return os.str();
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError("config: malformed JSON at byte " + std::to_string(e.byte));
  }
  RunConfig c;
  auto& s = c.simulate;
  auto& p = c.preprocess;
  auto& e = c.em;
  auto& inf = c.inference;
  apply(j, "",
        {{"seed", set(c.seed)},
         {"simulate",
          [&](const json& v) {
            apply(v, "simulate",
                  {{"V", set(s.V)}, {"T", set(s.T)}, {"E", set(s.E)}, {"q", set(s.q)}, {"p", set(s.p)},
                   {"snr", set(s.snr)}, {"beta_log_sd", set(s.beta_log_sd)}, {"b_sd", set(s.b_sd)},
                   {"covariate_step_sd", set(s.covariate_step_sd)}, {"rho_T", set(s.rho_T)},
                   {"rho_E", set(s.rho_E)}, {"sigma2", set(s.sigma2)}, {"tr_seconds", set(s.tr_seconds)},
                   {"stimulus_interval", set(s.stimulus_interval)}, {"first_sample", set(s.first_sample)},
                   {"hrf_delay", set(s.hrf_delay)}, {"generative_model", set(s.generative_model)}});
          }},
         {"preprocess",
          [&](const json& v) {
            apply(v, "preprocess",
                  {{"dct_cutoff_seconds", set(p.dct_cutoff_seconds)}, {"fwhm_mm", set(p.fwhm_mm)},
                   {"smooth", set(p.smooth)}, {"time_shift", set(p.time_shift)}, {"highpass", set(p.highpass)},
                   {"center", set(p.center)}});
          }},
         {"em",
          [&](const json& v) {
            apply(v, "em",
                  {{"tol", set(e.tol)}, {"max_iter", set(e.max_iter)}, {"inner_sweeps", set(e.inner_sweeps)},
                   {"flipflop_sweeps", set(e.flipflop_sweeps)}, {"sigma2_floor", set(e.sigma2_floor)},
                   {"init_max_iter", set(e.init_max_iter)}, {"init_alpha", set(e.init_alpha)}});
          }},
         {"inference",
          [&](const json& v) {
            apply(v, "inference",
                  {{"q", set(inf.q)},
                   {"screen_alpha",
                    [&](const json& a) {
                      if (a.is_null()) inf.screen_alpha.reset();
                      else if (a.is_number()) inf.screen_alpha = a.get<double>();
                      else throw UsageError("config: screen_alpha must be a number or null");
                    }},
                   {"min_cluster_size", set(inf.min_cluster_size)}, {"kmeans", set(inf.kmeans)},
                   {"kmeans_k", set(inf.kmeans_k)}});
          }},
         {"pcs",
          [&](const json& v) { apply(v, "pcs", {{"K", set(c.pcs.K)}, {"interaction", set(c.pcs.interaction)}}); }},
         {"fit_model", set(c.fit_model)},
         {"models", [&](const json& v) { c.models = v.get<std::vector<int>>(); }},
         {"count_convention",
          [&](const json& v) {
            const auto name = v.get<std::string>();
            if (name == "table") c.convention = selection::CountConvention::table;
            else if (name == "textbook") c.convention = selection::CountConvention::textbook;
            else throw UsageError("config: count_convention must be 'table' or 'textbook'");
          }},
         {"bic_n", [&](const json& v) {
            if (v.is_null()) c.bic_n.reset();
            else c.bic_n = v.get<double>();
          }}});
  check(c);
  return c;
}

RunConfig load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw UsageError("cannot read config " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string default_config_json() { return config_json(RunConfig{}).dump(2) + "\n"; }

void cmd_simulate(const RunConfig& cfg, const fs::path& out) {
  if (out.empty()) throw UsageError("missing output directory (--out)");
  const simulate::Scenario sc = simulate::make_scenario(cfg.simulate, cfg.seed);
  const simulate::SimResult sim = simulate::generate(sc, cfg.seed);
  io::write_dataset(sim.data, out, &sim.truth);
}

void cmd_preprocess(const RunConfig& cfg, const fs::path& in, const fs::path& out) {
  if (out.empty()) throw UsageError("missing output directory (--out)");
  const Dataset data = load_bundle(in);
  const Dataset processed = preprocess::run(data, cfg.preprocess);
  if (fs::exists(in / "truth.json")) {
    const simulate::SimTruth truth = io::read_truth(in / "truth.json");
    io::write_dataset(processed, out, &truth);
  } else {
    io::write_dataset(processed, out);
  }
}

io::FitRecord cmd_fit(const RunConfig& cfg, const fs::path& in, const fs::path& out) {
  if (out.empty()) throw UsageError("missing output directory (--out)");
  const Dataset data = load_bundle(in);
  io::FitRecord rec;
  rec.model = cfg.fit_model;
  rec.fit = selection::fit_model(data, selection::ModelSpec::from_id(cfg.fit_model), em_config(cfg));
  fs::create_directories(out);
  io::write_fit(rec, out / "fit.json");
  std::ofstream trace(out / "loglik_trace.csv");
  trace << "iteration,loglik,change\n";
  for (std::size_t k = 0; k < rec.fit.loglik_trace.size(); ++k) {
    trace << k << ',' << io::format_double(rec.fit.loglik_trace[k]) << ','
          << (k == 0 ? std::string("") : io::format_double(rec.fit.change_trace[k - 1])) << '\n';
  }
  return rec;
}

ActivationMap cmd_infer(const RunConfig& cfg, const fs::path& in, const fs::path& fit, const fs::path& out) {
  if (out.empty()) throw UsageError("missing output directory (--out)");
  const Dataset data = load_bundle(in);
  const io::FitRecord rec = load_fit(fit, data);
  inference::FdrResult fdr;
  const ActivationMap map = inference::infer(data, rec.fit.params, cfg.inference, &fdr);
  fs::create_directories(out);
  io::write_activation_csv(data, map, out / "activation.csv");
  const json summary{{"q", fdr.q},
                     {"m", fdr.m},
                     {"m0_hat", fdr.m0_hat},
                     {"threshold", fdr.threshold},
                     {"rejections", fdr.rejections},
                     {"df", map.df},
                     {"screen_alpha", cfg.inference.screen_alpha ? json(*cfg.inference.screen_alpha) : json(nullptr)}};
  write_text(out / "fdr.json", summary.dump(2) + "\n");

  double cap = 0.0;
  for (double t : map.t)
    if (std::isfinite(t)) cap = std::max(cap, std::abs(t));
  std::vector<double> tvals;
  std::vector<double> rej;
  for (std::size_t i = 0; i < map.t.size(); ++i) {
    tvals.push_back(finite_or(map.t[i], cap));
    rej.push_back(map.reject[i] ? (map.cluster[i] > 0 ? 2.0 : 1.0) : 0.0);
  }
  io::write_volume_pgm(tvals, data.coords, data.acq.grid_shape, out / "maps", "tstat");
  io::write_volume_pgm(rej, data.coords, data.acq.grid_shape, out / "maps", "active");
  return map;
}

PcAnalysis cmd_pcs(const RunConfig& cfg, const fs::path& in, const fs::path& fit, const fs::path& activation,
                   const fs::path& out) {
  if (out.empty()) throw UsageError("missing output directory (--out)");
  const Dataset data = load_bundle(in);
  const io::FitRecord rec = load_fit(fit, data);
  if (activation.empty() || !fs::exists(activation)) throw UsageError("missing activation table (--activation)");
  std::vector<Coord> coords;
  const ActivationMap map = io::read_activation_csv(activation, &coords);
  if (coords != data.coords) throw UsageError("activation table does not match the dataset voxels");
  const PcAnalysis pcs = variability::build_pc_analysis(data, rec.fit.params, rec.fit.resp, map, cfg.pcs);
  fs::create_directories(out);
  io::write_spectrum_csv(pcs.time, out / "spectrum_time.csv");
  io::write_spectrum_csv(pcs.epoch, out / "spectrum_epoch.csv");
  io::write_scores_csv(pcs, data.dims.E, out / "scores.csv");
  io::write_anova_csv(pcs, out / "anova.csv");
  write_fitted_curves(data, rec.fit.params, pcs, out);
  return pcs;
}

selection::Comparison cmd_compare(const RunConfig& cfg, const fs::path& in, const fs::path& out) {
  if (out.empty()) throw UsageError("missing output directory (--out)");
  const Dataset data = load_bundle(in);
  selection::CompareConfig cc;
  cc.models = cfg.models;
  cc.convention = cfg.convention;
  cc.n = cfg.bic_n;
  cc.em = em_config(cfg);
  const selection::Comparison cmp = selection::compare_models(data, cc);
  fs::create_directories(out);
  io::write_comparison_csv(cmp, out / "comparison.csv");
  write_text(out / "comparison.txt", io::comparison_text(cmp));
  return cmp;
}

void cmd_report(const RunConfig& cfg, const fs::path& in, const fs::path& out) {
  if (out.empty()) throw UsageError("missing output directory (--out)");
  fs::path bundle = in;
  if (bundle.empty()) {
    bundle = out / "data";
    cmd_simulate(cfg, bundle);
  }
  write_text(out / "config_used.json", config_json(cfg).dump(2) + "\n");
  const io::FitRecord rec = cmd_fit(cfg, bundle, out / "fit");
  const ActivationMap map = cmd_infer(cfg, bundle, out / "fit" / "fit.json", out / "infer");
  std::optional<PcAnalysis> pcs;
  std::string pcs_note;
  try {
    pcs = cmd_pcs(cfg, bundle, out / "fit" / "fit.json", out / "infer" / "activation.csv", out / "pcs");
  } catch (const EmptyGroupError& e) {
    pcs_note = e.what();
  }
  const selection::Comparison cmp = cmd_compare(cfg, bundle, out / "compare");

  const Dataset data = io::read_dataset(bundle);
  std::ostringstream md;
  md << std::setprecision(6);
  md << "# Report\n\n## Fit (model " << rec.model << ")\n\n";
  md << "| quantity | value |\n|---|---|\n";
  md << "| iterations | " << rec.fit.iterations << " |\n";
  md << "| converged | " << (rec.fit.converged ? "yes" : "no") << " |\n";
  md << "| logL | " << rec.fit.loglik_trace.back() << " |\n";
  md << "| p | " << rec.fit.params.p << " |\n";
  md << "| sigma2 | " << rec.fit.params.sigma2 << " |\n";
  if (fs::exists(bundle / "truth.json")) {
    md << recovery_summary(data, rec.fit.params, rec.fit.resp, io::read_truth(bundle / "truth.json"));
  }
  int rejected = 0;
  for (bool r : map.reject) rejected += r;
  md << "\n## Activation\n\n" << rejected << " of " << map.t.size() << " voxels rejected at q = " << cfg.inference.q
     << " (maps in infer/maps).\n";
  md << "\n## Principal components of sigma_T\n\n";
  if (pcs) {
    md << "| component | eigenvalue | percent |\n|---|---|---|\n";
    for (Eigen::Index k = 0; k < pcs->time.eigenvalues.size(); ++k) {
      md << "| " << k + 1 << " | " << pcs->time.eigenvalues(k) << " | " << pcs->time.percent(k) << " |\n";
    }
    md << "\nANOVA tables in pcs/anova.csv, fitted responses in pcs/fitted_responses.csv.\n";
  } else {
    md << "Skipped: " << pcs_note << "\n";
  }
  md << "\n## Model comparison\n\n```\n" << io::comparison_text(cmp) << "```\n";
  for (const auto& w : rec.fit.warnings.messages()) md << "\nwarning: " << w << '\n';
  write_text(out / "report.md", md.str());
}

int run(int argc, char** argv) {
  CLI::App app{"Mixture model fitting for event-related voxel time series"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string in;
  std::string fit;
  std::string activation;
  int threads = 0;
  bool verbose = false;
  bool print_config = false;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "Generate a synthetic dataset bundle"},
      {"preprocess", "Smooth, time-shift, high-pass filter and center a bundle"},
      {"fit", "Fit one model by EM"},
      {"infer", "Pre-whitened t-tests, adaptive FDR and clustering"},
      {"pcs", "Principal components, scores and ANOVA"},
      {"compare", "Fit models 1-5 and tabulate logL, AIC and BIC"},
      {"report", "Run the whole pipeline"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--seed", seed, "Random seed (overrides the config)");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--threads", threads, "Worker threads (0 = all cores)");
    sub->add_flag("--verbose", verbose, "Stream per-iteration JSON lines to stderr");
    sub->add_option("--in", in, "Input dataset bundle");
    if (name == "infer" || name == "pcs") sub->add_option("--fit", fit, "fit.json from the fit command");
    if (name == "pcs") sub->add_option("--activation", activation, "activation.csv from the infer command");
    if (name == "simulate") sub->add_flag("--print-config", print_config, "Print the default configuration");
  }

  auto fail = [](const std::string& kind, const std::string& message, int code) {
    std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
    return code;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (print_config) {
      std::cout << default_config_json();
      return 0;
    }
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) cfg.seed = *seed;
    cfg.verbose = verbose;
    if (threads < 0) throw UsageError("--threads must be >= 0");
    parallel::set_threads(threads);
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "simulate") cmd_simulate(cfg, out);
    else if (cmd == "preprocess") cmd_preprocess(cfg, in, out);
    else if (cmd == "fit") cmd_fit(cfg, in, out);
    else if (cmd == "infer") cmd_infer(cfg, in, fit, out);
    else if (cmd == "pcs") cmd_pcs(cfg, in, fit, activation, out);
    else if (cmd == "compare") cmd_compare(cfg, in, out);
    else cmd_report(cfg, in, out);
  } catch (const UsageError& e) {
    return fail("usage", e.what(), 2);
  } catch (const ParseError& e) {
    return fail("input", e.what(), 2);
  } catch (const InvalidArgument& e) {
    return fail("invalid_argument", e.what(), 2);
  } catch (const SingularityError& e) {
    return fail("numerical", e.what(), 3);
  } catch (const EmptyGroupError& e) {
    return fail("numerical", e.what(), 3);
  } catch (const DimensionError& e) {
    return fail("numerical", e.what(), 3);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}

}  // namespace trialmix::cli
