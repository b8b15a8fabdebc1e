#include "trialmix/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace trialmix::io {

using nlohmann::json;

namespace {

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& file, bool binary = false) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, binary ? std::ios::binary : std::ios::out);
  if (!out) throw ParseError("cannot write " + file.string());
  return out;
}

json parse_json(const fs::path& file) {
  const std::string text = slurp(file);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(file.filename().string() + ": malformed JSON at byte " + std::to_string(e.byte) + ": " +
                     e.what());
  }
}

template <class T>
T field(const json& j, const char* key, const fs::path& file) {
  if (!j.contains(key)) throw ParseError(file.filename().string() + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(file.filename().string() + ": bad value for '" + key + "': " + e.what());
  }
}

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

MatrixXd matrix_from(const json& j, Eigen::Index rows, Eigen::Index cols) {
  const auto v = j.get<std::vector<std::vector<double>>>();
  if (static_cast<Eigen::Index>(v.size()) != rows) throw ParseError("matrix has the wrong number of rows");
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(v[static_cast<std::size_t>(r)].size()) != cols) {
      throw ParseError("matrix has the wrong number of columns");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  return m;
}

std::vector<double> to_vec(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json params_json(const MixtureParams& m) {
  return json{{"p", m.p},
              {"h", to_vec(m.h.values)},
              {"h_sign_flipped", m.h.sign_flipped},
              {"sigma_T", matrix_json(m.sigma_T)},
              {"sigma_E", matrix_json(m.sigma_E)},
              {"sigma2", m.sigma2},
              {"beta", to_vec(m.beta)},
              {"b", matrix_json(m.b)}};
}

MixtureParams params_from(const json& j) {
  MixtureParams m;
  m.p = j.at("p").get<double>();
  m.h.values = from_vec(j.at("h").get<std::vector<double>>());
  m.h.sign_flipped = j.value("h_sign_flipped", false);
  const Eigen::Index T = m.h.values.size();
  m.sigma_T = matrix_from(j.at("sigma_T"), T, T);
  const auto e_rows = static_cast<Eigen::Index>(j.at("sigma_E").size());
  m.sigma_E = matrix_from(j.at("sigma_E"), e_rows, e_rows);
  m.sigma2 = j.at("sigma2").get<double>();
  m.beta = from_vec(j.at("beta").get<std::vector<double>>());
  const auto q = static_cast<Eigen::Index>(j.at("b").size());
  m.b = q == 0 ? MatrixXd(0, m.beta.size()) : matrix_from(j.at("b"), q, m.beta.size());
  return m;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, const fs::path& file, std::size_t line, std::size_t col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || cell.empty()) {
    throw ParseError(file.filename().string() + ": line " + std::to_string(line) + ", column " +
                     std::to_string(col) + ": not a number '" + cell + "'");
  }
  return v;
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) out << ',';
    out << cells[k];
  }
  out << '\n';
}

std::uint64_t swap_bytes(std::uint64_t v) {
  std::uint64_t out = 0;
  for (int k = 0; k < 8; ++k) out |= ((v >> (8 * k)) & 0xFFULL) << (8 * (7 - k));
  return out;
}

PgmScaling emit_pgm(const std::vector<double>& values, const std::vector<unsigned char>& inside, int width,
                    int height, double lo, double hi, const fs::path& file, json side) {
  const std::size_t n = values.size();
  PgmScaling s;
  s.min = lo;
  s.max = hi;
  s.constant = !(hi > lo);
  std::vector<unsigned char> px(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    if (!inside.empty() && inside[k] == 0) {
      ++s.masked;
      continue;
    }
    px[k] = s.constant ? 128 : static_cast<unsigned char>(std::lround(255.0 * (values[k] - lo) / (hi - lo)));
  }
  auto out = open_out(file, true);
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(n));
  side["min"] = s.min;
  side["max"] = s.max;
  side["constant"] = s.constant;
  side["constant_value"] = 128;
  side["masked_pixels"] = s.masked;
  side["masked_value"] = 0;
  open_out(fs::path(file.string() + ".json")) << side.dump(2) << '\n';
  return s;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Table read_csv(const fs::path& file) {
  std::istringstream in(slurp(file));
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(file.filename().string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = line.empty() ? std::vector<std::string>{} : split(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto cells = line.empty() ? std::vector<std::string>{} : split(line);
    if (cells.size() != t.header.size()) {
      throw ParseError(file.filename().string() + ": line " + std::to_string(line_no) + ": expected " +
                       std::to_string(t.header.size()) + " columns, found " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) row.push_back(parse_number(cells[c], file, line_no, c + 1));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_dataset(const Dataset& data, const fs::path& dir, const simulate::SimTruth* truth) {
  validate(data);
  fs::create_directories(dir);
  json coords = json::array();
  for (const auto& c : data.coords) coords.push_back({c.x, c.y, c.z});
  const json header{{"version", kFormatVersion},
                    {"endianness", "little"},
                    {"dims", {{"T", data.dims.T}, {"E", data.dims.E}, {"V", data.dims.V}, {"q", data.dims.q}}},
                    {"tr", data.acq.tr_seconds},
                    {"slice_count", data.acq.slice_count},
                    {"stimulus_times", data.acq.stimulus_times},
                    {"post_stimulus_times", data.acq.post_stimulus_times},
                    {"mask_shape", data.acq.grid_shape},
                    {"voxel_size_mm", data.acq.voxel_size_mm},
                    {"coords", coords}};
  open_out(dir / "header.json") << header.dump(2) << '\n';

  auto out = open_out(dir / "data.f64", true);
  const auto count = static_cast<std::size_t>(data.series.size());
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data.series.data()), static_cast<std::streamsize>(count * 8));
  } else {
    for (std::size_t k = 0; k < count; ++k) {
      const auto bits = swap_bytes(std::bit_cast<std::uint64_t>(data.series.data()[k]));
      out.write(reinterpret_cast<const char*>(&bits), 8);
    }
  }
  if (!out) throw ParseError("failed writing data.f64");

  auto csv = open_out(dir / "design.csv");
  std::vector<std::string> head;
  for (int c = 0; c < data.dims.q; ++c) head.push_back("x" + std::to_string(c + 1));
  write_row(csv, head);
  for (int n = 0; n < data.dims.n(); ++n) {
    std::vector<std::string> row;
    for (int c = 0; c < data.dims.q; ++c) row.push_back(format_double(data.design(n, c)));
    write_row(csv, row);
  }
  if (truth != nullptr) write_truth(*truth, dir / "truth.json");
}

Dataset read_dataset(const fs::path& dir) {
  const fs::path hfile = dir / "header.json";
  if (!fs::exists(hfile)) throw ParseError("missing " + hfile.string());
  const json h = parse_json(hfile);
  const auto version = field<std::string>(h, "version", hfile);
  if (version != kFormatVersion) {
    throw ParseError("header.json: unsupported format version '" + version + "' (expected '1')");
  }
  if (field<std::string>(h, "endianness", hfile) != "little") throw ParseError("header.json: endianness must be 'little'");
  Dataset d;
  const json dims = field<json>(h, "dims", hfile);
  d.dims = Dims{field<int>(dims, "T", hfile), field<int>(dims, "E", hfile), field<int>(dims, "V", hfile),
                field<int>(dims, "q", hfile)};
  validate(d.dims);
  d.acq.tr_seconds = field<double>(h, "tr", hfile);
  d.acq.slice_count = field<int>(h, "slice_count", hfile);
  d.acq.stimulus_times = field<std::vector<double>>(h, "stimulus_times", hfile);
  d.acq.post_stimulus_times = field<std::vector<double>>(h, "post_stimulus_times", hfile);
  d.acq.grid_shape = field<std::array<int, 3>>(h, "mask_shape", hfile);
  d.acq.voxel_size_mm = field<std::array<double, 3>>(h, "voxel_size_mm", hfile);
  const auto coords = field<std::vector<std::array<int, 3>>>(h, "coords", hfile);
  if (static_cast<int>(coords.size()) != d.dims.V) throw ParseError("header.json: coords length differs from V");
  for (const auto& c : coords) d.coords.push_back({c[0], c[1], c[2]});

  const fs::path dfile = dir / "data.f64";
  const std::string bytes = slurp(dfile);
  const std::size_t expected = 8ULL * static_cast<std::size_t>(d.dims.V) * static_cast<std::size_t>(d.dims.n());
  if (bytes.size() != expected) {
    throw ParseError("data.f64: length mismatch: expected " + std::to_string(expected) + " bytes, found " +
                     std::to_string(bytes.size()));
  }
  d.series.resize(d.dims.n(), d.dims.V);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(d.series.data(), bytes.data(), expected);
  } else {
    for (std::size_t k = 0; k < expected / 8; ++k) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, bytes.data() + 8 * k, 8);
      d.series.data()[k] = std::bit_cast<double>(swap_bytes(bits));
    }
  }

  const Table t = read_csv(dir / "design.csv");
  if (static_cast<int>(t.header.size()) != d.dims.q) {
    throw ParseError("design.csv: header has " + std::to_string(t.header.size()) + " columns, expected q = " +
                     std::to_string(d.dims.q));
  }
  if (static_cast<int>(t.rows.size()) != d.dims.n()) {
    throw ParseError("design.csv: expected " + std::to_string(d.dims.n()) + " rows, found " +
                     std::to_string(t.rows.size()));
  }
  d.design.resize(d.dims.n(), d.dims.q);
  for (int n = 0; n < d.dims.n(); ++n)
    for (int c = 0; c < d.dims.q; ++c) d.design(n, c) = t.rows[static_cast<std::size_t>(n)][static_cast<std::size_t>(c)];
  return d;
}

void write_truth(const simulate::SimTruth& truth, const fs::path& file) {
  json j = params_json(truth.params);
  j["z"] = truth.z;
  j["seed"] = truth.seed;
  open_out(file) << j.dump(2) << '\n';
}

simulate::SimTruth read_truth(const fs::path& file) {
  const json j = parse_json(file);
  simulate::SimTruth t;
  try {
    t.params = params_from(j);
    t.z = j.at("z").get<std::vector<int>>();
    t.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ParseError(file.filename().string() + ": " + e.what());
  }
  return t;
}

void write_fit(const FitRecord& r, const fs::path& file) {
  const FitResult& f = r.fit;
  json j{{"version", kFormatVersion},
         {"model", r.model},
         {"params", params_json(f.params)},
         {"responsibilities", to_vec(f.resp.p_i)},
         {"loglik_trace", f.loglik_trace},
         {"change_trace", f.change_trace},
         {"iterations", f.iterations},
         {"converged", f.converged},
         {"warnings", f.warnings.messages()}};
  open_out(file) << j.dump(2) << '\n';
}

FitRecord read_fit(const fs::path& file) {
  const json j = parse_json(file);
  FitRecord r;
  try {
    r.model = j.at("model").get<int>();
    r.fit.params = params_from(j.at("params"));
    r.fit.resp.p_i = from_vec(j.at("responsibilities").get<std::vector<double>>());
    r.fit.loglik_trace = j.at("loglik_trace").get<std::vector<double>>();
    r.fit.change_trace = j.at("change_trace").get<std::vector<double>>();
    r.fit.iterations = j.at("iterations").get<int>();
    r.fit.converged = j.at("converged").get<bool>();
    for (const auto& w : j.at("warnings")) r.fit.warnings.add(w.get<std::string>());
  } catch (const json::exception& e) {
    throw ParseError(file.filename().string() + ": " + e.what());
  }
  return r;
}

void write_activation_csv(const Dataset& data, const ActivationMap& map, const fs::path& file) {
  auto out = open_out(file);
  write_row(out, {"x", "y", "z", "t", "p", "reject", "cluster"});
  for (std::size_t i = 0; i < map.t.size(); ++i) {
    const Coord& c = data.coords[i];
    write_row(out, {std::to_string(c.x), std::to_string(c.y), std::to_string(c.z), format_double(map.t[i]),
                    format_double(map.p[i]), map.reject[i] ? "1" : "0", std::to_string(map.cluster[i])});
  }
}

ActivationMap read_activation_csv(const fs::path& file, std::vector<Coord>* coords) {
  const Table t = read_csv(file);
  if (t.header != std::vector<std::string>{"x", "y", "z", "t", "p", "reject", "cluster"}) {
    throw ParseError(file.filename().string() + ": unexpected header");
  }
  ActivationMap m;
  for (const auto& row : t.rows) {
    if (coords != nullptr) {
      coords->push_back({static_cast<int>(row[0]), static_cast<int>(row[1]), static_cast<int>(row[2])});
    }
    m.t.push_back(row[3]);
    m.p.push_back(row[4]);
    m.reject.push_back(row[5] != 0.0);
    m.cluster.push_back(static_cast<int>(row[6]));
    m.perfect_fit.push_back(std::isinf(row[3]));
  }
  return m;
}

void write_spectrum_csv(const Spectrum& s, const fs::path& file) {
  auto out = open_out(file);
  std::vector<std::string> head{"component", "eigenvalue", "percent"};
  for (Eigen::Index r = 0; r < s.loadings.rows(); ++r) head.push_back("loading" + std::to_string(r + 1));
  write_row(out, head);
  for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k) {
    std::vector<std::string> row{std::to_string(k + 1), format_double(s.eigenvalues(k)), format_double(s.percent(k))};
    for (Eigen::Index r = 0; r < s.loadings.rows(); ++r) row.push_back(format_double(s.loadings(r, k)));
    write_row(out, row);
  }
}

void write_scores_csv(const PcAnalysis& pcs, int E, const fs::path& file) {
  auto out = open_out(file);
  std::vector<std::string> head{"voxel", "cluster", "event"};
  for (int k = 0; k < pcs.K; ++k) head.push_back("pc" + std::to_string(k + 1));
  write_row(out, head);
  for (std::size_t a = 0; a < pcs.voxels.size(); ++a) {
    for (int j = 0; j < E; ++j) {
      std::vector<std::string> row{std::to_string(pcs.voxels[a]), std::to_string(pcs.voxel_cluster[a]),
                                   std::to_string(j + 1)};
      for (int k = 0; k < pcs.K; ++k) row.push_back(format_double(pcs.score(a, j, k, E)));
      write_row(out, row);
    }
  }
}

void write_anova_csv(const PcAnalysis& pcs, const fs::path& file) {
  auto out = open_out(file);
  write_row(out, {"component", "term", "level", "estimate", "se"});
  for (std::size_t k = 0; k < pcs.anova.size(); ++k) {
    const AnovaTable& a = pcs.anova[k];
    const std::string comp = std::to_string(k + 1);
    write_row(out, {comp, "mean", "0", format_double(a.grand_mean), format_double(a.grand_mean_se)});
    for (std::size_t j = 0; j < a.event_levels.size(); ++j) {
      write_row(out, {comp, "event", std::to_string(a.event_levels[j]), format_double(a.event_effects[j]),
                      format_double(a.event_se[j])});
    }
    for (std::size_t c = 0; c < a.cluster_levels.size(); ++c) {
      write_row(out, {comp, "cluster", std::to_string(a.cluster_levels[c]), format_double(a.cluster_effects[c]),
                      format_double(a.cluster_se[c])});
    }
    write_row(out, {comp, "residual_variance", std::to_string(a.residual_df), format_double(a.residual_variance),
                    "0"});
  }
}

void write_comparison_csv(const selection::Comparison& cmp, const fs::path& file) {
  auto out = open_out(file);
  write_row(out, {"model", "P", "logL", "AIC", "BIC", "n", "iterations", "converged", "min_aic", "min_bic"});
  for (const auto& r : cmp.rows) {
    write_row(out, {std::to_string(r.model), std::to_string(r.P), format_double(r.loglik), format_double(r.aic),
                    format_double(r.bic), format_double(r.n), std::to_string(r.iterations), r.converged ? "1" : "0",
                    r.min_aic ? "1" : "0", r.min_bic ? "1" : "0"});
  }
}

std::string comparison_text(const selection::Comparison& cmp) {
  std::ostringstream os;
  os << std::left << std::setw(7) << "Model" << std::right << std::setw(10) << "P" << std::setw(18) << "logL"
     << std::setw(18) << "AIC" << std::setw(18) << "BIC" << '\n';
  os << std::fixed << std::setprecision(1);
  for (const auto& r : cmp.rows) {
    os << std::left << std::setw(7) << r.model << std::right << std::setw(10) << r.P << std::setw(18) << r.loglik
       << std::setw(17) << r.aic << (r.min_aic ? '*' : ' ') << std::setw(17) << r.bic << (r.min_bic ? '*' : ' ')
       << '\n';
  }
  return os.str();
}

PgmScaling write_map_pgm(const std::vector<double>& values, const std::vector<unsigned char>& inside,
                         int width, int height, const fs::path& file) {
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (width < 1 || height < 1 || values.size() != n) throw DimensionError("image size does not match values");
  if (!inside.empty() && inside.size() != n) throw DimensionError("mask size does not match values");
  double lo = 0.0;
  double hi = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < n; ++k) {
    if (!inside.empty() && inside[k] == 0) continue;
    if (!std::isfinite(values[k])) throw InvalidArgument("image values must be finite");
    lo = any ? std::min(lo, values[k]) : values[k];
    hi = any ? std::max(hi, values[k]) : values[k];
    any = true;
  }
  return emit_pgm(values, inside, width, height, lo, hi, file, json::object());
}

std::vector<fs::path> write_volume_pgm(const std::vector<double>& voxel_values, const std::vector<Coord>& coords,
                                       const std::array<int, 3>& grid, const fs::path& dir,
                                       const std::string& stem) {
  if (voxel_values.size() != coords.size()) throw DimensionError("one value per voxel is required");
  const int W = grid[0];
  const int H = grid[1];
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t i = 0; i < voxel_values.size(); ++i) {
    lo = i ? std::min(lo, voxel_values[i]) : voxel_values[i];
    hi = i ? std::max(hi, voxel_values[i]) : voxel_values[i];
  }
  std::vector<fs::path> paths;
  for (int z = 0; z < grid[2]; ++z) {
    std::vector<double> vals(static_cast<std::size_t>(W) * static_cast<std::size_t>(H), 0.0);
    std::vector<unsigned char> in(vals.size(), 0);
    for (std::size_t i = 0; i < coords.size(); ++i) {
      if (coords[i].z != z) continue;
      const std::size_t k = static_cast<std::size_t>(coords[i].y) * W + static_cast<std::size_t>(coords[i].x);
      vals[k] = voxel_values[i];
      in[k] = 1;
    }
    std::ostringstream name;
    name << stem << "_z" << std::setw(3) << std::setfill('0') << z << ".pgm";
    const fs::path file = dir / name.str();
    emit_pgm(vals, in, W, H, lo, hi, file, json{{"slice", z}});
    paths.push_back(file);
  }
  return paths;
}

Pgm read_pgm(const fs::path& file) {
  const std::string bytes = slurp(file);
  std::istringstream in(bytes);
  std::string magic;
  int maxval = 0;
  Pgm p;
  in >> magic >> p.width >> p.height >> maxval;
  if (magic != "P5" || maxval != 255 || !in) throw ParseError(file.filename().string() + ": not an 8-bit P5 image");
  in.get();
  const auto offset = static_cast<std::size_t>(in.tellg());
  const std::size_t n = static_cast<std::size_t>(p.width) * static_cast<std::size_t>(p.height);
  if (bytes.size() != offset + n) {
    throw ParseError(file.filename().string() + ": expected " + std::to_string(offset + n) + " bytes, found " +
                     std::to_string(bytes.size()));
  }
  p.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
  return p;
}

void write_curves_svg(const std::vector<SvgSeries>& series, const std::string& title, const fs::path& file) {
  const double W = 640;
  const double H = 400;
  const double pad = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (first) {
        x0 = x1 = s.x[k];
        y0 = y1 = s.y[k];
        first = false;
      }
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, s.y[k]);
      y1 = std::max(y1, s.y[k]);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  auto px = [&](double x) { return pad + (x - x0) / (x1 - x0) * (W - 2 * pad); };
  auto py = [&](double y) { return H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  auto out = open_out(file);
  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  out << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\"" << H - pad
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << H - pad
      << "\" stroke=\"black\"/>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = colors[s % 8];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (std::size_t k = 0; k < series[s].x.size(); ++k) out << px(series[s].x[k]) << ',' << py(series[s].y[k]) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << W - pad + 4 << "\" y=\"" << pad + 14 * s << "\" font-size=\"10\" fill=\"" << color
        << "\">" << series[s].label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace trialmix::io
