#include "dmbpp/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "dmbpp/estimate.hpp"
#include "dmbpp/format.hpp"
#include "dmbpp/simlab.hpp"

namespace dmbpp::cli {

namespace fs = std::filesystem;

// ------------------------------------------------------------------ csv reading

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  out.push_back(std::move(cell));
  return out;
}

bool is_missing(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "." || s == "null";
}

std::string where(long row, const std::string& column) {
  return "row " + std::to_string(row) + ", column '" + column + "'";
}

}  // namespace

DomainSpec ingest_domain(const IngestConfig& cfg) {
  std::vector<int> dims;
  for (const auto& g : cfg.simplex) {
    const int d = g.mode == CompositionMode::Normalize ? static_cast<int>(g.columns.size()) - 1
                                                       : static_cast<int>(g.columns.size());
    if (d < 1) throw ConfigError("data.simplex." + g.name + ": too few columns for the composition mode");
    dims.push_back(d);
  }
  for (const auto& c : cfg.cube) {
    if (!(c.min < c.max)) throw ConfigError("data.cube." + c.column + ": min must be below max");
  }
  std::vector<std::string> seen;
  for (const auto& g : cfg.simplex) seen.insert(seen.end(), g.columns.begin(), g.columns.end());
  for (const auto& c : cfg.cube) seen.push_back(c.column);
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
    throw ConfigError("data: a column is mapped to more than one block");
  }
  if (seen.empty()) throw ConfigError("data: no columns mapped");
  return DomainSpec(dims, static_cast<int>(cfg.cube.size()));
}

Dataset ingest(std::istream& in, const IngestConfig& cfg) {
  Dataset ds;
  ds.spec = ingest_domain(cfg);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header line");
  const auto header = split_csv_line(line);
  auto column_index = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError("column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::vector<std::size_t>> group_idx;
  for (const auto& g : cfg.simplex) {
    std::vector<std::size_t> idx;
    for (const auto& c : g.columns) idx.push_back(column_index(c));
    group_idx.push_back(std::move(idx));
  }
  std::vector<std::size_t> cube_idx;
  for (const auto& c : cfg.cube) cube_idx.push_back(column_index(c.column));

  long row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    ++ds.rows_read;
    const auto cells = split_csv_line(line);
    auto cell = [&](std::size_t i, const std::string& name, double& value) {
      if (i >= cells.size() || is_missing(cells[i])) return false;
      if (!parse_double(cells[i], value) || !std::isfinite(value)) {
        throw ParseError(where(row, name) + ": '" + cells[i] + "' is not a number");
      }
      return true;
    };
    MixedPoint x;
    bool missing = false;
    for (std::size_t g = 0; g < cfg.simplex.size() && !missing; ++g) {
      const auto& group = cfg.simplex[g];
      Eigen::VectorXd raw(static_cast<Eigen::Index>(group.columns.size()));
      for (std::size_t c = 0; c < group.columns.size(); ++c) {
        double v = 0.0;
        if (!cell(group_idx[g][c], group.columns[c], v)) {
          missing = true;
          break;
        }
        if (v < 0.0) throw OutOfRange(where(row, group.columns[c]) + ": negative composition part");
        raw[static_cast<Eigen::Index>(c)] = v;
      }
      if (missing) break;
      if (group.mode == CompositionMode::Normalize) {
        const double total = raw.sum();
        if (!(total > 0.0)) throw OutOfRange("row " + std::to_string(row) + ": composition '" + group.name + "' sums to zero");
        x.simplex.push_back((raw / total).head(raw.size() - 1));
      } else {
        if ((raw.array() > 1.0).any() || raw.sum() > 1.0 + kSimplexTolerance) {
          throw SimplexViolation("row " + std::to_string(row) + ": composition '" + group.name + "' leaves the simplex");
        }
        x.simplex.push_back(raw);
      }
    }
    x.cube.resize(static_cast<Eigen::Index>(cfg.cube.size()));
    for (std::size_t c = 0; c < cfg.cube.size() && !missing; ++c) {
      double v = 0.0;
      if (!cell(cube_idx[c], cfg.cube[c].column, v)) {
        missing = true;
        break;
      }
      const double scaled = (v - cfg.cube[c].min) / (cfg.cube[c].max - cfg.cube[c].min);
      if (!(scaled >= 0.0 && scaled <= 1.0)) {
        throw RescaleOutOfRange(where(row, cfg.cube[c].column) + ": value outside the rescale bounds");
      }
      x.cube[static_cast<Eigen::Index>(c)] = scaled;
    }
    if (missing) {
      ++ds.rows_dropped;
      continue;
    }
    ds.points.push_back(clamp_interior(validate(x, ds.spec), ds.spec, cfg.interior_epsilon));
    ds.source_rows.push_back(row);
  }
  if (ds.points.empty()) throw EmptyDataset("no complete rows in '" + cfg.path + "'");
  return ds;
}

Dataset ingest(const IngestConfig& cfg) {
  std::ifstream in(cfg.path);
  if (!in) throw ParseError("cannot open '" + cfg.path + "'");
  return ingest(in, cfg);
}

// ------------------------------------------------------------------ configuration

namespace {

const Json* find(const Json& j, const std::string& path) {
  const Json* cur = &j;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!cur->is_object() || !cur->contains(key)) return nullptr;
    cur = &(*cur)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return cur;
}

template <class T>
T convert(const Json& v, const std::string& path) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path + ": expected true or false");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(path + ": expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path + ": expected a string");
    }
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + ": value has the wrong type");
  }
}

template <class T>
T value_or(const Json& j, const std::string& path, T fallback) {
  const Json* v = find(j, path);
  return v ? convert<T>(*v, path) : fallback;
}

template <class T>
T required(const Json& j, const std::string& path) {
  const Json* v = find(j, path);
  if (!v) throw ConfigError(path + ": required key is missing");
  return convert<T>(*v, path);
}

/// `base` names the enclosing entry in error messages.
const Json& required_node(const Json& j, const std::string& path, const std::string& base = {}) {
  const Json* v = find(j, path);
  if (!v) throw ConfigError((base.empty() ? path : base + "." + path) + ": required key is missing");
  return *v;
}

std::vector<double> per_block(const Json& j, const std::string& path, int blocks, double fallback) {
  const Json* v = find(j, path);
  if (!v) return std::vector<double>(static_cast<std::size_t>(blocks), fallback);
  if (v->is_number()) return std::vector<double>(static_cast<std::size_t>(blocks), v->get<double>());
  if (!v->is_array() || static_cast<int>(v->size()) != blocks) {
    throw ConfigError(path + ": expected a number or one number per block");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < v->size(); ++i) out.push_back(convert<double>((*v)[i], path + "." + std::to_string(i)));
  return out;
}

}  // namespace

Json load_config(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open configuration file");
  try {
    Json j = Json::parse(in);
    if (!j.is_object()) throw ConfigError(path + ": top level must be an object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void apply_override(Json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(assignment + ": override must look like key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  Json* cur = &config;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError(path + ": empty key segment");
    if (!cur->is_object()) throw ConfigError(path + ": cannot descend into a non-object");
    if (dot == std::string::npos) {
      (*cur)[key] = value;
      return;
    }
    cur = &(*cur)[key];
    if (cur->is_null()) *cur = Json::object();
    start = dot + 1;
  }
}

IngestConfig ingest_config_from(const Json& config) {
  IngestConfig cfg;
  cfg.path = required<std::string>(config, "data.path");
  cfg.interior_epsilon = value_or<double>(config, "model.interior_epsilon", kDefaultInteriorEpsilon);
  if (const Json* groups = find(config, "data.simplex")) {
    if (!groups->is_array()) throw ConfigError("data.simplex: expected a list of groups");
    for (std::size_t i = 0; i < groups->size(); ++i) {
      const std::string base = "data.simplex." + std::to_string(i);
      const Json& g = (*groups)[i];
      SimplexGroup group;
      group.name = value_or<std::string>(g, "name", "x" + std::to_string(i + 1));
      const Json& cols = required_node(g, "columns", base);
      if (!cols.is_array()) throw ConfigError(base + ".columns: expected a list of column names");
      for (std::size_t c = 0; c < cols.size(); ++c) group.columns.push_back(convert<std::string>(cols[c], base + ".columns"));
      const std::string mode = value_or<std::string>(g, "mode", "normalize");
      if (mode == "normalize") {
        group.mode = CompositionMode::Normalize;
      } else if (mode == "assert") {
        group.mode = CompositionMode::Assert;
      } else {
        throw ConfigError(base + ".mode: expected 'normalize' or 'assert'");
      }
      cfg.simplex.push_back(std::move(group));
    }
  }
  if (const Json* cube = find(config, "data.cube")) {
    if (!cube->is_array()) throw ConfigError("data.cube: expected a list of columns");
    for (std::size_t i = 0; i < cube->size(); ++i) {
      const std::string base = "data.cube." + std::to_string(i);
      const Json& c = (*cube)[i];
      CubeColumn col;
      col.column = convert<std::string>(required_node(c, "column", base), base + ".column");
      col.min = convert<double>(required_node(c, "min", base), base + ".min");
      col.max = convert<double>(required_node(c, "max", base), base + ".max");
      if (!(col.min < col.max)) throw ConfigError(base + ": min must be below max");
      cfg.cube.push_back(col);
    }
  }
  return cfg;
}

ModelConfig model_config_from(const Json& config, const DomainSpec& spec) {
  ModelConfig m = default_model_config(spec);
  m.truncation = value_or<int>(config, "model.truncation", m.truncation);
  m.interior_epsilon = value_or<double>(config, "model.interior_epsilon", m.interior_epsilon);
  m.precision_prior.shape = value_or<double>(config, "model.precision.shape", m.precision_prior.shape);
  m.precision_prior.rate = value_or<double>(config, "model.precision.rate", m.precision_prior.rate);
  const std::string type = value_or<std::string>(config, "model.degree_prior.type", "poisson");
  const auto lambda = per_block(config, "model.degree_prior.lambda", spec.num_blocks(), kDefaultDegreeLambda);
  if (type == "poisson") {
    m.degree_prior = TruncatedPoisson{lambda};
  } else if (type == "tail") {
    m.degree_prior = TailModified{lambda, value_or<int>(config, "model.degree_prior.k_tilde", 30)};
  } else {
    throw ConfigError("model.degree_prior.type: expected 'poisson' or 'tail'");
  }
  try {
    check_config(m);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return m;
}

SamplerConfig sampler_config_from(const Json& config) {
  SamplerConfig s;
  s.chain_length = value_or<int>(config, "sampler.chain_length", s.chain_length);
  s.burn_in = value_or<int>(config, "sampler.burn_in", s.burn_in);
  s.thinning = value_or<int>(config, "sampler.thinning", s.thinning);
  s.n_chains = value_or<int>(config, "sampler.n_chains", s.n_chains);
  s.atom_step = value_or<double>(config, "sampler.atom_step", s.atom_step);
  s.degree_step = value_or<int>(config, "sampler.degree_step", s.degree_step);
  s.atom_proposal_mix = value_or<double>(config, "sampler.atom_proposal_mix", s.atom_proposal_mix);
  s.atom_moves = value_or<int>(config, "sampler.atom_moves", s.atom_moves);
  s.parallel = value_or<bool>(config, "sampler.parallel", s.parallel);
  s.seed = value_or<std::uint64_t>(config, "seed", 1);
  try {
    check_sampler_config(s);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("sampler: ") + e.what());
  }
  return s;
}

// ------------------------------------------------------------------ manifest and output tracking

namespace {

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

Json RunManifest::to_json() const {
  Json j;
  j["command"] = command;
  j["version"] = version;
  j["seed"] = seed;
  j["status"] = status;
  j["started"] = started;
  if (!finished.empty()) j["finished"] = finished;
  if (!error.empty()) j["error"] = error;
  if (runtime_seconds > 0.0) j["runtime_seconds"] = runtime_seconds;
  j["outputs"] = outputs;
  j["config"] = config;
  return j;
}

namespace {

/// Owns the output directory of one command run.
class Run {
 public:
  Run(std::string command, const Json& config)
      : dir_(value_or<std::string>(config, "output_dir", "out")), start_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(command);
    manifest_.config = config;
    manifest_.seed = value_or<std::uint64_t>(config, "seed", 1);
    manifest_.started = timestamp();
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("output_dir: cannot create '" + dir_.string() + "'");
    write_manifest();
  }

  /// Opens a tracked output file.
  std::ofstream open(const std::string& name, bool binary = false) {
    const fs::path p = dir_ / name;
    created_.push_back(p);
    std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error(ErrorCategory::Data, "cannot write '" + p.string() + "'");
    return out;
  }

  void complete(double runtime = -1.0) {
    manifest_.status = "complete";
    manifest_.finished = timestamp();
    manifest_.runtime_seconds =
        runtime >= 0.0 ? runtime : std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    for (const auto& p : created_) manifest_.outputs.push_back(p.string());
    write_manifest();
  }

  void fail(const std::string& what) {
    for (const auto& p : created_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    manifest_.status = "failed";
    manifest_.error = what;
    manifest_.finished = timestamp();
    try {
      write_manifest();
    } catch (...) {
    }
  }

  std::vector<std::string> outputs() const {
    std::vector<std::string> out;
    for (const auto& p : created_) out.push_back(p.string());
    return out;
  }

 private:
  void write_manifest() {
    std::ofstream out(dir_ / "manifest.json");
    if (!out) throw ConfigError("output_dir: cannot write manifest");
    out << manifest_.to_json().dump(2) << '\n';
  }

  fs::path dir_;
  RunManifest manifest_;
  std::vector<fs::path> created_;
  std::chrono::steady_clock::time_point start_;
};

template <class Body>
std::vector<std::string> guarded(const std::string& command, const Json& config, Body&& body) {
  Run run(command, config);
  try {
    body(run);
  } catch (const std::exception& e) {
    run.fail(e.what());
    throw;
  }
  return run.outputs();
}

std::vector<MixedPoint> grid_points(const DomainSpec& spec, int resolution) {
  return make_grid(spec, uniform_grid_spec(spec, resolution)).points;
}

/// A subset from variable names such as x1_2 or x3.
MarginalSubset subset_from_names(const DomainSpec& spec, const Json& names, const std::string& path) {
  if (!names.is_array() || names.empty()) throw ConfigError(path + ": expected a list of variable names");
  const auto all = variable_names(spec);
  MarginalSubset s = MarginalSubset::none(spec);
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto name = convert<std::string>(names[i], path);
    const auto it = std::find(all.begin(), all.end(), name);
    if (it == all.end()) throw ConfigError(path + ": unknown variable '" + name + "'");
    const MarginalSubset one = single_variable(spec, static_cast<int>(it - all.begin()));
    for (std::size_t m = 0; m < s.simplex_parts.size(); ++m) {
      for (int p : one.simplex_parts[m]) s.simplex_parts[m].push_back(p);
      std::sort(s.simplex_parts[m].begin(), s.simplex_parts[m].end());
    }
    for (std::size_t l = 0; l < s.cube_keep.size(); ++l) s.cube_keep[l] = s.cube_keep[l] || one.cube_keep[l];
  }
  try {
    check_subset(spec, s);
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return s;
}

std::string join(const Json& names, char sep) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out.push_back(sep);
    out += n.get<std::string>();
  }
  return out;
}

/// Conditioning point from {"at": {name: value}} or {"row": r} into the configured data.
MixedPoint conditioning_point(const Json& config, const Json& entry, const DomainSpec& spec, BlockIndex target,
                              const std::string& path) {
  MixedPoint x = zero_point(spec);
  if (const Json* row = find(entry, "row")) {
    const long r = convert<long>(*row, path + ".row");
    const Dataset ds = ingest(ingest_config_from(config));
    if (!(ds.spec == spec)) throw ConfigError("data: mapped columns do not match the fitted domain");
    const auto it = std::find(ds.source_rows.begin(), ds.source_rows.end(), r);
    if (it == ds.source_rows.end()) throw ConfigError(path + ".row: row " + std::to_string(r) + " is not in the data");
    return ds.points[static_cast<std::size_t>(it - ds.source_rows.begin())];
  }
  const Json& at = required_node(entry, "at", path);
  if (!at.is_object()) throw ConfigError(path + ".at: expected an object of coordinate values");
  const auto names = coordinate_names(spec);
  Eigen::VectorXd flat = flatten(x);
  std::vector<bool> given(names.size(), false);
  for (const auto& [key, value] : at.items()) {
    const auto it = std::find(names.begin(), names.end(), key);
    if (it == names.end()) throw ConfigError(path + ".at." + key + ": unknown coordinate");
    const auto i = static_cast<std::size_t>(it - names.begin());
    flat[static_cast<Eigen::Index>(i)] = convert<double>(value, path + ".at." + key);
    given[i] = true;
  }
  x = unflatten(spec, flat);
  std::size_t offset = 0;
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    for (int l = 0; l < spec.block_dim(b); ++l, ++offset) {
      if (b != target.value && !given[offset]) throw ConfigError(path + ".at: missing coordinate " + names[offset]);
    }
  }
  std::vector<bool> present(static_cast<std::size_t>(spec.num_blocks()), true);
  present[static_cast<std::size_t>(target.value - 1)] = false;
  validate_blocks(x, spec, present);
  return x;
}

PosteriorDraws load_draws(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("draws file '" + path + "' cannot be opened");
  return read_draws_binary(in);
}

L1Options l1_options_from(const Json& config, const std::string& base) {
  L1Options o;
  const std::string method = value_or<std::string>(config, base + ".method", "grid");
  if (method == "grid") {
    o.method = L1Method::Grid;
  } else if (method == "mc") {
    o.method = L1Method::MonteCarlo;
  } else {
    throw ConfigError(base + ".method: expected 'grid' or 'mc'");
  }
  o.grid_resolution = value_or<int>(config, base + ".resolution", o.grid_resolution);
  o.mc_draws = value_or<long>(config, base + ".mc_draws", o.mc_draws);
  o.seed = value_or<std::uint64_t>(config, base + ".seed", o.seed);
  return o;
}

void write_ellipses(Run& run, const Json& config, const Json* list, const PosteriorDraws& draws, const std::string& key) {
  if (!list) return;
  if (!list->is_array()) throw ConfigError(key + ": expected a list");
  for (std::size_t i = 0; i < list->size(); ++i) {
    const std::string path = key + "." + std::to_string(i);
    const Json& e = (*list)[i];
    const BlockIndex target{convert<int>(required_node(e, "target", path), path + ".target")};
    if (target.value < 1 || target.value > draws.spec().num_blocks()) throw ConfigError(path + ".target: no such block");
    const MixedPoint x = conditioning_point(config, e, draws.spec(), target, path);
    const Ellipse region = conditional_mean_region(draws, target, x, value_or<double>(e, "level", 0.95));
    auto out = run.open("ellipse_" + std::to_string(i + 1) + ".csv");
    write_ellipse_csv(out, region);
  }
}

}  // namespace

// ------------------------------------------------------------------ commands

std::vector<std::string> cmd_fit(const Json& config) {
  return guarded("fit", config, [&](Run& run) {
    const Dataset ds = ingest(ingest_config_from(config));
    const ModelConfig model = model_config_from(config, ds.spec);
    const SamplerConfig sampler = sampler_config_from(config);
    const PosteriorDraws draws = run_chain(sampler, model, ds.points);
    {
      auto out = run.open("draws.csv");
      write_draws_csv(out, draws);
    }
    {
      auto out = run.open("draws.bin", true);
      write_draws_binary(out, draws);
    }
    auto out = run.open("fit_summary.json");
    const AcceptanceStats acc = draws.total_acceptance();
    Json summary;
    summary["rows_read"] = ds.rows_read;
    summary["rows_dropped"] = ds.rows_dropped;
    summary["n"] = ds.points.size();
    summary["retained_draws"] = draws.states.size();
    summary["atom_acceptance"] = acc.atom_rate();
    summary["degree_acceptance"] = acc.degree_rate();
    out << summary.dump(2) << '\n';
    out.close();
    run.complete();
  });
}

std::vector<std::string> cmd_predict(const Json& config) {
  return guarded("predict", config, [&](Run& run) {
    const PosteriorDraws draws = load_draws(required<std::string>(config, "predict.draws"));
    const DomainSpec& spec = draws.spec();
    const int resolution = value_or<int>(config, "predict.grid_resolution", 40);
    if (resolution < 1) throw ConfigError("predict.grid_resolution: must be positive");
    if (value_or<bool>(config, "predict.joint", false)) {
      auto out = run.open("joint.csv");
      write_density_csv(out, predictive_density(draws, grid_points(spec, resolution)));
    }
    if (const Json* marginals = find(config, "predict.marginals")) {
      if (!marginals->is_array()) throw ConfigError("predict.marginals: expected a list of variable lists");
      for (std::size_t i = 0; i < marginals->size(); ++i) {
        const std::string path = "predict.marginals." + std::to_string(i);
        const MarginalSubset subset = subset_from_names(spec, (*marginals)[i], path);
        const auto points = grid_points(subset_domain(spec, subset), resolution);
        auto out = run.open("marginal_" + join((*marginals)[i], '_') + ".csv");
        write_density_csv(out, predictive_marginal(draws, subset, points));
      }
    }
    if (const Json* conds = find(config, "predict.conditionals")) {
      if (!conds->is_array()) throw ConfigError("predict.conditionals: expected a list");
      for (std::size_t i = 0; i < conds->size(); ++i) {
        const std::string path = "predict.conditionals." + std::to_string(i);
        const Json& c = (*conds)[i];
        const BlockIndex target{convert<int>(required_node(c, "target", path), path + ".target")};
        if (target.value < 1 || target.value > spec.num_blocks()) throw ConfigError(path + ".target: no such block");
        const MixedPoint x = conditioning_point(config, c, spec, target, path);
        const auto points = grid_points(block_domain(spec, target), resolution);
        {
          auto out = run.open("conditional_" + std::to_string(i + 1) + ".csv");
          write_density_csv(out, predictive_conditional(draws, target, x, points));
        }
        if (spec.block_dim(target.value) == 2) {
          auto out = run.open("conditional_" + std::to_string(i + 1) + "_ellipse.csv");
          write_ellipse_csv(out, conditional_mean_region(draws, target, x));
        }
      }
    }
    run.complete();
  });
}

std::vector<std::string> cmd_simulate(const Json& config) {
  return guarded("simulate", config, [&](Run& run) {
    const Scenario s = [&] {
      try {
        return scenario_by_id(value_or<std::string>(config, "simulate.scenario", "I"));
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("simulate.scenario: ") + e.what());
      }
    }();
    const int n = required<int>(config, "simulate.n");
    if (n < 1) throw ConfigError("simulate.n: must be positive");
    const int datasets = value_or<int>(config, "simulate.datasets", 1);
    if (datasets < 1) throw ConfigError("simulate.datasets: must be positive");
    const auto seed = value_or<std::uint64_t>(config, "seed", 1);
    for (int r = 0; r < datasets; ++r) {
      Rng rng(derive_seed(seed, 2 * static_cast<std::uint64_t>(r)));
      const auto data = scenario_sample(s, n, rng);
      auto out = run.open("scenario_" + s.id + "_n" + std::to_string(n) + "_" + std::to_string(r + 1) + ".csv");
      write_dataset_csv(out, s.spec, data);
    }
    run.complete();
  });
}

std::vector<std::string> cmd_report(const Json& config) {
  return guarded("report", config, [&](Run& run) {
    const Scenario s = [&] {
      try {
        return scenario_by_id(value_or<std::string>(config, "report.scenario", "I"));
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("report.scenario: ") + e.what());
      }
    }();
    ReplicateOptions options;
    options.joint = l1_options_from(config, "report.joint");
    options.marginal_resolution = value_or<int>(config, "report.marginal_resolution", options.marginal_resolution);
    if (options.marginal_resolution < 4) throw ConfigError("report.marginal_resolution: must be at least 4");

    std::vector<ReplicateReport> reports;
    double runtime = 0.0;
    if (const Json* path = find(config, "report.draws")) {
      // evaluate an existing fit against the scenario truth
      const PosteriorDraws draws = load_draws(convert<std::string>(*path, "report.draws"));
      if (!(draws.spec() == s.spec)) throw ConfigError("report.draws: fit does not live on the scenario domain");
      ReplicateReport r;
      r.scenario = s.id;
      r.n = draws.n_obs;
      r.replicates = 1;
      r.variables = variable_names(s.spec);
      r.variables.push_back("joint");
      r.mpel1 = posterior_l1(s, draws, options);
      r.per_replicate = r.mpel1.transpose();
      reports.push_back(std::move(r));
      write_ellipses(run, config, find(config, "report.ellipses"), draws, "report.ellipses");
    } else {
      const Json& sizes = required_node(config, "report.sizes");
      if (!sizes.is_array() || sizes.empty()) throw ConfigError("report.sizes: expected a list of sample sizes");
      const int replicates = value_or<int>(config, "report.replicates", 10);
      if (replicates < 1) throw ConfigError("report.replicates: must be positive");
      if (find(config, "report.ellipses")) throw ConfigError("report.ellipses: only available with report.draws");
      const ModelConfig model = model_config_from(config, s.spec);
      const SamplerConfig sampler = sampler_config_from(config);
      for (std::size_t i = 0; i < sizes.size(); ++i) {
        const int n = convert<int>(sizes[i], "report.sizes." + std::to_string(i));
        if (n < 1) throw ConfigError("report.sizes." + std::to_string(i) + ": must be positive");
        reports.push_back(run_replicates(s, n, replicates, sampler, model, options));
        runtime += reports.back().runtime_seconds;
      }
    }
    {
      auto out = run.open("table.csv");
      write_table_csv(out, reports);
    }
    Json summary;
    summary["scenario"] = s.id;
    summary["variables"] = reports.front().variables;
    Json rows = Json::array();
    for (const auto& r : reports) {
      Json row;
      row["n"] = r.n;
      row["replicates"] = r.replicates;
      row["mpel1"] = std::vector<double>(r.mpel1.data(), r.mpel1.data() + r.mpel1.size());
      Json per = Json::array();
      for (Eigen::Index i = 0; i < r.per_replicate.rows(); ++i) {
        const Eigen::VectorXd v = r.per_replicate.row(i).transpose();
        per.push_back(std::vector<double>(v.data(), v.data() + v.size()));
      }
      row["per_replicate"] = per;
      row["atom_acceptance"] = r.atom_acceptance;
      row["degree_acceptance"] = r.degree_acceptance;
      rows.push_back(row);
    }
    summary["reports"] = rows;
    auto out = run.open("summary.json");
    out << summary.dump(2) << '\n';
    out.close();
    run.complete(runtime > 0.0 ? runtime : -1.0);
  });
}

int exit_code(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->category()) {
      case ErrorCategory::Config:
      case ErrorCategory::Argument:
        return 2;
      case ErrorCategory::Data:
        return 3;
      case ErrorCategory::Numeric:
        return 4;
    }
  }
  return 1;
}

}  // namespace dmbpp::cli
