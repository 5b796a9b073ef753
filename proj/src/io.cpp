#include "foxh/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "foxh/errors.hpp"

namespace foxh {
namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& what) { throw Error(ErrorKind::SchemaError, what); }

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) schema_error(where + " must be an object");
  const auto it = obj.find(key);
  if (it == obj.end()) schema_error(where + "." + key + " is missing");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) schema_error(where + " must be a number");
  return v.get<double>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
  const auto it = obj.find(key);
  return it == obj.end() ? fallback : number(*it, where + "." + key);
}

std::uint64_t unsigned_integer(const json& v, const std::string& where) {
  if (!v.is_number_unsigned()) schema_error(where + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string text(const json& v, const std::string& where) {
  if (!v.is_string()) schema_error(where + " must be a string");
  return v.get<std::string>();
}

void check_schema_version(const json& doc) {
  const std::string version = text(require(doc, "schema_version", "document"), "schema_version");
  const std::string major = version.substr(0, version.find('.'));
  if (major != "1") schema_error("unsupported schema_version " + version + " (this build reads 1.x)");
}

std::vector<ParamPair> parse_pairs(const json& v, const std::string& where) {
  if (!v.is_array()) schema_error(where + " must be an array of [shift, weight] pairs");
  std::vector<ParamPair> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    if (!v[i].is_array() || v[i].size() != 2) schema_error(at + " must be a [shift, weight] pair");
    out.push_back({number(v[i][0], at + "[0]"), number(v[i][1], at + "[1]")});
  }
  return out;
}

Factor parse_factor(const json& v, const std::string& where) {
  const std::string type = text(require(v, "type", where), where + ".type");
  const double power = number_or(v, "power", 1.0, where);
  if (type == "gamma")
    return GammaFactor{number(require(v, "shape", where), where + ".shape"), number_or(v, "scale", 1.0, where), power};
  if (type == "beta")
    return BetaFactor{number(require(v, "a", where), where + ".a"), number(require(v, "b", where), where + ".b"), power};
  if (type == "mwright") return MWrightFactor{number(require(v, "beta", where), where + ".beta"), power};
  schema_error(where + ".type must be one of gamma, beta, mwright");
}

FactorDecomposition parse_decomposition(const json& v, const std::string& where) {
  if (!v.is_array()) schema_error(where + " must be an array");
  FactorDecomposition d;
  for (std::size_t i = 0; i < v.size(); ++i) d.factors.push_back(parse_factor(v[i], where + "[" + std::to_string(i) + "]"));
  return d;
}

ProcessBlock parse_process(const json& hurst, const json& spec, const json* decomp, const std::string& where) {
  ProcessBlock p;
  p.hurst = number(hurst, where + ".hurst");
  p.params.upper = spec.contains("upper") ? parse_pairs(spec["upper"], where + ".spec.upper") : std::vector<ParamPair>{};
  p.params.lower = spec.contains("lower") ? parse_pairs(spec["lower"], where + ".spec.lower") : std::vector<ParamPair>{};
  if (spec.contains("class")) {
    const std::string tag = text(spec["class"], where + ".spec.class");
    p.class_tag = parse_class_tag(tag);
    if (!p.class_tag) schema_error(where + ".spec.class: unknown class " + tag);
  }
  if (decomp) p.decomp = parse_decomposition(*decomp, where + ".decomposition");
  return p;
}

TimeGrid parse_grid(const json& g) {
  const double t_max = number(require(g, "t_max", "grid"), "grid.t_max");
  const json& steps = require(g, "n_steps", "grid");
  if (!steps.is_number_integer()) schema_error("grid.n_steps must be an integer");
  const auto n = steps.get<long long>();
  if (n < 1) schema_error("grid.n_steps must be >= 1, got " + std::to_string(n));
  if (n > (1LL << 30)) schema_error("grid.n_steps is too large");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) schema_error("grid.t_max must be positive");
  return {t_max, static_cast<int>(n)};
}

json spec_json(const ProcessBlock& p) {
  json spec = to_json(p.params);
  if (p.class_tag) spec["class"] = std::string(to_string(*p.class_tag));
  return spec;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
  try {
    if (!doc.is_object()) schema_error("config must be a JSON object");
    check_schema_version(doc);
    RunConfig cfg;
    const json& process = require(doc, "process", "config");
    const auto decomp_it = process.find("decomposition");
    cfg.process = parse_process(require(process, "hurst", "process"), require(process, "spec", "process"),
                                decomp_it == process.end() ? nullptr : &*decomp_it, "process");
    cfg.grid = doc.contains("grid") ? parse_grid(doc["grid"]) : TimeGrid{1.0, 256};
    if (doc.contains("ensemble")) {
      const json& e = doc["ensemble"];
      if (!e.is_object()) schema_error("ensemble must be an object");
      if (e.contains("n_paths")) {
        const auto n = unsigned_integer(e["n_paths"], "ensemble.n_paths");
        if (n < 1) schema_error("ensemble.n_paths must be >= 1");
        cfg.n_paths = n;
      }
      if (e.contains("seed")) cfg.seed = unsigned_integer(e["seed"], "ensemble.seed");
    }
    if (doc.contains("simulation")) {
      const json& s = doc["simulation"];
      if (!s.is_object()) schema_error("simulation must be an object");
      if (s.contains("mode")) {
        const auto m = parse_sim_mode(text(s["mode"], "simulation.mode"));
        if (!m) schema_error("simulation.mode must be scale or time_change");
        cfg.mode = *m;
      }
      if (s.contains("generator")) {
        const auto g = parse_generator(text(s["generator"], "simulation.generator"));
        if (!g) schema_error("simulation.generator must be circulant or cholesky");
        cfg.generator = *g;
      }
    }
    if (doc.contains("output")) {
      const json& o = doc["output"];
      if (!o.is_object()) schema_error("output must be an object");
      if (o.contains("directory")) cfg.out_dir = text(o["directory"], "output.directory");
      if (o.contains("formats")) {
        cfg.formats.clear();
        for (const auto& f : o["formats"]) cfg.formats.push_back(text(f, "output.formats[]"));
      }
    }
    return cfg;
  } catch (const json::exception& e) {
    schema_error(e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) schema_error("cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    schema_error("malformed JSON in " + path.string() + ": " + e.what());
  }
  return parse_run_config(doc);
}

json to_json(const WrightParams& params) {
  json upper = json::array(), lower = json::array();
  for (const auto& [a, alpha] : params.upper) upper.push_back({a, alpha});
  for (const auto& [b, beta] : params.lower) lower.push_back({b, beta});
  return {{"upper", upper}, {"lower", lower}};
}

json to_json(const FactorDecomposition& decomp) {
  json out = json::array();
  for (const auto& f : decomp.factors) {
    if (const auto* g = std::get_if<GammaFactor>(&f))
      out.push_back({{"type", "gamma"}, {"shape", g->shape}, {"scale", g->scale}, {"power", g->power}});
    else if (const auto* b = std::get_if<BetaFactor>(&f))
      out.push_back({{"type", "beta"}, {"a", b->a}, {"b", b->b}, {"power", b->power}});
    else if (const auto* m = std::get_if<MWrightFactor>(&f))
      out.push_back({{"type", "mwright"}, {"beta", m->beta}, {"power", m->power}});
  }
  return out;
}

json to_json(const RunConfig& config) {
  return {{"schema_version", kSchemaVersion},
          {"process",
           {{"hurst", config.process.hurst},
            {"spec", spec_json(config.process)},
            {"decomposition", to_json(config.process.decomp)}}},
          {"grid", {{"t_max", config.grid.t_max}, {"n_steps", config.grid.n_steps}}},
          {"ensemble", {{"n_paths", config.n_paths}, {"seed", config.seed}}},
          {"simulation", {{"mode", to_string(config.mode)}, {"generator", to_string(config.generator)}}},
          {"output", {{"directory", config.out_dir}, {"formats", config.formats}}}};
}

GfhpConfig build_config(const ProcessBlock& process) {
  return make_config(validate_params(process.params, process.class_tag), process.decomp, process.hurst);
}

json to_json(const DerivedConstants& c) {
  return {{"a_star", c.a_star}, {"Delta", c.delta_cap}, {"delta", c.delta_small},
          {"mu", c.mu},         {"rho", c.rho},         {"K", c.k_norm}};
}

json to_json(const MomentMatchReport& r) {
  json rows = json::array();
  for (std::size_t i = 0; i < r.orders.size(); ++i)
    rows.push_back({{"order", r.orders[i]},
                    {"decomposition", r.decomposition_moments[i]},
                    {"spec", r.spec_moments[i]},
                    {"relative_error", r.relative_errors[i]}});
  json out{{"passed", r.passed}, {"table", rows}};
  if (r.first_failing_order) out["first_failing_order"] = *r.first_failing_order;
  return out;
}

json to_json(const BermanReport& r) {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json out{{"mellin_half", finite_or_null(r.mellin_half)},
           {"mellin_half_analytic", finite_or_null(r.mellin_half_analytic)},
           {"time_integral", finite_or_null(r.time_integral)},
           {"condition_holds", r.condition_holds},
           {"finite", r.finite}};
  if (r.issue) out["issue"] = std::string(to_string(*r.issue));
  return out;
}

json to_json(const MsdReport& r) {
  return {{"lags", r.lags},
          {"msd", r.msd},
          {"slope", r.slope},
          {"slope_ci", {r.slope_ci.first, r.slope_ci.second}},
          {"classification", to_string(r.classification)}};
}

json to_json(const LocalTimeEstimate& e) {
  return {{"interval", {e.interval.first, e.interval.second}},
          {"mass", e.mass},
          {"interval_length", e.interval.second - e.interval.first},
          {"outside_time", e.outside_time},
          {"n_bins", e.values.size()}};
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

void write_trajectory_csv(std::ostream& out, const TrajectorySet& trajs) {
  std::string line = "t";
  for (std::size_t i = 0; i < trajs.n_paths; ++i) line += ",path_" + std::to_string(i);
  out << line << '\n';
  for (int k = 0; k <= trajs.grid.n_steps; ++k) {
    line = format_double(trajs.grid.time(k));
    for (std::size_t i = 0; i < trajs.n_paths; ++i) {
      line += ',';
      line += format_double(trajs.at(i, k));
    }
    out << line << '\n';
  }
}

json trajectory_sidecar(const RunConfig& config, const TrajectorySet& trajs) {
  return {{"schema_version", kSchemaVersion},
          {"hurst", trajs.hurst},
          {"spec", spec_json(config.process)},
          {"decomposition", to_json(config.process.decomp)},
          {"seed", trajs.seed},
          {"generator_tag", to_string(trajs.generator)},
          {"mode", to_string(config.mode)},
          {"grid", {{"t_max", trajs.grid.t_max}, {"n_steps", trajs.grid.n_steps}}},
          {"n_paths", trajs.n_paths}};
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".json");
  return p;
}

TrajectoryFile read_trajectory_file(const std::filesystem::path& csv) {
  TrajectoryFile file;
  const auto side = sidecar_path(csv);
  std::ifstream side_in(side);
  if (!side_in) schema_error("missing sidecar " + side.string());
  try {
    const json doc = json::parse(side_in);
    check_schema_version(doc);
    const auto decomp_it = doc.find("decomposition");
    file.config.process = parse_process(require(doc, "hurst", "sidecar"), require(doc, "spec", "sidecar"),
                                        decomp_it == doc.end() ? nullptr : &*decomp_it, "sidecar");
    file.config.grid = parse_grid(require(doc, "grid", "sidecar"));
    file.config.seed = unsigned_integer(require(doc, "seed", "sidecar"), "sidecar.seed");
    file.config.n_paths = unsigned_integer(require(doc, "n_paths", "sidecar"), "sidecar.n_paths");
    const auto gen = parse_generator(text(require(doc, "generator_tag", "sidecar"), "sidecar.generator_tag"));
    if (!gen) schema_error("sidecar.generator_tag must be circulant or cholesky");
    file.config.generator = *gen;
    if (doc.contains("mode")) {
      const auto m = parse_sim_mode(text(doc["mode"], "sidecar.mode"));
      if (!m) schema_error("sidecar.mode must be scale or time_change");
      file.config.mode = *m;
    }
  } catch (const json::exception& e) {
    schema_error("sidecar " + side.string() + ": " + e.what());
  }
  const RunConfig& cfg = file.config;
  if (cfg.n_paths < 1) schema_error("sidecar.n_paths must be >= 1");

  std::ifstream in(csv, std::ios::binary);
  if (!in) schema_error("cannot read " + csv.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string content = buffer.str();

  TrajectorySet& ts = file.trajs;
  ts.grid = cfg.grid;
  ts.n_paths = cfg.n_paths;
  ts.hurst = cfg.process.hurst;
  ts.seed = cfg.seed;
  ts.generator = cfg.generator;
  ts.values.assign(ts.n_paths * ts.row_size(), 0.0);

  std::size_t pos = 0;
  long row = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= content.size()) return false;
    std::size_t end = content.find('\n', pos);
    if (end == std::string::npos) end = content.size();
    line = std::string_view(content).substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    return true;
  };
  std::string_view line;
  if (!next_line(line)) schema_error(csv.string() + " is empty");
  const auto header = split(line, ',');
  if (header.size() != ts.n_paths + 1 || header[0] != "t")
    schema_error("header must be t,path_0,...,path_" + std::to_string(ts.n_paths - 1));
  for (std::size_t i = 0; i < ts.n_paths; ++i)
    if (header[i + 1] != "path_" + std::to_string(i)) schema_error("header column " + std::to_string(i + 1) + " must be path_" + std::to_string(i));

  while (next_line(line)) {
    if (line.empty() && pos >= content.size()) break;
    ++row;
    if (row > ts.grid.n_steps + 1) schema_error("more rows than grid.n_steps + 1");
    const auto fields = split(line, ',');
    if (fields.size() != ts.n_paths + 1)
      schema_error("row " + std::to_string(row) + " has " + std::to_string(fields.size()) + " fields, expected " +
                   std::to_string(ts.n_paths + 1));
    const int k = static_cast<int>(row - 1);
    const auto t = parse_double(fields[0]);
    if (!t || std::abs(*t - ts.grid.time(k)) > 1e-9 * ts.grid.t_max)
      schema_error("row " + std::to_string(row) + ": time does not match the sidecar grid");
    for (std::size_t i = 0; i < ts.n_paths; ++i) {
      const auto v = parse_double(fields[i + 1]);
      if (!v) schema_error("row " + std::to_string(row) + ": unparsable value in column " + std::to_string(i + 1));
      ts.values[i * ts.row_size() + static_cast<std::size_t>(k)] = *v;
    }
  }
  if (row != ts.grid.n_steps + 1)
    schema_error("expected " + std::to_string(ts.grid.n_steps + 1) + " data rows, found " + std::to_string(row));
  return file;
}

std::string msd_svg(const MsdReport& report, double hurst) {
  const double width = 640, height = 440, left = 70, right = 20, top = 40, bottom = 60;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < report.lags.size(); ++i) {
    lx.push_back(std::log10(report.lags[i]));
    ly.push_back(std::log10(report.msd[i]));
  }
  const auto [xmin_it, xmax_it] = std::minmax_element(lx.begin(), lx.end());
  const auto [ymin_it, ymax_it] = std::minmax_element(ly.begin(), ly.end());
  const double x0 = std::floor(*xmin_it), x1 = std::ceil(*xmax_it);
  const double y0 = std::floor(*ymin_it), y1 = std::ceil(*ymax_it);
  auto px = [&](double x) { return left + (x - x0) / std::max(x1 - x0, 1e-9) * (width - left - right); };
  auto py = [&](double y) { return height - bottom - (y - y0) / std::max(y1 - y0, 1e-9) * (height - top - bottom); };

  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  const double intercept = my - report.slope * mx;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right << "\" y2=\""
      << height - bottom << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << height - bottom
      << "\" stroke=\"black\"/>\n";
  for (double d = x0; d <= x1 + 1e-9; d += 1.0)
    svg << "<text x=\"" << px(d) << "\" y=\"" << height - bottom + 18 << "\" text-anchor=\"middle\">1e" << d
        << "</text>\n";
  for (double d = y0; d <= y1 + 1e-9; d += 1.0)
    svg << "<text x=\"" << left - 8 << "\" y=\"" << py(d) + 4 << "\" text-anchor=\"end\">1e" << d << "</text>\n";
  svg << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 15
      << "\" text-anchor=\"middle\">lag</text>\n";
  svg << "<text x=\"18\" y=\"" << (top + height - bottom) / 2 << "\" transform=\"rotate(-90 18 "
      << (top + height - bottom) / 2 << ")\" text-anchor=\"middle\">MSD</text>\n";
  svg << "<line x1=\"" << px(x0) << "\" y1=\"" << py(intercept + report.slope * x0) << "\" x2=\"" << px(x1)
      << "\" y2=\"" << py(intercept + report.slope * x1) << "\" stroke=\"#c0392b\" stroke-width=\"1.5\"/>\n";
  for (std::size_t i = 0; i < lx.size(); ++i)
    svg << "<circle cx=\"" << px(lx[i]) << "\" cy=\"" << py(ly[i]) << "\" r=\"3.5\" fill=\"#2c3e50\"/>\n";
  svg << "<text x=\"" << left + 10 << "\" y=\"" << top - 12 << "\">slope " << fixed(report.slope) << " (95% CI "
      << fixed(report.slope_ci.first) << " to " << fixed(report.slope_ci.second) << "), 2H = " << fixed(2 * hurst)
      << ", " << to_string(report.classification) << "-diffusion</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace foxh
