#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "foxh/analysis.hpp"
#include "foxh/errors.hpp"
#include "foxh/gfhp.hpp"
#include "foxh/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace foxh;

namespace {

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsage = 2;

// Bad command-line input that the parser itself cannot catch.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int report_error(const std::string& kind, const std::string& message, int code, json extra = json::object()) {
  json err{{"error", kind}, {"message", message}, {"exit_code", code}};
  err.update(extra);
  std::cerr << err.dump() << '\n';
  return code;
}

int threads_from(const std::optional<int>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("FOXH_THREADS")) {
    const auto v = parse_double(env);
    if (!v || *v < 0 || *v != std::floor(*v)) throw UsageError("FOXH_THREADS must be a non-negative integer");
    return static_cast<int>(*v);
  }
  return 0;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void print(const json& doc) { std::cout << doc.dump(2) << '\n'; }

// ---- validate ----

// Density sampled on a log grid up to the effective support; non-negativity is
// only ever spot-checked, never proven.
nlohmann::json nonnegativity_spot_check(const FhdamSpec& spec) {
  if (spec.is_degenerate()) return {{"applicable", false}};
  const double hi = std::log10(support_upper(spec));
  const int n = 64;
  double min_value = INFINITY;
  for (int k = 0; k < n; ++k) {
    const double tau = std::pow(10.0, -3.0 + (hi + 3.0) * (k + 0.5) / n);
    min_value = std::min(min_value, density_eval(spec, tau));
  }
  return {{"applicable", true}, {"points", n}, {"min_value", min_value}, {"passed", min_value >= 0.0}};
}

int cmd_validate(const std::string& config_path) {
  const RunConfig cfg = load_run_config(config_path);
  const FhdamSpec spec = validate_params(cfg.process.params, cfg.process.class_tag);
  for (const auto& f : cfg.process.decomp.factors) check_factor(f);
  const MomentMatchReport moments = verify_decomposition(cfg.process.decomp, spec);
  if (!moments.passed) {
    const int l = *moments.first_failing_order;
    const std::size_t i = static_cast<std::size_t>(l - 1);
    return report_error("MomentMismatch",
                        "decomposition moment of order " + std::to_string(l) + " is " +
                            format_double(moments.decomposition_moments[i]) + ", spec moment is " +
                            format_double(moments.spec_moments[i]),
                        kDomainFailure, {{"first_failing_order", l}, {"moment_match", to_json(moments)}});
  }
  const GfhpConfig process = make_config(spec, cfg.process.decomp, cfg.process.hurst);
  const BermanReport berman = berman_check(process);
  if (!spec.entire())
    std::cerr << "warning: a* >= 1, the series has a finite radius of convergence; negative arguments use the "
                 "contour representation\n";
  print({{"status", "ok"},
         {"class", to_string(spec.class_tag())},
         {"p", spec.p()},
         {"m", spec.m()},
         {"entire", spec.entire()},
         {"hurst", process.hurst},
         {"derived_constants", to_json(spec.constants())},
         {"moment_match", to_json(moments)},
         {"berman", to_json(berman)},
         {"nonnegativity", nonnegativity_spot_check(spec)}});
  return kOk;
}

// ---- simulate ----

struct MomentSummary {
  double mean = 0.0;
  double se = 0.0;
};

MomentSummary empirical_moment(const TrajectorySet& ts, int k, int order) {
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < ts.n_paths; ++i) {
    const double v = std::pow(ts.at(i, k), order);
    s += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(ts.n_paths);
  const double mean = s / n;
  const double var = n > 1 ? std::max(0.0, (s2 - n * mean * mean) / (n - 1.0)) : 0.0;
  return {mean, std::sqrt(var / n)};
}

int cmd_simulate(const std::string& config_path, const std::optional<std::string>& out_flag,
                 const std::optional<std::uint64_t>& seed_flag, const std::optional<int>& threads_flag) {
  RunConfig cfg = load_run_config(config_path);
  if (seed_flag) cfg.seed = *seed_flag;
  if (out_flag) cfg.out_dir = *out_flag;
  const int threads = threads_from(threads_flag);
  const GfhpConfig process = build_config(cfg.process);
  SimOptions options;
  options.generator = cfg.generator;
  options.threads = threads;
  const TrajectorySet ts = simulate(process, cfg.grid, cfg.n_paths, cfg.seed, cfg.mode, options);

  const fs::path dir = cfg.out_dir;
  const fs::path csv = dir / "trajectories.csv";
  std::ostringstream body;
  write_trajectory_csv(body, ts);
  write_file(csv, body.str());
  write_file(sidecar_path(csv), trajectory_sidecar(cfg, ts).dump(2) + "\n");

  json summary = json::array();
  const int k = cfg.grid.n_steps;
  for (int order : {2, 4}) {
    const auto emp = empirical_moment(ts, k, order);
    const double analytic = analytic_moment(process, cfg.grid.t_max, order);
    summary.push_back({{"order", order},
                       {"t", cfg.grid.t_max},
                       {"empirical", emp.mean},
                       {"standard_error", emp.se},
                       {"analytic", analytic},
                       {"z_score", emp.se > 0 ? (emp.mean - analytic) / emp.se : 0.0}});
  }
  print({{"status", "ok"},
         {"csv", csv.generic_string()},
         {"sidecar", sidecar_path(csv).generic_string()},
         {"n_paths", ts.n_paths},
         {"n_steps", ts.grid.n_steps},
         {"seed", ts.seed},
         {"generator_tag", to_string(ts.generator)},
         {"mode", to_string(cfg.mode)},
         {"summary", summary}});
  return kOk;
}

// ---- eval ----

struct PointRow {
  long line = 0;
  std::vector<double> values;
};

std::vector<PointRow> read_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read points file " + path);
  std::vector<PointRow> rows;
  std::string line;
  long line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    PointRow row{line_no, {}};
    bool numeric = true;
    std::stringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      const auto v = parse_double(field);
      if (!v) {
        numeric = false;
        break;
      }
      row.values.push_back(*v);
    }
    if (!numeric) {
      if (first) {  // header
        first = false;
        continue;
      }
      throw UsageError("points file line " + std::to_string(line_no) + ": non-numeric field");
    }
    first = false;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string eval_header(const std::string& what, std::size_t arity) {
  std::string h;
  if (what == "moments") return "t,order,value";
  if (what == "covariance") return "t,s,value";
  const std::string second = what == "chf" ? "lambda_" : "x_";
  const std::size_t n = arity / 2;
  for (std::size_t i = 1; i <= n; ++i) h += "t_" + std::to_string(i) + ",";
  for (std::size_t i = 1; i <= n; ++i) h += second + std::to_string(i) + ",";
  return h + "value";
}

int cmd_eval(const std::string& what, const std::string& config_path, const std::string& points_path,
             const std::optional<std::string>& out_flag, int nodes) {
  const RunConfig cfg = load_run_config(config_path);
  const auto rows = read_points(points_path);
  if (rows.empty()) throw UsageError("points file has no data rows");
  const std::size_t arity = rows.front().values.size();
  for (const auto& r : rows) {
    const std::size_t got = r.values.size();
    const bool pairs = what == "chf" || what == "density";
    const bool ok = pairs ? (got >= 2 && got % 2 == 0 && got == arity) : got == 2;
    if (!ok) {
      const std::string expected = pairs ? std::to_string(arity) + " fields (times then " +
                                               (what == "chf" ? std::string("lambdas") : std::string("points")) + ")"
                                         : std::string("2 fields");
      throw UsageError("points file row at line " + std::to_string(r.line) + ": arity mismatch, expected " + expected +
                       ", got " + std::to_string(got));
    }
  }

  const GfhpConfig process = build_config(cfg.process);
  std::string out = eval_header(what, arity) + "\n";
  for (const auto& r : rows) {
    const auto& v = r.values;
    double value = 0.0;
    if (what == "chf" || what == "density") {
      const std::size_t n = v.size() / 2;
      const std::vector<double> times(v.begin(), v.begin() + n), second(v.begin() + n, v.end());
      value = what == "chf" ? char_fn(process, times, second) : joint_density(process, times, second, nodes);
    } else if (what == "moments") {
      if (v[1] < 0 || v[1] != std::floor(v[1]))
        throw UsageError("line " + std::to_string(r.line) + ": order must be a non-negative integer");
      value = analytic_moment(process, v[0], static_cast<int>(v[1]));
    } else {
      value = covariance(process, v[0], v[1]);
    }
    for (double x : v) out += format_double(x) + ",";
    out += format_double(value) + "\n";
  }
  if (out_flag)
    write_file(*out_flag, out);
  else
    std::cout << out;
  return kOk;
}

// ---- analyze ----

struct AnalyzeOptions {
  std::string input;
  std::optional<std::string> out;
  bool plot = false;
  std::vector<double> lags;
  std::size_t path = 0;
  std::optional<double> from, to;
  int bins = 100;
  std::vector<int> partitions;
  double c = 2.0;
  std::optional<double> t;
  std::optional<double> exponent;
};

void emit(const AnalyzeOptions& opt, const std::string& stem, const json& report, const std::string& csv,
          const std::string& svg = {}) {
  if (opt.out) {
    const fs::path dir = *opt.out;
    write_file(dir / (stem + ".json"), report.dump(2) + "\n");
    if (!csv.empty()) write_file(dir / (stem + ".csv"), csv);
  }
  if (!svg.empty()) write_file(fs::path(opt.out.value_or(".")) / (stem + ".svg"), svg);
  print(report);
}

int grid_index(const TimeGrid& grid, double t, const char* what) {
  const double units = t / grid.dt();
  const long k = std::lround(units);
  if (k < 0 || k > grid.n_steps || std::abs(units - k) > 1e-9 * std::max(1.0, units))
    throw UsageError(std::string(what) + " = " + format_double(t) + " is not a grid time");
  return static_cast<int>(k);
}

int cmd_analyze(const std::string& what, const AnalyzeOptions& opt) {
  const TrajectoryFile file = read_trajectory_file(opt.input);
  const TrajectorySet& ts = file.trajs;
  const TimeGrid& grid = ts.grid;

  if (what == "msd") {
    std::vector<double> lags = opt.lags.empty() ? dyadic_lags(grid) : opt.lags;
    for (double l : lags) grid_index(grid, l, "lag");
    const MsdReport rep = msd(ts, lags);
    json doc = to_json(rep);
    doc["hurst"] = ts.hurst;
    doc["expected_slope"] = 2.0 * ts.hurst;
    std::string csv = "lag,msd\n";
    for (std::size_t i = 0; i < rep.lags.size(); ++i)
      csv += format_double(rep.lags[i]) + "," + format_double(rep.msd[i]) + "\n";
    emit(opt, "msd", doc, csv, opt.plot ? msd_svg(rep, ts.hurst) : std::string{});
    return kOk;
  }

  if (what == "localtime") {
    if (opt.path >= ts.n_paths) throw UsageError("--path must be < " + std::to_string(ts.n_paths));
    if (opt.bins < 2) throw UsageError("--bins must be >= 2");
    const auto path = ts.path(opt.path);
    const auto [lo, hi] = std::minmax_element(path.begin(), path.end());
    const double pad = std::max(0.01 * (*hi - *lo), 0.5 * (*hi == *lo));
    const auto edges = uniform_edges(*lo - pad, *hi + pad, opt.bins);
    const std::pair<double, double> interval{opt.from.value_or(0.0), opt.to.value_or(grid.t_max)};
    if (interval.first < 0.0 || interval.second > grid.t_max * (1.0 + 1e-12))
      throw UsageError("--from/--to must lie within [0, t_max]");
    const auto est = local_time(path, grid, interval, edges);
    json doc = to_json(est);
    doc["path"] = opt.path;
    std::string csv = "bin_lo,bin_hi,value\n";
    for (std::size_t j = 0; j < est.values.size(); ++j)
      csv += format_double(edges[j]) + "," + format_double(edges[j + 1]) + "," + format_double(est.values[j]) + "\n";
    emit(opt, "localtime", doc, csv);
    return kOk;
  }

  if (what == "qv") {
    std::vector<int> parts = opt.partitions;
    if (parts.empty())
      for (int n = 1; n <= grid.n_steps; n *= 2)
        if (grid.n_steps % n == 0) parts.push_back(n);
    for (int n : parts)
      if (n < 1 || grid.n_steps % n != 0) throw UsageError("partition " + std::to_string(n) + " must divide n_steps");
    const GfhpConfig process = build_config(file.config.process);
    const double ey = fhdam_moment(process.spec, 1);
    const auto rows = quadratic_variation_scan(ts, parts);
    json table = json::array();
    std::string csv = "n,mean,se,expected\n";
    for (const auto& r : rows) {
      const double expected = ey * std::pow(grid.t_max, 2.0 * ts.hurst) * std::pow(r.n, 1.0 - 2.0 * ts.hurst);
      table.push_back({{"n", r.n}, {"mean", r.mean}, {"se", r.se}, {"expected", expected}});
      csv += std::to_string(r.n) + "," + format_double(r.mean) + "," + format_double(r.se) + "," +
             format_double(expected) + "\n";
    }
    emit(opt, "qv", {{"hurst", ts.hurst}, {"mean_mixing", ey}, {"rows", table}}, csv);
    return kOk;
  }

  // selfsim: X_t from the first half of the ensemble, c^{−H}X_{ct} from the second half
  if (!(opt.c > 0.0)) throw UsageError("--c must be positive");
  if (ts.n_paths < 2) throw UsageError("selfsim needs at least 2 paths");
  const double t = opt.t.value_or(grid.t_max / std::max(opt.c, 1.0));
  const int kt = grid_index(grid, t, "--t");
  const int kct = grid_index(grid, opt.c * t, "c·t");
  if (kt == 0 || kct == 0) throw UsageError("selfsim needs t > 0");
  const double h = opt.exponent.value_or(ts.hurst);
  const std::size_t half = ts.n_paths / 2;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < half; ++i) x.push_back(ts.at(i, kt));
  for (std::size_t i = half; i < ts.n_paths; ++i) y.push_back(std::pow(opt.c, -h) * ts.at(i, kct));
  const KsResult ks = ks_two_sample(x, y);
  emit(opt, "selfsim",
       {{"c", opt.c}, {"t", t}, {"exponent", h}, {"statistic", ks.statistic}, {"p_value", ks.p_value},
        {"n", {x.size(), y.size()}}},
       {});
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"foxh: generalized Fox-H processes: validation, simulation, evaluation and analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "foxh 1.0.0");

  std::string config, points, what;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  int nodes = 256;
  AnalyzeOptions analyze;

  auto* validate = app.add_subcommand("validate", "check a config: parameters, decomposition, Berman criterion");
  validate->add_option("--config", config, "JSON run config")->required();

  auto* sim = app.add_subcommand("simulate", "simulate trajectories to CSV plus JSON sidecar");
  sim->add_option("--config", config, "JSON run config")->required();
  sim->add_option("--out", out, "output directory (overrides output.directory)");
  sim->add_option("--seed", seed, "override ensemble.seed");
  sim->add_option("--threads", threads, "worker threads (0 = all; env FOXH_THREADS)")->check(CLI::NonNegativeNumber);

  auto* eval = app.add_subcommand("eval", "evaluate chf, density, moments or covariance at points");
  eval->add_option("what", what, "quantity")->required()->check(CLI::IsMember({"chf", "density", "moments", "covariance"}));
  eval->add_option("--config", config, "JSON run config")->required();
  eval->add_option("--points", points, "CSV of input rows")->required();
  eval->add_option("--out", out, "output CSV (default stdout)");
  eval->add_option("--nodes", nodes, "Gauss-Legendre nodes for density")->check(CLI::Range(8, 65536));
  eval->add_option("--threads", threads, "accepted for symmetry; evaluation is single-threaded");

  auto* an = app.add_subcommand("analyze", "analyze a trajectory file");
  an->add_option("what", what, "analysis")->required()->check(CLI::IsMember({"msd", "localtime", "qv", "selfsim"}));
  an->add_option("--input,--config", analyze.input, "trajectory CSV (sidecar next to it)")->required();
  an->add_option("--out", analyze.out, "output directory for JSON/CSV/SVG");
  an->add_flag("--plot", analyze.plot, "write an SVG log-log MSD plot");
  an->add_option("--lags", analyze.lags, "msd lags (default dyadic)")->delimiter(',');
  an->add_option("--path", analyze.path, "localtime: path index");
  an->add_option("--from", analyze.from, "localtime: interval start");
  an->add_option("--to", analyze.to, "localtime: interval end");
  an->add_option("--bins", analyze.bins, "localtime: number of spatial bins");
  an->add_option("--partitions", analyze.partitions, "qv: partition sizes")->delimiter(',');
  an->add_option("--c", analyze.c, "selfsim: scale factor");
  an->add_option("--t", analyze.t, "selfsim: base time");
  an->add_option("--exponent", analyze.exponent, "selfsim: scaling exponent (default H)");
  an->add_option("--seed", seed, "unused; accepted for a uniform interface");
  an->add_option("--threads", threads, "unused; analysis is single-threaded");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*validate) return cmd_validate(config);
    if (*sim) return cmd_simulate(config, out, seed, threads);
    if (*eval) return cmd_eval(what, config, points, out, nodes);
    if (*an) return cmd_analyze(what, analyze);
  } catch (const UsageError& e) {
    return report_error("UsageError", e.what(), kUsage);
  } catch (const Error& e) {
    const int code = e.kind() == ErrorKind::SchemaError ? kUsage : kDomainFailure;
    return report_error(std::string(to_string(e.kind())), e.what(), code);
  } catch (const std::exception& e) {
    return report_error("RuntimeError", e.what(), kDomainFailure);
  }
  return kUsage;
}
