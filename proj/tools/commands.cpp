#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "csv.hpp"
#include "rhoconcave/contours.hpp"
#include "rhoconcave/estimator.hpp"

namespace rhoconcave::cli {

namespace {

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr int kDefaultContourSpan = 20;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError(fmt::format("cannot write '{}'", path));
  f << content;
  if (!f) throw InputError(fmt::format("failed writing '{}'", path));
}

std::string default_prefix(const std::string& input, const std::string& fallback) {
  if (input.empty()) return fallback;
  std::filesystem::path p(input);
  return (p.parent_path() / p.stem()).string();
}

struct GridSpec {
  std::size_t a = 0;
  std::size_t b = 0;  ///< zero for a single count
};

GridSpec parse_grid(const std::string& s) {
  GridSpec g;
  const std::size_t x = s.find_first_of("xX");
  auto count = [&](std::string_view t) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || v == 0) {
      throw InputError(fmt::format("--grid expects N or AxB with positive integers, got '{}'", s));
    }
    return v;
  };
  if (x == std::string::npos) {
    g.a = count(s);
  } else {
    g.a = count(std::string_view(s).substr(0, x));
    g.b = count(std::string_view(s).substr(x + 1));
  }
  return g;
}

SolverOptions solver_options(const RunConfig& c) {
  SolverOptions o;
  o.gap_tol = c.tol;
  o.max_newton_iters = c.max_iter;
  try {
    o.validate();
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  return o;
}

void check_alpha(double alpha) {
  try {
    EntropySpec spec(alpha);
    if (!spec.satisfies_vanishing_tail()) throw std::invalid_argument("alpha = 0 is not supported by the fitter");
  } catch (const std::exception& e) {
    throw InputError(fmt::format("--alpha: {}", e.what()));
  }
}

std::vector<double> default_levels(std::span<const double> logf) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : logf) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  std::vector<double> levels;
  if (!(hi >= lo)) return levels;
  const double top = std::floor(hi);
  for (int k = 0; k <= kDefaultContourSpan && top - k > lo; ++k) levels.push_back(top - k);
  return levels;
}

std::string format_contours(const std::vector<Polyline>& lines) {
  std::string out = "polyline_id\tlevel\tclosed\tx1\tx2\n";
  for (std::size_t id = 0; id < lines.size(); ++id) {
    for (const Point2& p : lines[id].points) {
      out += fmt::format("{}\t{}\t{}\t{}\t{}\n", id, lines[id].level, lines[id].closed ? 1 : 0, p[0], p[1]);
    }
  }
  return out;
}

std::vector<double> contour_levels(const RunConfig& c, std::span<const double> logf, std::ostream& err) {
  if (!c.levels) return default_levels(logf);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : logf) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  for (double l : *c.levels) {
    if (!(l > lo && l < hi)) {
      err << fmt::format("warning: level {} lies outside the attained log-density range [{}, {}]\n", l, lo, hi);
    }
  }
  return *c.levels;
}

nlohmann::ordered_json diagnostics_json(const DensityEstimate& est) {
  const Diagnostics& d = est.diagnostics();
  nlohmann::ordered_json j;
  j["alpha"] = est.alpha();
  j["dim"] = est.dim();
  j["n"] = est.sample().size();
  j["m"] = est.gamma().size();
  if (est.dim() == 2) j["grid"] = {est.grid_2d().nx(), est.grid_2d().ny()};
  j["status"] = to_string(d.status);
  j["message"] = d.message;
  j["iterations"] = d.iterations;
  j["gap"] = d.gap;
  j["relative_gap"] = d.relative_gap;
  j["normalization"] = d.normalization;
  j["normalization_error"] = d.normalization_error;
  j["mean_match_error"] = d.mean_match_error;
  j["min_cone_residual"] = d.min_cone_residual;
  j["min_density"] = d.min_phi;
  j["kkt_residual"] = d.kkt_residual;
  j["log_likelihood_term"] = d.fidelity;
  if (est.dim() == 2) {
    j["off_hull_mass"] = d.off_hull_mass;
  } else {
    j["off_hull_mass"] = nullptr;
  }
  return j;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, '\t')) out.push_back(field);
  return out;
}

double tsv_number(const std::string& s, std::size_t row, std::size_t col) {
  double v = 0.0;
  if (!parse_number(s, v)) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw InputError(fmt::format("row {}, column {}: '{}' is not a number", row, col, s));
  }
  return v;
}

ExperimentTable experiment(const RunConfig& c) {
  ExperimentOptions opts;
  opts.threads = c.threads;
  if (!c.alphas.empty()) return run_experiment(c.targets, c.sizes, c.reps, c.alphas, c.seed, opts);
  // Each target fitted with the index matching its class.
  std::vector<std::string> lc, ht;
  for (const auto& t : c.targets) {
    (make_target(t).concavity == ConcavityClass::kLogConcave ? lc : ht).push_back(t);
  }
  ExperimentTable table;
  table.reps = c.reps;
  for (const auto& [group, alpha] : {std::pair{lc, 1.0}, std::pair{ht, 0.5}}) {
    if (group.empty()) continue;
    auto part = run_experiment(group, c.sizes, c.reps, {alpha}, c.seed, opts);
    for (auto& cell : part.cells) table.cells.push_back(std::move(cell));
  }
  std::sort(table.cells.begin(), table.cells.end(), [](const ExperimentCell& a, const ExperimentCell& b) {
    return std::tie(a.target, a.n, a.alpha) < std::tie(b.target, b.n, b.alpha);
  });
  return table;
}

}  // namespace

std::string format_table(const ExperimentTable& table) {
  std::string out = "target\tn\talpha\tmetric\tmean\tmedian\tfailures\treps\n";
  for (const auto& c : table.cells) {
    for (Metric m : {Metric::kHellinger, Metric::kL1}) {
      out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", c.target, c.n, c.alpha, to_string(m), c.mean(m),
                         c.median(m), c.failures, table.reps);
    }
  }
  return out;
}

std::string format_rates(const ExperimentTable& table, bool use_median) {
  std::string out = "alpha\tmetric\tstatistic\tbeta\tstd_err\tobservations\n";
  for (Metric m : {Metric::kL1, Metric::kHellinger}) {
    for (const RateEstimate& r : estimate_rate(table, m, use_median)) {
      out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", r.alpha, to_string(m), use_median ? "median" : "mean", r.beta,
                         r.std_err, r.observations);
    }
  }
  return out;
}

ExperimentTable parse_table(const std::string& text, bool use_median) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("experiment table is empty");
  const auto header = split_tabs(line);
  auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError(fmt::format("experiment table lacks a '{}' column", name));
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ct = col("target"), cn = col("n"), ca = col("alpha"), cm = col("metric");
  const std::size_t cv = col(use_median ? "median" : "mean");
  std::map<std::tuple<std::string, std::size_t, double>, ExperimentCell> cells;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != header.size()) throw InputError(fmt::format("row {}: expected {} fields", row, header.size()));
    const double n = tsv_number(f[cn], row, cn + 1);
    if (!(n >= 1.0) || n != std::floor(n)) throw InputError(fmt::format("row {}: n must be a positive integer", row));
    const double alpha = tsv_number(f[ca], row, ca + 1);
    const double v = tsv_number(f[cv], row, cv + 1);
    ExperimentCell& cell = cells[{f[ct], static_cast<std::size_t>(n), alpha}];
    cell.target = f[ct];
    cell.n = static_cast<std::size_t>(n);
    cell.alpha = alpha;
    if (f[cm] == "hellinger") {
      cell.hellinger = {v};
    } else if (f[cm] == "l1") {
      cell.l1 = {v};
    } else {
      throw InputError(fmt::format("row {}: unknown metric '{}'", row, f[cm]));
    }
  }
  ExperimentTable table;
  table.reps = 1;
  for (auto& [key, cell] : cells) table.cells.push_back(std::move(cell));
  return table;
}

int cmd_fit(const RunConfig& c, std::ostream& out, std::ostream& err) {
  check_alpha(c.alpha);
  FitOptions opts;
  opts.solver = solver_options(c);
  if (!(c.margin >= 0.0) || !std::isfinite(c.margin)) throw InputError("--margin must be a finite value >= 0");
  opts.margin = c.margin;
  const GridSpec grid = c.grid.empty() ? GridSpec{} : parse_grid(c.grid);

  const Sample sample = to_sample(read_csv(c.input));
  if (sample.dim() == 1) {
    if (grid.b != 0) throw InputError("--grid AxB applies to 2D input; use --grid N for 1D data");
    opts.grid_1d = grid.a;
  } else if (grid.a != 0) {
    opts.grid_x = grid.a;
    opts.grid_y = grid.b == 0 ? grid.a : grid.b;
    if (opts.grid_x < 5 || opts.grid_y < 5) throw InputError("--grid needs at least 5 nodes per axis in 2D");
  }
  if (sample.dim() == 1 && grid.a != 0 && grid.a < 3) throw InputError("--grid needs at least 3 nodes in 1D");

  const DensityEstimate est = fit(sample, c.alpha, opts);
  const std::string prefix = c.output_prefix.empty() ? default_prefix(c.input, "fit") : c.output_prefix;

  std::string tsv;
  const auto gamma = est.gamma();
  const auto phi = est.phi();
  if (est.dim() == 1) {
    const Grid1D& g = est.grid_1d();
    tsv = "xi\tg\tf\tcdf\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
      tsv += fmt::format("{}\t{}\t{}\t{}\n", g.xi[i], gamma[i], phi[i], cdf_1d(est, g.xi[i]));
    }
  } else {
    const Grid2D& g = est.grid_2d();
    tsv = "x1\tx2\tg\tf\n";
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Point2 p = g.node(k);
      tsv += fmt::format("{}\t{}\t{}\t{}\n", p[0], p[1], gamma[k], phi[k]);
    }
  }
  write_file(prefix + ".tsv", tsv);
  write_file(prefix + ".json", diagnostics_json(est).dump(2) + "\n");
  if (est.dim() == 2) {
    std::vector<double> logf(phi.size());
    for (std::size_t k = 0; k < phi.size(); ++k) logf[k] = std::log(phi[k]);
    const auto levels = contour_levels(c, logf, err);
    write_file(prefix + "_contours.tsv", format_contours(contour_lines(est.grid_2d(), logf, levels)));
  }

  const Diagnostics& d = est.diagnostics();
  out << fmt::format("status {} | iterations {} | normalization {} | relative gap {}\n", to_string(d.status),
                     d.iterations, d.normalization, d.relative_gap);
  if (d.status != SolverStatus::kConverged) {
    err << fmt::format("fit did not converge: {}\n", d.message);
    return kExitNotConverged;
  }
  return kExitConverged;
}

int cmd_contours(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const std::string text = read_file(c.input);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("fit table is empty");
  const auto header = split_tabs(line);
  auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError(fmt::format("fit table lacks a '{}' column (2D fit expected)", name));
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t cx = col("x1"), cy = col("x2"), cf = col("f");
  std::vector<Point2> nodes;
  std::vector<double> f;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != header.size()) throw InputError(fmt::format("row {}: expected {} fields", row, header.size()));
    nodes.push_back({tsv_number(fields[cx], row, cx + 1), tsv_number(fields[cy], row, cy + 1)});
    f.push_back(tsv_number(fields[cf], row, cf + 1));
  }
  std::set<double> xs, ys;
  for (const Point2& p : nodes) {
    xs.insert(p[0]);
    ys.insert(p[1]);
  }
  Grid2D grid;
  grid.x_coords.assign(xs.begin(), xs.end());
  grid.y_coords.assign(ys.begin(), ys.end());
  if (grid.nx() < 2 || grid.ny() < 2 || grid.size() != nodes.size()) {
    throw InputError("fit table does not hold a complete rectangular grid");
  }
  std::vector<double> logf(grid.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const std::size_t i = static_cast<std::size_t>(
        std::lower_bound(grid.x_coords.begin(), grid.x_coords.end(), nodes[k][0]) - grid.x_coords.begin());
    const std::size_t j = static_cast<std::size_t>(
        std::lower_bound(grid.y_coords.begin(), grid.y_coords.end(), nodes[k][1]) - grid.y_coords.begin());
    logf[grid.index(i, j)] = std::log(f[k]);
  }
  if (std::any_of(logf.begin(), logf.end(), [](double v) { return std::isnan(v); })) {
    throw InputError("fit table has duplicate or missing grid nodes");
  }
  const auto levels = contour_levels(c, logf, err);
  const auto lines = contour_lines(grid, logf, levels);
  const std::string prefix = c.output_prefix.empty() ? default_prefix(c.input, "fit") : c.output_prefix;
  write_file(prefix + "_contours.tsv", format_contours(lines));
  out << fmt::format("{} polylines over {} levels\n", lines.size(), levels.size());
  return kExitConverged;
}

int cmd_simulate(const RunConfig& c, std::ostream& out, std::ostream&) {
  const std::string prefix = c.output_prefix.empty() ? "simulate" : c.output_prefix;
  if (!c.table.empty()) {
    const ExperimentTable table = parse_table(read_file(c.table), c.median);
    const std::string rates = format_rates(table, c.median);
    write_file(prefix + "_rates.tsv", rates);
    out << rates;
    return kExitConverged;
  }
  if (c.targets.empty()) throw InputError("--targets is required");
  for (const auto& t : c.targets) {
    try {
      make_target(t);
    } catch (const std::exception& e) {
      throw InputError(e.what());
    }
  }
  if (c.sizes.empty()) throw InputError("--sizes is required");
  for (std::size_t n : c.sizes) {
    if (n < 2) throw InputError("--sizes entries must be at least 2");
  }
  if (c.reps < 2) throw InputError("--reps must be at least 2");
  for (double a : c.alphas) check_alpha(a);
  if (c.rates && std::set<std::size_t>(c.sizes.begin(), c.sizes.end()).size() < 2) {
    throw InputError("--rates needs at least two distinct sizes");
  }

  const ExperimentTable table = experiment(c);
  write_file(prefix + "_cells.tsv", format_table(table));
  std::size_t failures = 0;
  for (const auto& cell : table.cells) failures += cell.failures;
  out << fmt::format("{} cells, {} failed replicates\n", table.cells.size(), failures);
  if (c.rates) {
    const std::string rates = format_rates(table, c.median);
    write_file(prefix + "_rates.tsv", rates);
    out << rates;
  }
  return kExitConverged;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shape-constrained density estimation with rho-concave entropy fits"};
  app.require_subcommand(1);
  RunConfig c;
  std::vector<double> levels;

  auto* fit = app.add_subcommand("fit", "Fit a density to 1D or 2D CSV data");
  fit->add_option("--input", c.input, "CSV with one or two numeric columns")->required();
  fit->add_option("--alpha", c.alpha, "Renyi index (1 log-concave, 0.5 for -1/2-concave)");
  fit->add_option("--grid", c.grid, "Node count N (1D) or AxB (2D)");
  fit->add_option("--margin", c.margin, "2D bounding-box margin fraction");
  fit->add_option("--tol", c.tol, "Relative duality gap tolerance");
  fit->add_option("--max-iter", c.max_iter, "Newton iteration limit");
  fit->add_option("--output-prefix", c.output_prefix, "Prefix for .tsv/.json outputs");
  fit->add_option("--levels", levels, "Log-density contour levels (2D)")->delimiter(',')->allow_extra_args(false);

  auto* con = app.add_subcommand("contours", "Contour polylines from a 2D fit table");
  con->add_option("--input", c.input, "TSV written by fit for 2D data")->required();
  con->add_option("--levels", levels, "Log-density levels")->delimiter(',')->allow_extra_args(false);
  con->add_option("--output-prefix", c.output_prefix, "Prefix for the _contours.tsv output");

  auto* sim = app.add_subcommand("simulate", "Convergence-rate experiment");
  sim->add_option("--targets", c.targets, "Comma-separated target names")->delimiter(',');
  sim->add_option("--sizes", c.sizes, "Comma-separated sample sizes")->delimiter(',');
  sim->add_option("--reps", c.reps, "Replications per cell");
  sim->add_option("--alphas,--alpha", c.alphas, "Estimator indices; default matches each target's class")
      ->delimiter(',');
  sim->add_option("--seed", c.seed, "Base seed");
  sim->add_flag("--rates", c.rates, "Also estimate convergence rates");
  sim->add_flag("--median", c.median, "Rates from cell medians instead of means");
  sim->add_option("--table", c.table, "Existing _cells.tsv to estimate rates from");
  sim->add_option("--threads", c.threads, "Worker threads (0: hardware concurrency)");
  sim->add_option("--output-prefix", c.output_prefix, "Prefix for _cells.tsv/_rates.tsv outputs");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitConverged : kExitInputError;
  }
  if (fit->count("--levels") > 0 || con->count("--levels") > 0) c.levels = levels;

  try {
    if (*fit) {
      c.subcommand = "fit";
      return cmd_fit(c, out, err);
    }
    if (*con) {
      c.subcommand = "contours";
      return cmd_contours(c, out, err);
    }
    c.subcommand = "simulate";
    return cmd_simulate(c, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const CsvError& e) {
    err << "error: " << c.input << ": " << e.what() << "\n";
  } catch (const DegenerateSampleError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNotConverged;
  }
  return kExitInputError;
}

}  // namespace rhoconcave::cli
