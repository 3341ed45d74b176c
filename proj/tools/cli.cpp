#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>

#include "specinit/bounds.hpp"
#include "specinit/datamatrix.hpp"
#include "specinit/errors.hpp"
#include "specinit/metrics.hpp"
#include "specinit/serialization.hpp"
#include "specinit/spectral.hpp"
#include "specinit/synthgen.hpp"

namespace specinit::cli {

using nlohmann::json;

namespace {

struct RunConfig {
  std::string command;
  std::vector<std::string> inputs;
  std::string output;
  std::string truth;
  std::string report;
  std::string method = "spectral";
  std::string methods = "spectral,spectral-rot,chordal,odometry";
  std::string mode;  // empty: the graph's native mode
  std::uint64_t seed = 0;
  double tol = 1e-8;
  bool refine = false;
  int max_iter = 500;
  double grad_tol = 1e-6;
  int jobs = 1;
  std::string kappa = "1e4";
  std::string tau = "100";
  std::string plc = "0.1";
  std::string s = "10";
  int trials = 1;
  bool noiseless = false;
  std::optional<double> delta;
  double quantile = 0.5;

  json to_json() const {
    json j = {{"command", command}, {"seed", seed}, {"tol", tol}};
    if (command == "generate") {
      j.update({{"output", output}, {"s", s}, {"plc", plc}, {"kappa", kappa}, {"tau", tau},
                {"noiseless", noiseless}});
    } else if (command == "init") {
      j.update({{"input", inputs.empty() ? "" : inputs[0]}, {"method", method}, {"mode", mode},
                {"refine", refine}, {"max_iter", max_iter}, {"grad_tol", grad_tol},
                {"truth", truth}});
    } else if (command == "bounds") {
      j.update({{"input", inputs.empty() ? "" : inputs[0]}, {"truth", truth}, {"mode", mode},
                {"trials", trials}, {"quantile", quantile}});
      if (delta) j["delta"] = *delta;
    } else if (command == "sweep") {
      j.update({{"kappa", kappa}, {"tau", tau}, {"plc", plc}, {"s", s}, {"trials", trials},
                {"jobs", jobs}});
    } else if (command == "benchmark") {
      j.update({{"inputs", inputs}, {"methods", methods}, {"refine", refine},
                {"max_iter", max_iter}, {"grad_tol", grad_tol}, {"jobs", jobs}});
    }
    return j;
  }
};

// Exit code policy: bad flags, unreadable or malformed inputs -> 2,
// numerical failures -> 1.
int exit_code_for(const std::exception& ex) {
  if (dynamic_cast<const ArgumentError*>(&ex) || dynamic_cast<const ParseError*>(&ex) ||
      dynamic_cast<const MixedDimension*>(&ex) || dynamic_cast<const ModeError*>(&ex) ||
      dynamic_cast<const DimensionError*>(&ex))
    return 2;
  return 1;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string strip_extension(const std::string& path) {
  const std::filesystem::path p(path);
  return p.has_extension() ? (p.parent_path() / p.stem()).string() : path;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

PoseGraph load_graph(const std::string& path) {
  if (!std::filesystem::exists(path)) throw ArgumentError("input file '" + path + "' not found");
  return read_g2o_file(path);
}

Mode resolve_mode(const RunConfig& cfg, const PoseGraph& g) {
  if (cfg.mode == "rot") return Mode::RotationOnly;
  if (cfg.mode == "full") {
    if (!g.has_translations()) throw ModeError("--mode full needs translation measurements");
    return Mode::FullPose;
  }
  return g.mode;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

struct InitOutcome {
  RotationSet rotations;
  std::optional<Matrix> translations;  // set by methods that produce them
  std::optional<RelaxationSolution> relaxation;
  double init_ms = 0.0;
};

// Runs one initializer; only the initializer itself is timed.
InitOutcome initialize(const PoseGraph& g, const std::string& method, Mode mode,
                       const RunConfig& cfg) {
  SpectralOptions so;
  so.tol = cfg.tol;
  so.seed = cfg.seed;
  InitOutcome out;
  const auto start = std::chrono::steady_clock::now();
  if (method == "spectral" || method == "spectral-rot") {
    const Mode m = method == "spectral-rot" ? Mode::RotationOnly : mode;
    SpectralResult r = spectral_initialize(g, m, so);
    out.init_ms = elapsed_ms(start);
    out.rotations = std::move(r.rotations);
    out.relaxation = std::move(r.relaxation);
  } else if (method == "chordal") {
    out.rotations = chordal_initialize(g);
    out.init_ms = elapsed_ms(start);
  } else if (method == "odometry") {
    PoseSet p = odometry_initialize(g);
    out.init_ms = elapsed_ms(start);
    out.rotations = std::move(p.rotations);
    if (g.has_translations()) out.translations = std::move(p.translations);
  } else {
    throw ArgumentError("unknown method '" + method + "'");
  }
  return out;
}

RefineOptions refine_options(const RunConfig& cfg) {
  RefineOptions ro;
  ro.max_iter = cfg.max_iter;
  ro.grad_tol = cfg.grad_tol;
  return ro;
}

// ---------------------------------------------------------------------------

int cmd_generate(const RunConfig& cfg, std::ostream& out) {
  if (cfg.output.empty()) throw ArgumentError("generate needs --output");
  CubeParams p;
  try {
    p.s = std::stoi(cfg.s);
    p.p_lc = std::stod(cfg.plc);
    p.kappa = std::stod(cfg.kappa);
    p.tau = std::stod(cfg.tau);
  } catch (const std::logic_error&) {
    throw ArgumentError("generate takes single numeric values for --s, --plc, --kappa, --tau");
  }
  p.seed = cfg.seed;
  p.noiseless = cfg.noiseless;
  const GroundTruthInstance inst = generate_cube(p);

  std::ostringstream g2o;
  g2o << "# config=" << cfg.to_json().dump() << '\n';
  write_g2o(inst.graph, g2o);
  write_text_file(cfg.output, g2o.str());

  const std::string truth_path =
      cfg.truth.empty() ? strip_extension(cfg.output) + ".truth.json" : cfg.truth;
  json truth = ground_truth_to_json(inst);
  truth["config"] = cfg.to_json();
  write_text_file(truth_path, truth.dump(2) + "\n");

  out << "wrote " << inst.graph.n << " poses, " << inst.graph.edges.size() << " edges to "
      << cfg.output << " (ground truth: " << truth_path << ")\n";
  return 0;
}

int cmd_init(const RunConfig& cfg, std::ostream& out) {
  if (cfg.inputs.size() != 1) throw ArgumentError("init needs exactly one --input");
  const PoseGraph g = load_graph(cfg.inputs[0]);
  const Mode mode = resolve_mode(cfg, g);
  std::optional<PoseSet> truth;
  if (!cfg.truth.empty()) {
    truth = estimate_from_json(read_json_file(cfg.truth));
    if (truth->d() != g.d || truth->n() != g.n)
      throw DimensionError("ground truth does not match the input graph");
  }

  InitOutcome init = initialize(g, cfg.method, mode, cfg);
  const DataMatrixSet m = assemble(g, g.mode);

  json report = {{"config", cfg.to_json()},
                 {"method", cfg.method},
                 {"mode", mode == Mode::FullPose ? "full" : "rot"},
                 {"d", g.d},
                 {"n", g.n},
                 {"edges", g.edges.size()},
                 {"init_ms", init.init_ms},
                 {"cost_init", quadratic_form(m.q, init.rotations.data)}};
  if (init.relaxation) {
    const RelaxationSolution& r = *init.relaxation;
    report["eigenvalues"] = std::vector<double>(r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size());
    report["p_star"] = r.p_star;
    report["eigengap"] = std::isnan(r.eigengap) ? json(nullptr) : json(r.eigengap);
    report["matvecs"] = r.matvecs;
  }
  if (truth) report["d_S_init"] = so_orbit_distance(truth->rotations, init.rotations).distance;

  RotationSet final_rotations = init.rotations;
  if (cfg.refine) {
    RefineResult rr = refine(m.q, init.rotations, refine_options(cfg));
    report["cost_refined"] = rr.final_cost;
    report["refine_iterations"] = rr.iterations;
    report["refine_gradient_norm"] = rr.gradient_norm;
    report["refine_converged"] = rr.converged;
    report["refine_stalled"] = rr.stalled;
    final_rotations = std::move(rr.rotations);
    if (truth) report["d_S_refined"] = so_orbit_distance(truth->rotations, final_rotations).distance;
  } else {
    report["cost_refined"] = nullptr;
  }

  PoseSet estimate;
  if (g.has_translations()) {
    estimate = (init.translations && !cfg.refine) ? PoseSet{final_rotations, *init.translations}
                                                  : recover_translations(g, final_rotations);
  } else {
    estimate = {final_rotations, Matrix::Zero(g.d, g.n)};
  }

  if (!cfg.output.empty()) {
    if (ends_with(cfg.output, ".g2o")) {
      std::ostringstream os;
      os << "# config=" << cfg.to_json().dump() << '\n';
      write_g2o_vertices(estimate, os);
      write_text_file(cfg.output, os.str());
    } else {
      json j = g.has_translations() ? estimate_to_json(estimate) : estimate_to_json(estimate.rotations);
      j["config"] = cfg.to_json();
      write_text_file(cfg.output, j.dump(2) + "\n");
    }
    const std::string report_path =
        cfg.report.empty() ? strip_extension(cfg.output) + ".report.json" : cfg.report;
    write_text_file(report_path, report.dump(2) + "\n");
  } else if (!cfg.report.empty()) {
    write_text_file(cfg.report, report.dump(2) + "\n");
  }
  out << report.dump(2) << '\n';
  return 0;
}

int cmd_bounds(const RunConfig& cfg, std::ostream& out) {
  if (cfg.inputs.size() != 1) throw ArgumentError("bounds needs exactly one --input");
  const PoseGraph g = load_graph(cfg.inputs[0]);
  const Mode mode = resolve_mode(cfg, g);
  LanczosOptions lz;
  lz.tol = cfg.tol;
  lz.seed = cfg.seed;

  json result = {{"config", cfg.to_json()}, {"mode", mode == Mode::FullPose ? "full" : "rot"}};
  if (!cfg.truth.empty()) {
    const PoseSet truth = estimate_from_json(read_json_file(cfg.truth));
    const PoseGraph truth_graph = measurements_from_truth(g, truth);
    result["source"] = "ground truth";
    result["report"] = json::parse(instance_bounds(g, truth_graph, mode, lz).to_json());
  } else if (cfg.delta) {
    const double rho_gap = spectral_gap(g, lz);
    BoundReport r = evaluate_bounds(g.d, g.n, *cfg.delta, rho_gap, mode == Mode::FullPose);
    if (mode == Mode::RotationOnly) add_rotation_only_bound(r, *cfg.delta, rho_gap);
    result["source"] = "supplied perturbation norm";
    result["report"] = json::parse(r.to_json());
  } else {
    // Without ground truth only the rotational perturbation can be simulated.
    const MonteCarloResult mc = monte_carlo_delta_q(g, cfg.trials, cfg.seed, Mode::RotationOnly, std::nullopt, lz);
    BoundReport r = mc.bounds_at(cfg.quantile);
    add_rotation_only_bound(r, r.delta_q_norm, mc.lambda_gap);
    result["source"] = "monte carlo, rotation measurements";
    result["report"] = json::parse(r.to_json());
    result["monte_carlo"] = json::parse(mc.to_json({0.05, 0.5, 0.95}));
  }

  const std::string text = result.dump(2) + "\n";
  if (!cfg.output.empty()) write_text_file(cfg.output, text);
  out << text;
  return 0;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  SweepGrid grid;
  grid.kappa = parse_grid(cfg.kappa, true);
  grid.tau = parse_grid(cfg.tau, true);
  grid.p_lc = parse_grid(cfg.plc, false);
  for (double s : parse_grid(cfg.s, false)) {
    if (s != std::round(s)) throw ArgumentError("--s values must be integers");
    grid.s.push_back(static_cast<int>(s));
  }
  grid.trials = cfg.trials;
  grid.seed = cfg.seed;
  grid.tol = cfg.tol;
  grid.jobs = cfg.jobs;

  // Validate every cell before running anything.
  for (double k : grid.kappa)
    for (double t : grid.tau)
      for (double p : grid.p_lc)
        for (int s : grid.s) CubeParams{s, p, k, t, 0, false}.validate();

  const std::vector<SweepRow> rows = sweep(grid);

  std::ostringstream csv;
  csv << "# config=" << cfg.to_json().dump() << '\n';
  csv << "kappa,tau,p_lc,s,trial,seed,method,d_S_true,cost,lemma1_bound,thm3_bound,"
         "rot_only_bound,wall_ms,error\n";
  for (const auto& r : rows) {
    csv << fmt(r.kappa) << ',' << fmt(r.tau) << ',' << fmt(r.p_lc) << ',' << r.s << ',' << r.trial
        << ',' << r.seed << ',' << r.method << ',' << fmt(r.d_s_true) << ',' << fmt(r.cost) << ','
        << fmt(r.lemma1_bound) << ',' << fmt(r.thm3_bound) << ',' << fmt(r.rot_only_bound) << ','
        << fmt(r.wall_ms) << ',' << csv_escape(r.error) << '\n';
  }
  if (cfg.output.empty())
    out << csv.str();
  else
    write_text_file(cfg.output, csv.str());
  return 0;
}

struct BenchmarkRow {
  std::string dataset;
  std::string method;
  int n = 0;
  double init_ms = std::numeric_limits<double>::quiet_NaN();
  double cost_init = std::numeric_limits<double>::quiet_NaN();
  double cost_refined = std::numeric_limits<double>::quiet_NaN();
  int iterations = -1;
  std::string error;
};

int cmd_benchmark(const RunConfig& cfg, std::ostream& out) {
  if (cfg.inputs.empty()) throw ArgumentError("benchmark needs at least one dataset");
  std::vector<std::string> methods;
  {
    std::stringstream ss(cfg.methods);
    for (std::string m; std::getline(ss, m, ',');)
      if (!m.empty()) methods.push_back(m);
  }
  for (const auto& m : methods)
    if (m != "spectral" && m != "spectral-rot" && m != "chordal" && m != "odometry")
      throw ArgumentError("unknown method '" + m + "'");
  if (methods.empty()) throw ArgumentError("no methods selected");

  const int datasets = static_cast<int>(cfg.inputs.size());
  std::vector<std::vector<BenchmarkRow>> results(datasets);
#pragma omp parallel for schedule(dynamic) num_threads(std::max(cfg.jobs, 1))
  for (int k = 0; k < datasets; ++k) {
    const std::string& path = cfg.inputs[k];
    std::vector<BenchmarkRow>& rows = results[k];
    for (const auto& m : methods) {
      BenchmarkRow row;
      row.dataset = path;
      row.method = m;
      rows.push_back(std::move(row));
    }
    try {
      const PoseGraph g = load_graph(path);
      const DataMatrixSet q = assemble(g, g.mode);
      for (auto& row : rows) {
        row.n = g.n;
        try {
          const InitOutcome init = initialize(g, row.method, g.mode, cfg);
          row.init_ms = init.init_ms;
          row.cost_init = quadratic_form(q.q, init.rotations.data);
          if (cfg.refine) {
            const RefineResult rr = refine(q.q, init.rotations, refine_options(cfg));
            row.cost_refined = rr.final_cost;
            row.iterations = rr.iterations;
          }
        } catch (const std::exception& ex) {
          row.error = ex.what();
        }
      }
    } catch (const std::exception& ex) {
      for (auto& row : rows) row.error = ex.what();
    }
  }

  std::ostringstream csv;
  csv << "# config=" << cfg.to_json().dump() << '\n';
  csv << "dataset,method,n,init_ms,cost_init,cost_refined,refine_iterations,error\n";
  for (const auto& rows : results)
    for (const auto& r : rows)
      csv << csv_escape(r.dataset) << ',' << r.method << ',' << r.n << ',' << fmt(r.init_ms) << ','
          << fmt(r.cost_init) << ',' << fmt(r.cost_refined) << ',' << r.iterations << ','
          << csv_escape(r.error) << '\n';
  if (!cfg.output.empty()) write_text_file(cfg.output, csv.str());

  out << std::left << std::setw(28) << "dataset" << std::setw(14) << "method" << std::right
      << std::setw(8) << "n" << std::setw(12) << "init_ms" << std::setw(16) << "cost_init"
      << std::setw(16) << "cost_refined" << std::setw(8) << "iters" << "  error\n";
  for (const auto& rows : results)
    for (const auto& r : rows) {
      const std::string name = std::filesystem::path(r.dataset).filename().string();
      out << std::left << std::setw(28) << name << std::setw(14) << r.method << std::right
          << std::setw(8) << r.n << std::fixed << std::setprecision(2) << std::setw(12)
          << r.init_ms << std::setw(16) << r.cost_init << std::setw(16) << r.cost_refined
          << std::setw(8) << r.iterations << "  " << r.error << '\n';
      out.unsetf(std::ios::floatfield);
    }
  if (cfg.output.empty()) out << csv.str();
  return 0;
}

void add_common(CLI::App* app, RunConfig& cfg) {
  app->add_option("--seed", cfg.seed, "random seed");
  app->add_option("--tol", cfg.tol, "eigensolver tolerance, relative to the operator norm")
      ->check(CLI::PositiveNumber);
  app->add_option("--output,-o", cfg.output, "output path");
}

void add_mode(CLI::App* app, RunConfig& cfg) {
  app->add_option("--mode", cfg.mode, "rot | full (default: the input's native mode)")
      ->check(CLI::IsMember({"rot", "full"}));
}

void add_refine(CLI::App* app, RunConfig& cfg) {
  app->add_flag("--refine,!--no-refine", cfg.refine, "run first-order local refinement");
  app->add_option("--max-iter", cfg.max_iter, "refinement iteration cap")->check(CLI::NonNegativeNumber);
  app->add_option("--grad-tol", cfg.grad_tol, "refinement gradient-norm tolerance")
      ->check(CLI::PositiveNumber);
}

void add_cube(CLI::App* app, RunConfig& cfg, bool grid) {
  const char* suffix = grid ? " (min:max:count or a,b,c)" : "";
  app->add_option("--kappa", cfg.kappa, std::string("rotation concentration") + suffix);
  app->add_option("--tau", cfg.tau, std::string("translation precision") + suffix);
  app->add_option("--plc", cfg.plc, std::string("loop-closure probability") + suffix);
  app->add_option("--s", cfg.s, std::string("poses per cube side") + suffix);
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec, bool log_spaced) {
  auto number = [&](const std::string& tok) {
    try {
      size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::logic_error&) {
      throw ArgumentError("malformed grid value '" + tok + "' in '" + spec + "'");
    }
  };
  std::vector<std::string> parts;
  const char sep = spec.find(':') != std::string::npos ? ':' : ',';
  std::stringstream ss(spec);
  for (std::string tok; std::getline(ss, tok, sep);) parts.push_back(tok);
  if (parts.empty()) throw ArgumentError("empty grid");

  std::vector<double> out;
  if (sep == ':') {
    if (parts.size() != 3) throw ArgumentError("grid ranges take the form min:max:count");
    const double lo = number(parts[0]), hi = number(parts[1]);
    const double count_d = number(parts[2]);
    if (count_d < 1 || count_d != std::floor(count_d)) throw ArgumentError("grid count must be a positive integer");
    if (lo > hi) throw ArgumentError("grid minimum exceeds maximum in '" + spec + "'");
    if (log_spaced && lo <= 0) throw ArgumentError("log-spaced grid needs positive bounds");
    const int count = static_cast<int>(count_d);
    for (int k = 0; k < count; ++k) {
      const double f = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
      out.push_back(log_spaced ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)))
                               : lo + f * (hi - lo));
    }
    out.back() = count == 1 ? lo : hi;
  } else {
    for (const auto& p : parts) out.push_back(number(p));
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Spectral initialization for rotation averaging and pose-graph optimization"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "write a synthetic cube instance and its ground truth");
  add_common(gen, cfg);
  add_cube(gen, cfg, false);
  gen->add_flag("--noiseless", cfg.noiseless, "exact measurements");
  gen->add_option("--truth", cfg.truth, "ground-truth sidecar path (default <output stem>.truth.json)");

  auto* init = app.add_subcommand("init", "initialize a pose graph");
  add_common(init, cfg);
  add_mode(init, cfg);
  add_refine(init, cfg);
  init->add_option("--input,-i", cfg.inputs, "g2o file")->required()->expected(1);
  init->add_option("--method", cfg.method, "initializer")
      ->check(CLI::IsMember({"spectral", "spectral-rot", "chordal", "odometry"}));
  init->add_option("--truth", cfg.truth, "ground-truth sidecar for error reporting");
  init->add_option("--report", cfg.report, "report path (default <output stem>.report.json)");

  auto* bnd = app.add_subcommand("bounds", "evaluate worst-case error bounds");
  add_common(bnd, cfg);
  add_mode(bnd, cfg);
  bnd->add_option("--input,-i", cfg.inputs, "g2o file")->required()->expected(1);
  bnd->add_option("--truth", cfg.truth, "ground-truth sidecar (exact bounds)");
  bnd->add_option("--delta", cfg.delta, "known ||Delta Q||_2")->check(CLI::NonNegativeNumber);
  bnd->add_option("--trials", cfg.trials, "Monte Carlo trials when no truth or delta is given");
  bnd->add_option("--quantile", cfg.quantile, "reported quantile of the simulated norm")
      ->check(CLI::Range(0.0, 1.0));

  auto* swp = app.add_subcommand("sweep", "noise sweep over cube instances, CSV output");
  add_common(swp, cfg);
  add_cube(swp, cfg, true);
  swp->add_option("--trials", cfg.trials, "instances per cell");
  swp->add_option("--jobs,-j", cfg.jobs, "parallel instances");

  auto* bench = app.add_subcommand("benchmark", "compare initializers on g2o datasets");
  add_common(bench, cfg);
  add_refine(bench, cfg);
  bench->add_option("--input,-i,inputs", cfg.inputs, "g2o files");
  bench->add_option("--methods", cfg.methods, "comma-separated initializers");
  bench->add_option("--jobs,-j", cfg.jobs, "parallel datasets");

  bench->preparse_callback([&](std::size_t) { cfg.refine = true; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  cfg.command = app.get_subcommands().front()->get_name();
  try {
    if (cfg.command == "generate") return cmd_generate(cfg, out);
    if (cfg.command == "init") return cmd_init(cfg, out);
    if (cfg.command == "bounds") return cmd_bounds(cfg, out);
    if (cfg.command == "sweep") return cmd_sweep(cfg, out);
    if (cfg.command == "benchmark") return cmd_benchmark(cfg, out);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return exit_code_for(ex);
  }
  return 2;
}

}  // namespace specinit::cli
