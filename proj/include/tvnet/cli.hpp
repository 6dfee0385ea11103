#pragma once

// Command-line front end: estimate, grid-search, simulate, evaluate and
// experiment subcommands. Failures are printed to stderr as one JSON object
// naming the error category; each category has its own exit code.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tvnet/error.hpp"
#include "tvnet/graph.hpp"
#include "tvnet/io.hpp"
#include "tvnet/parallel.hpp"
#include "tvnet/selection.hpp"
#include "tvnet/synthetic.hpp"

namespace tvnet {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

inline int exit_code_for(const std::string& category) {
  if (category == "usage") return kExitUsage;
  if (category == "invalid_argument") return 3;
  if (category == "parse") return 4;
  if (category == "validation") return 5;
  if (category == "io") return 6;
  if (category == "convergence") return 7;
  if (category == "capacity") return 8;
  if (category == "empty_window") return 9;
  if (category == "generation") return 10;
  return kExitInternal;
}

namespace detail {

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error("usage", what) {}
};

inline int report_error(std::ostream& err, const std::string& category, const std::string& message) {
  const int code = exit_code_for(category);
  nlohmann::json j;
  j["error"] = {{"category", category}, {"message", message}, {"exit_code", code}};
  err << j.dump() << '\n';
  return code;
}

struct IngestArgs {
  std::string input;
  std::string format = "csv";
  bool header = false;
  std::string time_column;
  std::string value_map = "pm1";
  std::string missing_policy = "fill_minus_one";
  std::vector<std::string> missing_tokens;

  void add_to(CLI::App* app) {
    app->add_option("--input", input, "Observation file (rows = observations, columns = variables)")->required();
    app->add_option("--format", format, "csv or tsv")->capture_default_str();
    app->add_flag("--header", header, "First line holds column names");
    app->add_option("--time-column", time_column, "Time column (name with --header, else 0-based index)");
    app->add_option("--value-map", value_map, "pm1 (values -1/+1) or 01 (0 -> -1, 1 -> +1)")->capture_default_str();
    app->add_option("--missing-policy", missing_policy, "fill_minus_one, drop_row or error")->capture_default_str();
    app->add_option("--missing-token", missing_tokens, "Tokens treated as missing (default: NA and the empty field)");
  }

  IngestionConfig config() const {
    IngestionConfig cfg;
    cfg.path = input;
    cfg.format = parse_input_format(format);
    cfg.has_header = header;
    if (!time_column.empty()) cfg.time_column = time_column;
    cfg.value_map = parse_value_map(value_map);
    cfg.missing_policy = parse_missing_policy(missing_policy);
    if (!missing_tokens.empty()) cfg.missing_tokens = missing_tokens;
    return cfg;
  }

  nlohmann::json to_json() const {
    return {{"format", format},           {"header", header},
            {"time_column", time_column}, {"value_map", value_map},
            {"missing_policy", missing_policy}, {"missing_tokens", config().missing_tokens}};
  }
};

inline std::vector<std::string> argv_vector(int argc, const char* const* argv) {
  return std::vector<std::string>(argv, argv + argc);
}

inline KernelKind parse_kernel(const std::string& s) {
  if (s == "epanechnikov") return KernelKind::epanechnikov;
  if (s == "boxcar") return KernelKind::boxcar;
  throw InvalidArgument("unknown kernel '" + s + "'");
}

inline Table bic_table(const BICReport& report, std::size_t p) {
  const std::string second = report.method == Method::smooth ? "bandwidth"
                             : report.method == Method::tv   ? "lambda_tv"
                                                             : "unused";
  Table t{{"lambda1", second, "average_bic", "valid", "selected"}, {}};
  for (std::size_t u = 0; u < p; ++u) t.header.push_back("node_" + std::to_string(u));
  for (std::size_t c = 0; c < report.cells.size(); ++c) {
    const BICCell& cell = report.cells[c];
    std::vector<std::string> row{format_double(cell.lambda1), format_double(cell.second), format_double(cell.average),
                                 cell.valid ? "1" : "0", c == report.selected ? "1" : "0"};
    for (double b : cell.node_bic) row.push_back(format_double(b));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline void write_estimate_outputs(const std::filesystem::path& out, const std::vector<NodeParamPath>& paths,
                                   const Dataset& data, Symmetrization sym, double zero_eps) {
  write_file(out / "edges.jsonl", edges_to_jsonl(assemble_graphs(paths, data.times(), sym, zero_eps)));
  write_file(out / "paths.tsv", paths_to_tsv(paths, data.times()));
}

inline void write_manifest(const std::filesystem::path& out, RunManifest m) {
  m.finished = utc_timestamp();
  write_file(out / "manifest.json", m.to_json().dump(2) + "\n");
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Time-varying Ising graph estimation: kernel-smoothed and total-variation neighborhood selection"};
  app.set_version_flag("--version", kSoftwareVersion);
  app.require_subcommand(1);

  int threads_arg = 0;
  std::string out_dir;
  const char* threads_help = "Worker threads (default: TVNET_THREADS, else 1); results do not depend on it";

  // estimate
  CLI::App* est = app.add_subcommand("estimate", "Estimate a graph sequence at fixed tuning values");
  detail::IngestArgs est_in;
  est_in.add_to(est);
  std::string est_method, est_kernel = "epanechnikov", est_sym = "max";
  double est_lambda1 = 0.0;
  std::optional<double> est_bandwidth, est_lambda_tv;
  std::uint64_t est_seed = 0;
  est->add_option("--method", est_method, "smooth, tv or static")->required();
  est->add_option("--lambda1", est_lambda1, "L1 penalty")->required();
  est->add_option("--bandwidth", est_bandwidth,
                  "Kernel bandwidth for --method smooth (default: median heuristic on the time grid)");
  est->add_option("--lambda-tv", est_lambda_tv, "Total-variation penalty, required for --method tv");
  est->add_option("--kernel", est_kernel, "epanechnikov or boxcar")->capture_default_str();
  est->add_option("--symmetrize", est_sym, "min or max")->capture_default_str();
  est->add_option("--threads", threads_arg, threads_help);
  est->add_option("--seed", est_seed, "Recorded in the manifest; estimation itself is deterministic");
  est->add_option("--out", out_dir, "Output directory")->required();
  est->footer(
      "Reference tuning on the U.S. Senate voting data: smooth h = 0.174 with lambda1 = 0.195; "
      "tv lambda1 = 0.24 with lambda_tv = 0.28.");

  // grid-search
  CLI::App* gs = app.add_subcommand("grid-search", "Select tuning values by BIC over a grid and estimate");
  detail::IngestArgs gs_in;
  gs_in.add_to(gs);
  std::string gs_method, gs_kernel = "epanechnikov", gs_sym = "max";
  double l1_min = 0.01, l1_max = 0.3, ltv_min = 0.05, ltv_max = 0.3;
  std::size_t l1_count = 100, ltv_count = 10;
  std::vector<double> gs_bandwidths;
  gs->add_option("--method", gs_method, "smooth, tv or static")->required();
  gs->add_option("--lambda1-min", l1_min, "Smallest lambda1")->capture_default_str();
  gs->add_option("--lambda1-max", l1_max, "Largest lambda1")->capture_default_str();
  gs->add_option("--lambda1-count", l1_count, "Log-spaced lambda1 values")->capture_default_str();
  CLI::Option* o_bw = gs->add_option("--bandwidths", gs_bandwidths, "Bandwidth grid (default 0.05, 0.10, ..., 0.50)");
  CLI::Option* o_tvmin = gs->add_option("--lambda-tv-min", ltv_min, "Smallest lambda_tv")->capture_default_str();
  CLI::Option* o_tvmax = gs->add_option("--lambda-tv-max", ltv_max, "Largest lambda_tv")->capture_default_str();
  CLI::Option* o_tvn = gs->add_option("--lambda-tv-count", ltv_count, "Log-spaced lambda_tv values")->capture_default_str();
  gs->add_option("--kernel", gs_kernel, "epanechnikov or boxcar")->capture_default_str();
  gs->add_option("--symmetrize", gs_sym, "min or max")->capture_default_str();
  gs->add_option("--threads", threads_arg, threads_help);
  gs->add_option("--out", out_dir, "Output directory")->required();
  gs->footer(
      "Selections reported on the U.S. Senate voting data: smooth h = 0.174, lambda1 = 0.195; "
      "tv lambda1 = 0.24, lambda_tv = 0.28.");

  // simulate
  CLI::App* sim = app.add_subcommand("simulate", "Generate a synthetic scenario and its true graph sequence");
  ScenarioSpec spec;
  std::string sim_scheme = "smooth";
  sim->add_option("--p", spec.p, "Nodes")->capture_default_str();
  sim->add_option("--n", spec.n, "Time points")->capture_default_str();
  sim->add_option("--k", spec.replicates, "Replicates per time point")->capture_default_str();
  sim->add_option("--s-max", spec.s_max, "Degree cap")->capture_default_str();
  sim->add_option("--anchors", spec.anchors, "Anchor graphs")->capture_default_str();
  CLI::Option* o_edges =
      sim->add_option("--edges", spec.edges_per_anchor, "Edges per anchor graph (default 15 at p = 20, scaled with p)");
  CLI::Option* o_churn = sim->add_option("--churn", spec.churn,
                                         "Edges replaced between consecutive anchors (default 10 at p = 20, scaled with p)");
  sim->add_option("--scheme", sim_scheme, "smooth or piecewise")->capture_default_str();
  sim->add_option("--burn-in", spec.gibbs.burn_in, "Gibbs burn-in sweeps")->capture_default_str();
  sim->add_option("--thin", spec.gibbs.thin, "Gibbs sweeps between kept samples")->capture_default_str();
  sim->add_option("--seed", spec.seed, "Master seed")->capture_default_str();
  sim->add_option("--threads", threads_arg, threads_help);
  sim->add_option("--out", out_dir, "Output directory")->required();

  // evaluate
  CLI::App* ev = app.add_subcommand("evaluate", "Score an estimated graph sequence against a reference");
  std::string ev_truth, ev_est;
  ev->add_option("truth", ev_truth, "Reference edge file")->required();
  ev->add_option("estimate", ev_est, "Estimated edge file")->required();
  ev->add_option("--out", out_dir, "Output directory for metrics.tsv and manifest.json");

  // experiment
  CLI::App* ex = app.add_subcommand("experiment", "Repeat simulate + grid-search + evaluate over runs and k");
  ScenarioSpec ex_spec;
  std::string ex_scheme = "smooth", ex_kernel = "epanechnikov";
  std::size_t ex_runs = 20;
  std::vector<std::size_t> ex_ks;
  std::vector<std::string> ex_methods{"smooth", "tv", "static"};
  std::vector<double> ex_bandwidths;
  double ex_l1_min = 0.01, ex_l1_max = 0.3, ex_ltv_min = 0.05, ex_ltv_max = 0.3;
  std::size_t ex_l1_count = 100, ex_ltv_count = 10;
  ex->add_option("--p", ex_spec.p, "Nodes")->capture_default_str();
  ex->add_option("--n", ex_spec.n, "Time points")->capture_default_str();
  ex->add_option("--k-max", ex_spec.replicates, "Replicates generated per time point")->capture_default_str();
  ex->add_option("--ks", ex_ks, "Replicate counts to evaluate (default 1..k-max)");
  ex->add_option("--scheme", ex_scheme, "smooth or piecewise")->capture_default_str();
  ex->add_option("--runs", ex_runs, "Independent runs")->capture_default_str();
  ex->add_option("--methods", ex_methods, "Subset of smooth, tv, static");
  ex->add_option("--seed", ex_spec.seed, "Master seed")->capture_default_str();
  ex->add_option("--lambda1-min", ex_l1_min)->capture_default_str();
  ex->add_option("--lambda1-max", ex_l1_max)->capture_default_str();
  ex->add_option("--lambda1-count", ex_l1_count)->capture_default_str();
  ex->add_option("--bandwidths", ex_bandwidths, "Bandwidth grid (default 0.05, 0.10, ..., 0.50)");
  ex->add_option("--lambda-tv-min", ex_ltv_min)->capture_default_str();
  ex->add_option("--lambda-tv-max", ex_ltv_max)->capture_default_str();
  ex->add_option("--lambda-tv-count", ex_ltv_count)->capture_default_str();
  ex->add_option("--kernel", ex_kernel, "epanechnikov or boxcar")->capture_default_str();
  ex->add_option("--threads", threads_arg, threads_help);
  ex->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    return detail::report_error(err, "usage", e.what());
  }

  RunManifest manifest;
  manifest.argv = detail::argv_vector(argc, argv);
  manifest.started = utc_timestamp();
  const unsigned threads = resolve_threads(threads_arg);
  manifest.threads = threads;

  try {
    if (est->parsed()) {
      const Method method = parse_method(est_method);
      if (est_bandwidth && method != Method::smooth)
        throw detail::UsageError("--bandwidth applies only to --method smooth");
      if (est_lambda_tv && method != Method::tv) throw detail::UsageError("--lambda-tv applies only to --method tv");
      if (!est_lambda_tv && method == Method::tv) throw detail::UsageError("--method tv requires --lambda-tv");
      if (method != Method::smooth && est->count("--kernel"))
        throw detail::UsageError("--kernel applies only to --method smooth");
      const Symmetrization sym = parse_symmetrization(est_sym);
      const IngestionConfig icfg = est_in.config();
      const std::string bytes = read_file(icfg.path);
      const Dataset data = ingest_text(bytes, icfg);

      EstimationOptions opts;
      opts.kernel = detail::parse_kernel(est_kernel);
      opts.threads = threads;
      Tuning tuning{est_lambda1, 0.0, est_lambda_tv.value_or(0.0)};
      std::string bandwidth_source = "none";
      if (method == Method::smooth) {
        if (est_bandwidth) {
          tuning.bandwidth = *est_bandwidth;
          bandwidth_source = "user";
        } else {
          tuning.bandwidth = bandwidth_median_heuristic(data.times());
          bandwidth_source = "median_heuristic";
        }
      }
      const auto paths = estimate_all_nodes(method, data, tuning, opts);
      detail::write_estimate_outputs(out_dir, paths, data, sym, opts.zero_eps);

      manifest.command = "estimate";
      manifest.method = method_name(method);
      manifest.tuning = {{"lambda1", tuning.lambda1}, {"symmetrize", est_sym}};
      if (method == Method::smooth) {
        manifest.tuning["bandwidth"] = tuning.bandwidth;
        manifest.tuning["bandwidth_source"] = bandwidth_source;
        manifest.tuning["kernel"] = est_kernel;
      }
      if (method == Method::tv) manifest.tuning["lambda_tv"] = tuning.lambda_tv;
      manifest.seed = est_seed;
      manifest.input_path = icfg.path.string();
      manifest.input_digest = sha256_hex(bytes);
      manifest.extra["ingestion"] = est_in.to_json();
      manifest.extra["data"] = {{"p", data.dimension()}, {"n_times", data.n_times()},
                                {"observations", data.total_observations()}};
      detail::write_manifest(out_dir, manifest);
      return kExitOk;
    }

    if (gs->parsed()) {
      const Method method = parse_method(gs_method);
      if (o_bw->count() && method != Method::smooth)
        throw detail::UsageError("--bandwidths applies only to --method smooth");
      if ((o_tvmin->count() || o_tvmax->count() || o_tvn->count()) && method != Method::tv)
        throw detail::UsageError("--lambda-tv-* options apply only to --method tv");
      const Symmetrization sym = parse_symmetrization(gs_sym);
      const IngestionConfig icfg = gs_in.config();
      const std::string bytes = read_file(icfg.path);
      const Dataset data = ingest_text(bytes, icfg);

      GridSpec grid;
      grid.lambda1_grid = log_grid(l1_min, l1_max, l1_count);
      if (!gs_bandwidths.empty()) grid.h_grid = gs_bandwidths;
      grid.lambda_tv_grid = log_grid(ltv_min, ltv_max, ltv_count);
      EstimationOptions opts;
      opts.kernel = detail::parse_kernel(gs_kernel);
      opts.threads = threads;
      const GridSearchResult result = grid_search(method, data, grid, opts);

      detail::write_estimate_outputs(out_dir, result.paths, data, sym, opts.zero_eps);
      write_file(std::filesystem::path(out_dir) / "bic.tsv",
                 detail::bic_table(result.report, data.dimension()).to_tsv());

      manifest.command = "grid-search";
      manifest.method = method_name(method);
      manifest.tuning = {{"lambda1", result.selected.lambda1}, {"symmetrize", gs_sym}};
      if (method == Method::smooth) {
        manifest.tuning["bandwidth"] = result.selected.bandwidth;
        manifest.tuning["kernel"] = gs_kernel;
      }
      if (method == Method::tv) manifest.tuning["lambda_tv"] = result.selected.lambda_tv;
      manifest.input_path = icfg.path.string();
      manifest.input_digest = sha256_hex(bytes);
      manifest.extra["ingestion"] = gs_in.to_json();
      manifest.extra["grid"] = {{"lambda1", grid.lambda1_grid},
                                {"bandwidth", grid.h_grid},
                                {"lambda_tv", grid.lambda_tv_grid}};
      detail::write_manifest(out_dir, manifest);
      return kExitOk;
    }

    if (sim->parsed()) {
      spec.scheme = parse_scheme(sim_scheme);
      {
        ScenarioSpec scaled = spec;
        scale_edge_counts(scaled);
        if (!o_edges->count()) spec.edges_per_anchor = scaled.edges_per_anchor;
        if (!o_churn->count()) spec.churn = scaled.churn;
      }
      const Scenario s = generate_scenario(spec, spec.seed, threads);
      const std::filesystem::path dir(out_dir);
      write_file(dir / "data.csv", dataset_to_csv(s.data));
      write_file(dir / "truth.jsonl", edges_to_jsonl(s.truth));

      manifest.command = "simulate";
      manifest.seed = spec.seed;
      manifest.extra["scenario"] = {{"p", spec.p},
                                    {"n", spec.n},
                                    {"k", spec.replicates},
                                    {"s_max", spec.s_max},
                                    {"anchors", spec.anchors},
                                    {"edges_per_anchor", spec.edges_per_anchor},
                                    {"churn", spec.churn},
                                    {"scheme", sim_scheme},
                                    {"coupling_range", {spec.coupling_lo, spec.coupling_hi}},
                                    {"burn_in", spec.gibbs.burn_in},
                                    {"thin", spec.gibbs.thin}};
      manifest.extra["data_layout"] = {{"format", "csv"}, {"header", true}, {"time_column", "t"}};
      detail::write_manifest(dir, manifest);
      return kExitOk;
    }

    if (ev->parsed()) {
      const std::string truth_bytes = read_file(ev_truth);
      const std::string est_bytes = read_file(ev_est);
      const GraphSequence truth = edges_from_jsonl(truth_bytes);
      const GraphSequence estimate = edges_from_jsonl(est_bytes);
      const MetricsResult m = evaluate(estimate, truth);
      const std::string table = metrics_table({{"all", m}}).to_tsv();
      out << table;
      if (!out_dir.empty()) {
        const std::filesystem::path dir(out_dir);
        write_file(dir / "metrics.tsv", table);
        manifest.command = "evaluate";
        manifest.input_path = ev_est;
        manifest.input_digest = sha256_hex(est_bytes);
        manifest.extra["truth"] = {{"path", ev_truth}, {"sha256", sha256_hex(truth_bytes)}};
        detail::write_manifest(dir, manifest);
      }
      return kExitOk;
    }

    if (ex->parsed()) {
      ex_spec.scheme = parse_scheme(ex_scheme);
      scale_edge_counts(ex_spec);
      std::vector<Method> methods;
      for (const auto& m : ex_methods) methods.push_back(parse_method(m));
      GridSpec grid;
      grid.lambda1_grid = log_grid(ex_l1_min, ex_l1_max, ex_l1_count);
      if (!ex_bandwidths.empty()) grid.h_grid = ex_bandwidths;
      grid.lambda_tv_grid = log_grid(ex_ltv_min, ex_ltv_max, ex_ltv_count);
      ExperimentOptions opts;
      opts.ks = ex_ks;
      opts.estimation.kernel = detail::parse_kernel(ex_kernel);
      opts.estimation.threads = threads;
      const ExperimentReport report = run_experiment(ex_spec, methods, grid, ex_runs, opts);

      Table runs{{"run", "method", "symmetrize", "k", "lambda1", "bandwidth", "lambda_tv", "precision", "recall", "f1"},
                 {}};
      for (const auto& r : report.rows)
        runs.rows.push_back({std::to_string(r.run), method_name(r.method), symmetrization_name(r.symmetrization),
                             std::to_string(r.k), format_double(r.tuning.lambda1), format_double(r.tuning.bandwidth),
                             format_double(r.tuning.lambda_tv), format_double(r.metrics.precision),
                             format_double(r.metrics.recall), format_double(r.metrics.f1)});
      Table summary{{"method", "symmetrize", "k", "runs", "precision_mean", "precision_sd", "recall_mean", "recall_sd",
                     "f1_mean", "f1_sd"},
                    {}};
      for (const auto& s : report.summary)
        summary.rows.push_back({method_name(s.method), symmetrization_name(s.symmetrization), std::to_string(s.k),
                                std::to_string(s.runs), format_double(s.mean.precision), format_double(s.sd.precision),
                                format_double(s.mean.recall), format_double(s.sd.recall), format_double(s.mean.f1),
                                format_double(s.sd.f1)});
      const std::filesystem::path dir(out_dir);
      write_file(dir / "runs.tsv", runs.to_tsv());
      write_file(dir / "summary.tsv", summary.to_tsv());
      manifest.command = "experiment";
      manifest.seed = ex_spec.seed;
      manifest.extra["grid"] = {{"lambda1", grid.lambda1_grid},
                                {"bandwidth", grid.h_grid},
                                {"lambda_tv", grid.lambda_tv_grid}};
      manifest.extra["runs"] = ex_runs;
      detail::write_manifest(dir, manifest);
      return kExitOk;
    }
  } catch (const Error& e) {
    return detail::report_error(err, e.category(), e.what());
  } catch (const std::exception& e) {
    return detail::report_error(err, "internal", e.what());
  }
  return kExitInternal;
}

}  // namespace tvnet
