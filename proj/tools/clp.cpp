// clp: simulate networks, test missing links, run Monte-Carlo benchmarks.
//
// Exit codes: 0 success, 1 runtime or I/O failure, 2 configuration,
// validation or parse failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "clp/clp.hpp"

namespace fs = std::filesystem;
using clp::io::json;

namespace {

constexpr const char* kVersion = "1.0.0";

int verbosity = 0;

void log(int level, const std::string& msg) {
  if (verbosity >= level) std::cerr << msg << "\n";
}

// Flags shared by predict and bench; unset flags leave the resolved
// configuration alone.
struct ParamFlags {
  std::vector<double> alpha_ebh;
  std::optional<double> alpha_bh;
  std::optional<std::size_t> r0;
  std::optional<std::size_t> reps;
  std::optional<double> inflate_c;
  bool no_inflate = false;
  std::optional<double> ratio_train;
  std::optional<std::string> bandwidth;
  std::optional<std::string> topology;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App& app, bool sweep) {
    app.add_option("--alpha-ebh", alpha_ebh, sweep ? "e-BH levels (one or more)" : "e-BH level")
        ->expected(1, sweep ? -1 : 1);
    app.add_option("--alpha-bh", alpha_bh, "local BH level (default alpha_ebh / 2)");
    app.add_option("--r0", r0, "minimum calibration subset size");
    app.add_option("--reps", reps, "derandomisation repetitions per block");
    app.add_option("--inflate-c", inflate_c, "inflation constant c (factor c / alpha_bh)");
    app.add_flag("--no-inflate", no_inflate, "use the local-test e-values without inflation");
    app.add_option("--ratio-train", ratio_train, "training share of observed entries per row");
    app.add_option("--bandwidth", bandwidth, "kernel bandwidth: a positive number or 'auto'");
    app.add_option("--topology", topology, "directed | undirected | bipartite");
    app.add_option("--seed", seed, "master seed");
  }

  void apply(clp::ExperimentConfig& c) const {
    auto& p = c.params;
    if (r0) p.r0 = *r0;
    if (reps) p.m_reps = *reps;
    if (inflate_c && no_inflate) throw clp::ConfigError("inflate_c: --inflate-c and --no-inflate are exclusive");
    if (inflate_c) p.inflate_c = *inflate_c;
    if (no_inflate) p.inflate_c.reset();
    if (ratio_train) p.ratio_train = *ratio_train;
    if (bandwidth) {
      json b;
      if (*bandwidth == "auto") {
        b = "auto";
      } else {
        try {
          std::size_t used = 0;
          b = std::stod(*bandwidth, &used);
          if (used != bandwidth->size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          throw clp::ConfigError("bandwidth: expected a number or 'auto'");
        }
      }
      clp::io::params_from_json(json{{"bandwidth", b}}, p);
    }
    if (topology) c.topology = clp::parse_topology(*topology);
    if (seed) c.master_seed = *seed;
  }
};

struct Inputs {
  std::optional<std::string> network, mask, thresholds;
  std::optional<double> c;
  std::optional<double> holdout;

  json to_json() const {
    auto opt = [](const auto& o) { return o ? json(*o) : json(nullptr); };
    return {{"network", opt(network)}, {"mask", opt(mask)}, {"thresholds", opt(thresholds)}, {"c", opt(c)},
            {"holdout", opt(holdout)}};
  }

  void fill_from(const json& j) {
    auto str = [&](const char* k, std::optional<std::string>& dst) {
      if (!dst && j.contains(k) && j[k].is_string()) dst = j[k].get<std::string>();
    };
    auto num = [&](const char* k, std::optional<double>& dst) {
      if (!dst && j.contains(k) && j[k].is_number()) dst = j[k].get<double>();
    };
    str("network", network);
    str("mask", mask);
    str("thresholds", thresholds);
    num("c", c);
    num("holdout", holdout);
  }
};

std::string absolute(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

struct Loaded {
  json config;  // the configuration object
  json inputs;  // manifest inputs, if any
};

// A plain configuration file or a run manifest written by a previous run.
Loaded load_config(const std::optional<std::string>& path, const std::string& subcommand) {
  Loaded out{json::object(), json::object()};
  if (!path) return out;
  const auto j = clp::io::read_json(*path);
  if (j.is_object() && j.contains("resolved_config")) {
    if (j.value("subcommand", "") != subcommand)
      throw clp::ConfigError("config: manifest was written by '" + j.value("subcommand", std::string("?")) + "', not '" +
                             subcommand + "'");
    out.config = j["resolved_config"];
    if (j.contains("inputs")) out.inputs = j["inputs"];
  } else {
    out.config = j;
  }
  return out;
}

void write_manifest(const fs::path& out, const std::string& subcommand, const json& resolved,
                    const json& inputs = nullptr) {
  json m{{"format", "clp-manifest v1"},
         {"tool", "clp"},
         {"version", kVersion},
         {"compiler", __VERSION__},
         {"subcommand", subcommand},
         {"resolved_config", resolved}};
  if (!inputs.is_null()) m["inputs"] = inputs;
  clp::io::write_text(out / "run-manifest.json", clp::io::dump(m));
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::optional<std::string> config;
  std::optional<std::string> family, missing_mode, topology;
  std::optional<std::size_t> n, n_cols;
  std::optional<double> noise, threshold, q, q_lo, q_hi;
  std::optional<std::uint64_t> seed;
  std::string out = "clp-out";
};

int cmd_simulate(const SimulateArgs& a) {
  const auto loaded = load_config(a.config, "simulate");
  clp::ExperimentConfig c;
  clp::io::experiment_from_json(loaded.config, c);
  json g = clp::io::to_json(c.graphon);
  if (a.family) g["family"] = *a.family;
  if (a.noise) g["noise"] = *a.noise;
  if (a.threshold) g["threshold"] = *a.threshold;
  c.graphon = clp::io::graphon_from_json(g);
  json m = clp::io::to_json(c.missing);
  if (a.missing_mode) m = json{{"mode", *a.missing_mode}};
  if (a.q) m["q"] = *a.q;
  if (a.q_lo) m["q_lo"] = *a.q_lo;
  if (a.q_hi) m["q_hi"] = *a.q_hi;
  c.missing = clp::io::missing_from_json(m);
  if (a.topology) c.topology = clp::parse_topology(*a.topology);
  if (a.n) c.n = *a.n;
  if (a.n_cols) c.n_cols = *a.n_cols;
  if (a.seed) c.master_seed = *a.seed;
  if (c.n < 2) throw clp::ConfigError("n: must be at least 2");

  const clp::SeedTree tree(c.master_seed);
  const auto data = clp::simulate(c, tree);
  const fs::path out(a.out);
  clp::io::write_text(out / "network.csv", clp::io::matrix_csv(data.generated.network.weights(), &data.mask, "network"));
  clp::io::write_text(out / "mask.csv", clp::io::mask_csv(data.mask));
  clp::io::write_text(out / "truth.csv", clp::io::thresholds_csv(data.thresholds, &data.generated.network));
  write_manifest(out, "simulate", clp::io::to_json(c));
  log(1, "simulate: " + std::to_string(data.mask.n_rows()) + "x" + std::to_string(data.mask.n_cols()) + ", " +
             std::to_string(data.thresholds.size()) + " test entries");
  return 0;
}

// ----------------------------------------------------------------- predict

struct PredictArgs {
  std::optional<std::string> config;
  Inputs inputs;
  ParamFlags flags;
  unsigned threads = 1;
  bool dump_splits = false, dump_pvalues = false;
  std::string out = "clp-out";
};

struct ObservedData {
  clp::WeightedNetwork network;
  clp::MissingMask mask;
};

ObservedData load_observed(const Inputs& in, clp::TopologyMode mode) {
  const auto m = clp::io::read_matrix_csv(*in.network);
  const bool bipartite = mode == clp::TopologyMode::bipartite;
  const auto rows = m.values.rows(), cols = m.values.cols();
  if (!bipartite && rows != cols)
    throw clp::ValidationError(std::string(clp::to_string(mode)) + " mode: network must be square, got " +
                               std::to_string(rows) + "x" + std::to_string(cols));
  clp::DenseMatrix<std::uint8_t> bits = m.na;
  if (in.mask) {
    bits = clp::io::read_mask_csv(*in.mask);
    if (bits.rows() != rows || bits.cols() != cols) throw clp::ValidationError("mask shape does not match network");
    for (clp::Index i = 0; i < rows; ++i)
      for (clp::Index j = 0; j < cols; ++j)
        if (m.na(i, j) && !bits(i, j) && (bipartite || i != j))
          throw clp::ValidationError("network has NA at observed cell (" + std::to_string(i) + "," +
                                     std::to_string(j) + ")");
  }
  clp::WeightedNetwork net(m.values, bipartite);
  clp::MissingMask mask(std::move(bits), bipartite);
  if (mode != clp::TopologyMode::undirected) return {std::move(net), std::move(mask)};

  // Upper-triangle input: every strictly-lower cell is NA.
  bool upper_only = true;
  for (clp::Index i = 1; i < rows && upper_only; ++i)
    for (clp::Index j = 0; j < i; ++j)
      if (!m.na(i, j)) {
        upper_only = false;
        break;
      }
  if (!upper_only) clp::require_symmetric(net, mask);
  auto ext = clp::extend_symmetric(net, mask);
  return {std::move(ext.network), std::move(ext.mask)};
}

int cmd_predict(PredictArgs a) {
  const auto loaded = load_config(a.config, "predict");
  a.inputs.fill_from(loaded.inputs);
  if (!a.inputs.network) throw clp::ConfigError("network: --network is required");
  a.inputs.network = absolute(*a.inputs.network);
  if (a.inputs.mask) a.inputs.mask = absolute(*a.inputs.mask);
  if (a.inputs.thresholds) a.inputs.thresholds = absolute(*a.inputs.thresholds);

  clp::ExperimentConfig c;
  clp::io::experiment_from_json(loaded.config, c);
  const bool alpha_bh_fixed = loaded.config.contains("params") && loaded.config["params"].contains("alpha_bh");
  a.flags.apply(c);
  if (!a.flags.alpha_ebh.empty()) c.params.alpha_ebh = a.flags.alpha_ebh.front();
  if (a.flags.alpha_bh)
    c.params.alpha_bh = *a.flags.alpha_bh;
  else if (!alpha_bh_fixed || !a.flags.alpha_ebh.empty())
    c.params.alpha_bh = c.params.alpha_ebh / 2.0;
  c.params.topology = c.topology;
  c.params.validate();

  const auto data = load_observed(a.inputs, c.topology);
  const fs::path out(a.out);
  json resolved{{"topology", clp::to_string(c.topology)}, {"seed", c.master_seed}, {"params", clp::io::to_json(c.params)}};
  auto params = c.params;
  params.threads = a.threads;
  params.record_splits = a.dump_splits;

  if (a.inputs.holdout) {
    if (a.inputs.mask || data.mask.missing_count() > 0)
      throw clp::ValidationError("holdout: the network must be complete (no NA cells, no mask)");
    if (a.inputs.thresholds) throw clp::ConfigError("holdout: use --c, not --thresholds");
    const auto rule = clp::ThresholdRule::constant(a.inputs.c.value_or(0.2));
    const auto h = clp::run_holdout(data.network, *a.inputs.holdout, rule, params, c.master_seed);
    clp::io::write_text(out / "rejections.json",
                        clp::io::dump(clp::io::rejections_json(h.clp, params.alpha_bh, params.inflate_c)));
    clp::io::write_text(out / "evalues.csv", clp::io::evalues_csv(h.clp));
    clp::io::write_text(out / "diagnostics.json", clp::io::dump(clp::io::diagnostics_json(h.clp.diagnostics)));
    clp::io::write_text(out / "truth.csv", clp::io::thresholds_csv(h.thresholds, &data.network));
    clp::io::write_text(out / "metrics.csv", clp::io::metrics_csv({h.metrics}));
    for (const auto& w : h.clp.diagnostics.warnings) std::cerr << "warning: " << w << "\n";
    write_manifest(out, "predict", resolved, a.inputs.to_json());
    std::printf("held out %zu entries, rejected %zu, FDP %.4f, power %.4f\n", h.metrics.tested, h.metrics.rejected,
                h.metrics.fdp, h.metrics.power);
    return 0;
  }

  clp::HypothesisThresholds th;
  const auto coords = clp::test_coordinates(data.mask, c.topology);
  if (a.inputs.thresholds) {
    if (a.inputs.c) throw clp::ConfigError("thresholds: --thresholds and --c are exclusive");
    th = clp::io::read_thresholds_csv(*a.inputs.thresholds);
  } else if (a.inputs.c) {
    std::vector<clp::ThresholdEntry> e;
    for (auto at : coords) e.push_back({at, *a.inputs.c, false});
    th = clp::HypothesisThresholds(std::move(e));
  } else if (!coords.empty()) {
    throw clp::ConfigError("thresholds: pass --thresholds FILE or --c VALUE");
  }

  const auto local = clp::compute_local(data.network, data.mask, th, params, c.master_seed);
  const auto res = clp::aggregate(local, params.alpha_bh, params.alpha_ebh, params.inflate_c);
  for (const auto& w : res.diagnostics.warnings) std::cerr << "warning: " << w << "\n";
  if (params.inflate_c && *params.inflate_c > 1.0)
    std::cerr << "warning: inflate_c > 1 is outside the range with an FDR guarantee\n";

  clp::io::write_text(out / "rejections.json",
                      clp::io::dump(clp::io::rejections_json(res, params.alpha_bh, params.inflate_c)));
  clp::io::write_text(out / "evalues.csv", clp::io::evalues_csv(res));
  clp::io::write_text(out / "diagnostics.json", clp::io::dump(clp::io::diagnostics_json(res.diagnostics)));
  if (a.dump_splits) clp::io::write_text(out / "splits.json", clp::io::dump(clp::io::splits_json(local)));
  if (a.dump_pvalues) clp::io::write_text(out / "pvalues.csv", clp::io::pvalues_csv(local));
  write_manifest(out, "predict", resolved, a.inputs.to_json());
  log(1, "predict: " + std::to_string(th.size()) + " tested, " + std::to_string(res.rejection.k_hat) + " rejected");
  return 0;
}

// ------------------------------------------------------------------- bench

struct BenchArgs {
  std::optional<std::string> config, preset, family;
  std::optional<std::size_t> n, replications;
  ParamFlags flags;
  bool naive = false;
  unsigned threads = 1;
  std::string out = "clp-out";
};

int cmd_bench(const BenchArgs& a) {
  const auto loaded = load_config(a.config, "bench");
  clp::ExperimentConfig c;
  clp::apply_preset(c, clp::ScalePreset::desk);
  clp::io::experiment_from_json(loaded.config, c);
  if (a.preset) clp::apply_preset(c, clp::io::parse_preset(*a.preset));
  if (a.family) {
    json g = clp::io::to_json(c.graphon);
    g["family"] = *a.family;
    c.graphon = clp::io::graphon_from_json(g);
  }
  if (a.n) c.n = *a.n;
  if (a.replications) c.replications = *a.replications;
  a.flags.apply(c);
  if (!a.flags.alpha_ebh.empty()) c.alpha_ebh_sweep = a.flags.alpha_ebh;
  if (a.flags.alpha_bh) c.fixed_alpha_bh = *a.flags.alpha_bh;
  if (a.naive) c.naive_baseline = true;
  c.params.topology = c.topology;
  c.threads = a.threads;
  c.validate();

  const auto res = clp::run_experiment(c);
  const fs::path out(a.out);
  clp::io::write_text(out / "metrics.csv", clp::io::metrics_csv(res.rows));
  clp::io::write_text(out / "timings.csv", clp::io::timings_csv(res.rows));
  clp::io::write_text(out / "summary.json", clp::io::dump(clp::io::summary_json(res.summary)));
  clp::io::write_text(out / "curves.csv", clp::io::curves_csv(res.summary));
  write_manifest(out, "bench", clp::io::to_json(c));
  std::size_t failures = 0;
  for (const auto& r : res.rows)
    if (!r.error.empty()) {
      ++failures;
      log(1, "replication " + std::to_string(r.replication) + " failed: " + r.error);
    }
  if (failures) std::cerr << "warning: " << failures << " failed replication rows (see metrics.csv)\n";
  std::cout << clp::io::report_table(res.summary);
  return 0;
}

// ------------------------------------------------------------------ report

struct ReportArgs {
  std::string metrics;
  std::optional<std::string> out;
};

int cmd_report(const ReportArgs& a) {
  const auto rows = clp::io::read_metrics_csv(a.metrics);
  if (rows.empty()) throw clp::ValidationError(a.metrics + ": no metric rows");
  const auto table = clp::io::report_table(clp::summarise(rows));
  if (a.out) {
    const fs::path out(*a.out);
    clp::io::write_text(out / "report.txt", table);
    write_manifest(out, "report", json{{"metrics", absolute(a.metrics)}});
  }
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal link prediction with FDR control"};
  app.set_version_flag("--version", std::string("clp ") + kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("-v,--verbose", verbosity, "more output on stderr (repeatable)");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "generate a graphon network, missing mask and thresholds");
  s->add_option("--config", sim.config, "JSON configuration or run manifest");
  s->add_option("--family", sim.family, "setting1 | setting2 | setting3 | threshold-binary | rescaled-bernoulli");
  s->add_option("--n", sim.n, "number of nodes (rows)");
  s->add_option("--n-cols", sim.n_cols, "number of columns (bipartite)");
  s->add_option("--noise", sim.noise, "noise half-width h");
  s->add_option("--threshold", sim.threshold, "threshold t of the binary family");
  s->add_option("--missing-mode", sim.missing_mode, "uniform | heterogeneous-uniform | block | staggered");
  s->add_option("--q", sim.q, "missing probability (uniform)");
  s->add_option("--q-lo", sim.q_lo, "lower missing probability (heterogeneous-uniform)");
  s->add_option("--q-hi", sim.q_hi, "upper missing probability (heterogeneous-uniform)");
  s->add_option("--topology", sim.topology, "directed | undirected | bipartite");
  s->add_option("--seed", sim.seed, "master seed");
  s->add_option("--out", sim.out, "output directory");

  PredictArgs pred;
  auto* p = app.add_subcommand("predict", "test the missing links of an observed network");
  p->add_option("--config", pred.config, "JSON configuration or run manifest");
  p->add_option("--network", pred.inputs.network, "network CSV (empty or NA cells are missing)");
  p->add_option("--mask", pred.inputs.mask, "0/1 mask CSV, 1 = missing");
  p->add_option("--thresholds", pred.inputs.thresholds, "CSV with columns i,j,c");
  p->add_option("--c", pred.inputs.c, "constant threshold for every missing link");
  p->add_option("--holdout", pred.inputs.holdout, "mask this fraction of a complete network and score it");
  pred.flags.attach(*p, false);
  p->add_option("--threads", pred.threads, "worker threads");
  p->add_flag("--dump-splits", pred.dump_splits, "write splits.json");
  p->add_flag("--dump-pvalues", pred.dump_pvalues, "write pvalues.csv");
  p->add_option("--out", pred.out, "output directory");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Monte-Carlo FDR and power over simulated replications");
  b->add_option("--config", bench.config, "JSON configuration or run manifest");
  b->add_option("--preset", bench.preset, "desk | full");
  b->add_option("--family", bench.family, "graphon family");
  b->add_option("--n", bench.n, "number of nodes");
  b->add_option("--replications", bench.replications, "number of replications");
  bench.flags.attach(*b, true);
  b->add_flag("--naive", bench.naive, "add the pooled single-split BH contrast");
  b->add_option("--threads", bench.threads, "worker threads (over replications)");
  b->add_option("--out", bench.out, "output directory");

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "render a metrics.csv as a table of FDR and power");
  r->add_option("--metrics", rep.metrics, "metrics.csv from bench")->required();
  r->add_option("--out", rep.out, "also write report.txt to this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*s) return cmd_simulate(sim);
    if (*p) return cmd_predict(pred);
    if (*b) return cmd_bench(bench);
    if (*r) return cmd_report(rep);
  } catch (const clp::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const clp::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
