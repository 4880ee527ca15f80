#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fgc/baselines.hpp"
#include "fgc/embedding.hpp"
#include "fgc/fairness.hpp"
#include "fgc/graph.hpp"
#include "fgc/io.hpp"
#include "fgc/metrics.hpp"
#include "fgc/pipeline.hpp"
#include "fgc/rng.hpp"
#include "fgc/synthetic.hpp"

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Methods

enum class MethodKind {
  kUnified,
  kSep,
  kSepKmeans,
  kNoDenoise,
  kFjgsed,
  kFsrsc,
  kCorr,
  kKnn,
  kEpsnn,
};

const std::vector<std::pair<std::string, MethodKind>>& method_table() {
  static const std::vector<std::pair<std::string, MethodKind>> table = {
      {"unified", MethodKind::kUnified},
      {"sep", MethodKind::kSep},
      {"sep-kmeans", MethodKind::kSepKmeans},
      {"no-denoise", MethodKind::kNoDenoise},
      {"fjgsed", MethodKind::kFjgsed},
      {"fsrsc", MethodKind::kFsrsc},
      {"corr", MethodKind::kCorr},
      {"knn", MethodKind::kKnn},
      {"epsnn", MethodKind::kEpsnn},
  };
  return table;
}

MethodKind parse_method(const std::string& name) {
  for (const auto& [key, kind] : method_table()) {
    if (key == name) return kind;
  }
  std::string known;
  for (const auto& [key, kind] : method_table()) {
    (void)kind;
    known += known.empty() ? key : ", " + key;
  }
  throw std::invalid_argument("unknown method '" + name + "' (known: " +
                              known + ")");
}

// Everything a single method run needs beyond the dataset.
struct MethodOptions {
  fgc::FitConfig fit{};
  int l = 10;            // neighbor count for the simplex-weight baseline
  double alpha_u = 0.01;  // l1 weight for the self-representation baseline
  double gamma_u = 1.0;   // its consensus/rotation weight
  bool fsrsc_normalize = true;  // unit-norm signal rows in its W stage
};

fgc::FitResult run_method(MethodKind kind, const MatrixXd& x,
                          const fgc::FairnessSystem& fsys, int k,
                          const MethodOptions& opts) {
  switch (kind) {
    case MethodKind::kUnified:
      return fgc::unified_fit(x, fsys, k, opts.fit);
    case MethodKind::kSep:
      return fgc::separate_fit(x, fsys, k, opts.fit,
                               fgc::GraphMethod::kLearned);
    case MethodKind::kSepKmeans: {
      fgc::FitConfig c = opts.fit;
      c.kmeans_labels = true;
      return fgc::separate_fit(x, fsys, k, c, fgc::GraphMethod::kLearned);
    }
    case MethodKind::kNoDenoise: {
      fgc::FitConfig c = opts.fit;
      c.denoise_signals = false;
      return fgc::unified_fit(x, fsys, k, c);
    }
    case MethodKind::kFjgsed: {
      fgc::FjgsedConfig c;
      c.l = opts.l;
      c.mu_j = opts.fit.mu;
      c.gamma_j = opts.fit.gamma;
      c.max_iter = opts.fit.outer_max_iter;
      c.rel_tol = opts.fit.outer_rel_tol;
      c.seed = opts.fit.seed;
      c.random_rotation_init = opts.fit.random_rotation_init;
      c.stiefel = opts.fit.stiefel;
      return fgc::fjgsed_fit(x, fsys, k, c);
    }
    case MethodKind::kFsrsc: {
      fgc::FsrscConfig c;
      c.alpha_u = opts.alpha_u;
      c.mu_u = opts.fit.mu;
      c.gamma_u = opts.gamma_u;
      c.max_iter = opts.fit.outer_max_iter;
      c.rel_tol = opts.fit.outer_rel_tol;
      c.seed = opts.fit.seed;
      c.random_rotation_init = opts.fit.random_rotation_init;
      c.normalize_signals = opts.fsrsc_normalize;
      c.stiefel = opts.fit.stiefel;
      return fgc::fsrsc_fit(x, fsys, k, c);
    }
    case MethodKind::kCorr:
      return fgc::separate_fit(x, fsys, k, opts.fit,
                               fgc::GraphMethod::kPearson);
    case MethodKind::kKnn:
      return fgc::separate_fit(x, fsys, k, opts.fit, fgc::GraphMethod::kKnn);
    case MethodKind::kEpsnn:
      return fgc::separate_fit(x, fsys, k, opts.fit, fgc::GraphMethod::kEpsnn);
  }
  throw std::logic_error("unreachable method kind");
}

// ---------------------------------------------------------------------------
// Metrics row

struct EvalRow {
  double fs = kNan;
  double ee = kNan;
  double ce = kNan;
  double bal = kNan;
};

EvalRow evaluate_labels_and_graph(const fgc::Dataset& ds,
                                  const fgc::FairnessSystem& fsys,
                                  const VectorXd& w_est,
                                  const std::vector<int>& labels) {
  EvalRow row;
  if (ds.w_true.size() > 0 && w_est.size() == ds.w_true.size()) {
    row.fs = fgc::f1_score(ds.w_true, w_est);
    try {
      row.ee = fgc::estimation_error(fgc::laplacian_from_weights(w_est),
                                     fgc::laplacian_from_weights(ds.w_true),
                                     fsys);
    } catch (const std::domain_error&) {
      row.ee = kNan;
    }
  }
  if (!ds.clusters.empty()) {
    row.ce = fgc::clustering_error(labels, ds.clusters, ds.num_clusters).ce;
  }
  row.bal =
      fgc::balance(labels, ds.groups, ds.num_clusters, ds.num_groups).first;
  return row;
}

std::string metrics_header() { return "fs,ee,ce,balance"; }

std::string metrics_row(const EvalRow& row) {
  return fgc::format_double(row.fs) + "," + fgc::format_double(row.ee) + "," +
         fgc::format_double(row.ce) + "," + fgc::format_double(row.bal);
}

std::string format_runtime(double seconds) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", seconds);
  return buf;
}

// ---------------------------------------------------------------------------
// Config plumbing

long long parse_ll(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key +
                                "': expected integer, got '" + value + "'");
  }
}

double parse_d(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key +
                                "': expected number, got '" + value + "'");
  }
}

bool parse_flag(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  throw std::invalid_argument("config key '" + key +
                              "': expected boolean, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<double> parse_grid(const std::string& key,
                               const std::string& value) {
  std::vector<double> out;
  for (const auto& tok : split_list(value)) out.push_back(parse_d(key, tok));
  if (out.empty()) {
    throw std::invalid_argument("config key '" + key + "': empty list");
  }
  return out;
}

// Applies one "key = value" pair to the method options.  Returns false when
// the key is not a fit key (caller decides whether that is an error).
bool apply_fit_key(MethodOptions& opts, const std::string& key,
                   const std::string& value) {
  fgc::FitConfig& f = opts.fit;
  if (key == "xi") f.xi = parse_d(key, value);
  else if (key == "beta") f.beta = parse_d(key, value);
  else if (key == "alpha") f.alpha = parse_d(key, value);
  else if (key == "mu") f.mu = parse_d(key, value);
  else if (key == "gamma") f.gamma = parse_d(key, value);
  else if (key == "outer_max_iter") f.outer_max_iter = static_cast<int>(parse_ll(key, value));
  else if (key == "outer_rel_tol") f.outer_rel_tol = parse_d(key, value);
  else if (key == "seed") f.seed = static_cast<std::uint64_t>(parse_ll(key, value));
  else if (key == "denoise_signals") f.denoise_signals = parse_flag(key, value);
  else if (key == "eigen_warm_start") f.eigen_warm_start = parse_flag(key, value);
  else if (key == "refresh_eigen_warm") f.refresh_eigen_warm = parse_flag(key, value);
  else if (key == "random_rotation_init") f.random_rotation_init = parse_flag(key, value);
  else if (key == "kmeans_labels") f.kmeans_labels = parse_flag(key, value);
  else if (key == "kmeans_restarts") f.kmeans_restarts = static_cast<int>(parse_ll(key, value));
  else if (key == "knn_k") f.knn_k = static_cast<int>(parse_ll(key, value));
  else if (key == "eps_radius") f.eps_radius = parse_d(key, value);
  else if (key == "w_max_iter") f.w_solver.max_iter = static_cast<int>(parse_ll(key, value));
  else if (key == "w_rel_tol") f.w_solver.rel_tol = parse_d(key, value);
  else if (key == "stiefel_max_iter") f.stiefel.max_iter = static_cast<int>(parse_ll(key, value));
  else if (key == "stiefel_grad_tol") f.stiefel.grad_tol = parse_d(key, value);
  else if (key == "denoise_tol") f.denoise.tol = parse_d(key, value);
  else if (key == "l") opts.l = static_cast<int>(parse_ll(key, value));
  else if (key == "alpha_u") opts.alpha_u = parse_d(key, value);
  else if (key == "gamma_u") opts.gamma_u = parse_d(key, value);
  else if (key == "fsrsc_normalize") opts.fsrsc_normalize = parse_flag(key, value);
  else return false;
  return true;
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  long long num_nodes = 96;
  int num_clusters = 4;
  int num_groups = 2;
  double a = 0.8, b = 0.2, c = 0.15, d = 0.05;
  double weight_lo = 0.1, weight_hi = 2.0;
  std::vector<double> zeta;
  long long n = 2000;
  double noise_lo = 0.0, noise_hi = 0.2;
  double noise_sigma = -1.0;  // >= 0 selects a constant sigma
  std::uint64_t seed = 1;
  std::string out;
};

int run_gen(const GenArgs& args) {
  fgc::VsbmParams p;
  p.num_nodes = args.num_nodes;
  p.num_clusters = args.num_clusters;
  p.num_groups = args.num_groups;
  p.a = args.a;
  p.b = args.b;
  p.c = args.c;
  p.d = args.d;
  p.weight_lo = args.weight_lo;
  p.weight_hi = args.weight_hi;
  p.zeta = args.zeta;

  fgc::Rng root(args.seed);
  const fgc::GroundTruth gt = fgc::vsbm_generate(p, root.spawn(1).next_u64());

  fgc::NoiseSpec noise;
  if (args.noise_sigma >= 0.0) {
    noise.sigma = VectorXd::Constant(p.num_nodes, args.noise_sigma);
  } else {
    noise.lo = args.noise_lo;
    noise.hi = args.noise_hi;
  }
  const fgc::SignalSample sig =
      fgc::sample_signals(gt, args.n, noise, root.spawn(2).next_u64());
  fgc::write_dataset(args.out, gt, sig);

  const auto edges = (gt.w.array() > 0.0).count();
  std::cout << "dataset: D=" << p.num_nodes << " K=" << p.num_clusters
            << " S=" << p.num_groups << " N=" << args.n << " edges=" << edges
            << " out=" << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// fit / eval

struct FitArgs {
  std::string data;
  std::string out;
  std::string method = "unified";
  std::string config_path;
  MethodOptions opts{};
};

void apply_config_file(MethodOptions& opts, const std::string& path) {
  const auto map = fgc::parse_config_file(path);
  for (const auto& [key, value] : map) {
    std::string bare = key;
    const std::string prefix = "fit.";
    if (bare.rfind(prefix, 0) == 0) bare = bare.substr(prefix.size());
    if (!apply_fit_key(opts, bare, value)) {
      throw std::invalid_argument("config key '" + key +
                                  "' is not a fit setting");
    }
  }
}

int run_fit(const FitArgs& args) {
  const fgc::Dataset ds = fgc::read_dataset(args.data);
  const fgc::FairnessSystem fsys = fgc::build_fairness_system(ds.groups);
  const MethodKind kind = parse_method(args.method);

  const auto t0 = std::chrono::steady_clock::now();
  const fgc::FitResult res =
      run_method(kind, ds.x, fsys, ds.num_clusters, args.opts);
  const double runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  if (!args.out.empty()) fgc::write_fit_result(args.out, res, args.opts.fit);

  const EvalRow row =
      evaluate_labels_and_graph(ds, fsys, res.w, res.labels);
  std::cout << metrics_header() << "\n" << metrics_row(row) << "\n";
  std::cerr << "method=" << args.method << " sweeps=" << res.sweeps
            << " converged=" << (res.converged ? 1 : 0)
            << " runtime_s=" << format_runtime(runtime) << "\n";
  return 0;
}

struct EvalArgs {
  std::string data;
  std::string result;
};

std::vector<int> read_result_labels(const std::string& path,
                                    Eigen::Index expected) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "node,label") {
    throw std::runtime_error(path + ": expected header 'node,label'");
  }
  std::vector<int> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error(path + ": malformed row '" + line + "'");
    }
    const long long node = parse_ll("node", line.substr(0, comma));
    if (node != static_cast<long long>(labels.size()) + 1) {
      throw std::runtime_error(path + ": node ids must be 1..D in order");
    }
    labels.push_back(static_cast<int>(parse_ll("label", line.substr(comma + 1))));
  }
  if (static_cast<Eigen::Index>(labels.size()) != expected) {
    throw std::runtime_error(path + ": label count does not match dataset");
  }
  return labels;
}

int run_eval(const EvalArgs& args) {
  const fgc::Dataset ds = fgc::read_dataset(args.data);
  const fgc::FairnessSystem fsys = fgc::build_fairness_system(ds.groups);

  namespace stdfs = std::filesystem;
  VectorXd w_est;
  const stdfs::path graph_path = stdfs::path(args.result) / "graph.txt";
  if (stdfs::exists(graph_path)) {
    std::ifstream in(graph_path);
    auto [w, d] = fgc::read_graph(in);
    if (d != ds.num_nodes) {
      throw std::runtime_error("result graph node count does not match data");
    }
    w_est = std::move(w);
  }
  const std::vector<int> labels = read_result_labels(
      (stdfs::path(args.result) / "labels.csv").string(), ds.num_nodes);

  const EvalRow row = evaluate_labels_and_graph(ds, fsys, w_est, labels);
  std::cout << metrics_header() << "\n" << metrics_row(row) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// experiment / sweep

struct NoiseRun {
  fgc::NoiseSpec noise;
  std::string label;  // subdirectory; empty = write into the out dir itself
};

struct ExperimentSpec {
  fgc::VsbmParams params{};
  long long n = 2000;
  std::vector<NoiseRun> noise_runs;
  std::vector<std::string> methods;
  int trials = 5;
  std::uint64_t seed_base = 0;
  std::string out = "results";
  MethodOptions base_opts{};
  std::map<std::string, MethodOptions> per_method;
  std::vector<double> xi_grid, beta_grid, mu_grid, gamma_grid;
};

ExperimentSpec preset_table2_desk() {
  ExperimentSpec spec;
  spec.params.num_nodes = 96;
  spec.params.num_clusters = 4;
  spec.params.num_groups = 2;
  spec.n = 2000;
  spec.trials = 5;
  spec.seed_base = 0;
  NoiseRun low, high;
  low.noise.lo = 0.0;
  low.noise.hi = 0.2;
  low.label = "noise-low";
  high.noise.lo = 0.4;
  high.noise.hi = 0.6;
  high.label = "noise-high";
  spec.noise_runs = {low, high};
  for (const auto& [key, kind] : method_table()) {
    (void)kind;
    spec.methods.push_back(key);
  }
  return spec;
}

ExperimentSpec parse_experiment_spec(const std::string& path) {
  const auto map = fgc::parse_config_file(path);
  ExperimentSpec spec;
  double noise_lo = 0.0, noise_hi = 0.2, noise_sigma = -1.0;

  for (const auto& [key, value] : map) {
    const auto dot = key.rfind('.');
    const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);

    if (section == "dataset") {
      if (name == "D") spec.params.num_nodes = parse_ll(key, value);
      else if (name == "K") spec.params.num_clusters = static_cast<int>(parse_ll(key, value));
      else if (name == "S") spec.params.num_groups = static_cast<int>(parse_ll(key, value));
      else if (name == "N") spec.n = parse_ll(key, value);
      else if (name == "a") spec.params.a = parse_d(key, value);
      else if (name == "b") spec.params.b = parse_d(key, value);
      else if (name == "c") spec.params.c = parse_d(key, value);
      else if (name == "d") spec.params.d = parse_d(key, value);
      else if (name == "weight_lo") spec.params.weight_lo = parse_d(key, value);
      else if (name == "weight_hi") spec.params.weight_hi = parse_d(key, value);
      else if (name == "noise_lo") noise_lo = parse_d(key, value);
      else if (name == "noise_hi") noise_hi = parse_d(key, value);
      else if (name == "noise_sigma") noise_sigma = parse_d(key, value);
      else throw std::invalid_argument("unknown spec key '" + key + "'");
    } else if (section == "experiment") {
      if (name == "methods") spec.methods = split_list(value);
      else if (name == "trials") spec.trials = static_cast<int>(parse_ll(key, value));
      else if (name == "seed_base") spec.seed_base = static_cast<std::uint64_t>(parse_ll(key, value));
      else if (name == "out") spec.out = value;
      else throw std::invalid_argument("unknown spec key '" + key + "'");
    } else if (section == "sweep") {
      if (name == "xi_grid") spec.xi_grid = parse_grid(key, value);
      else if (name == "beta_grid") spec.beta_grid = parse_grid(key, value);
      else if (name == "mu_grid") spec.mu_grid = parse_grid(key, value);
      else if (name == "gamma_grid") spec.gamma_grid = parse_grid(key, value);
      else throw std::invalid_argument("unknown spec key '" + key + "'");
    } else if (section == "fit") {
      if (!apply_fit_key(spec.base_opts, name, value)) {
        throw std::invalid_argument("unknown spec key '" + key + "'");
      }
    } else if (section.rfind("fit.", 0) == 0) {
      const std::string method = section.substr(4);
      parse_method(method);  // validates the name
      auto [it, inserted] = spec.per_method.try_emplace(method, spec.base_opts);
      (void)inserted;
      if (!apply_fit_key(it->second, name, value)) {
        throw std::invalid_argument("unknown spec key '" + key + "'");
      }
    } else {
      throw std::invalid_argument("unknown spec key '" + key + "'");
    }
  }

  NoiseRun run;
  if (noise_sigma >= 0.0) {
    run.noise.sigma = VectorXd::Constant(spec.params.num_nodes, noise_sigma);
  } else {
    run.noise.lo = noise_lo;
    run.noise.hi = noise_hi;
  }
  spec.noise_runs = {run};
  return spec;
}

MethodOptions options_for(const ExperimentSpec& spec,
                          const std::string& method) {
  const auto it = spec.per_method.find(method);
  return it == spec.per_method.end() ? spec.base_opts : it->second;
}

struct TrialRow {
  std::string method;
  int trial = 0;
  EvalRow metrics{};
  double runtime = 0.0;
  bool ok = false;
  std::string status = "error";
};

fgc::Dataset make_trial_dataset(const ExperimentSpec& spec,
                                const fgc::NoiseSpec& noise,
                                std::uint64_t seed) {
  fgc::Rng root(seed);
  const fgc::GroundTruth gt =
      fgc::vsbm_generate(spec.params, root.spawn(1).next_u64());
  const fgc::SignalSample sig =
      fgc::sample_signals(gt, spec.n, noise, root.spawn(2).next_u64());
  fgc::Dataset ds;
  ds.x = sig.x;
  ds.clusters = gt.clusters;
  ds.groups = gt.groups;
  ds.w_true = gt.w;
  ds.num_nodes = gt.num_nodes;
  ds.num_clusters = gt.num_clusters;
  ds.num_groups = gt.num_groups;
  return ds;
}

TrialRow run_trial_method(const fgc::Dataset& ds,
                          const fgc::FairnessSystem& fsys,
                          const std::string& method, int trial,
                          MethodOptions opts, std::uint64_t seed) {
  TrialRow row;
  row.method = method;
  row.trial = trial;
  opts.fit.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const fgc::FitResult res =
        run_method(parse_method(method), ds.x, fsys, ds.num_clusters, opts);
    row.metrics = evaluate_labels_and_graph(ds, fsys, res.w, res.labels);
    row.ok = true;
    row.status = "ok";
  } catch (const std::exception& e) {
    row.ok = false;
    row.status = "error";
    std::cerr << "trial " << trial << " method " << method
              << " failed: " << e.what() << "\n";
  }
  row.runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return row;
}

// All methods for trials 1..T, parallel over trials, rows in trial order.
std::vector<TrialRow> run_trials(const ExperimentSpec& spec,
                                 const fgc::NoiseSpec& noise, int jobs) {
  std::vector<std::vector<TrialRow>> per_trial(
      static_cast<std::size_t>(spec.trials));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int idx = next.fetch_add(1);
      if (idx >= spec.trials) break;
      const int trial = idx + 1;
      const std::uint64_t seed = spec.seed_base + static_cast<std::uint64_t>(trial);
      std::vector<TrialRow> rows;
      try {
        const fgc::Dataset ds = make_trial_dataset(spec, noise, seed);
        const fgc::FairnessSystem fsys = fgc::build_fairness_system(ds.groups);
        for (const auto& method : spec.methods) {
          rows.push_back(run_trial_method(ds, fsys, method, trial,
                                          options_for(spec, method), seed));
        }
      } catch (const std::exception& e) {
        std::cerr << "trial " << trial << " dataset failed: " << e.what()
                  << "\n";
        rows.clear();
        for (const auto& method : spec.methods) {
          TrialRow row;
          row.method = method;
          row.trial = trial;
          rows.push_back(row);
        }
      }
      per_trial[static_cast<std::size_t>(idx)] = std::move(rows);
    }
  };

  const int thread_count = std::max(1, std::min(jobs, spec.trials));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(thread_count));
  for (int i = 0; i < thread_count; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::vector<TrialRow> rows;
  for (auto& trial_rows : per_trial) {
    for (auto& row : trial_rows) rows.push_back(std::move(row));
  }
  return rows;
}

void write_long_csv(const std::string& path, const std::vector<TrialRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "method,trial,fs,ee,ce,balance,runtime_s,status\n";
  for (const auto& row : rows) {
    out << row.method << "," << row.trial << "," << metrics_row(row.metrics)
        << "," << format_runtime(row.runtime) << "," << row.status << "\n";
  }
}

struct Aggregate {
  int trials_ok = 0;
  EvalRow mean{};
  double runtime = 0.0;
};

Aggregate aggregate_rows(const std::vector<TrialRow>& rows,
                         const std::string& method) {
  Aggregate agg;
  double fs = 0, ee = 0, ce = 0, bal = 0, rt = 0;
  for (const auto& row : rows) {
    if (row.method != method || !row.ok) continue;
    ++agg.trials_ok;
    fs += row.metrics.fs;
    ee += row.metrics.ee;
    ce += row.metrics.ce;
    bal += row.metrics.bal;
    rt += row.runtime;
  }
  if (agg.trials_ok > 0) {
    const double n = agg.trials_ok;
    agg.mean = {fs / n, ee / n, ce / n, bal / n};
    agg.runtime = rt / n;
  } else {
    agg.mean = {kNan, kNan, kNan, kNan};
    agg.runtime = kNan;
  }
  return agg;
}

void write_aggregate_csv(const std::string& path,
                         const std::vector<std::string>& methods,
                         const std::vector<TrialRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "method,trials_ok,fs,ee,ce,balance,runtime_s\n";
  for (const auto& method : methods) {
    const Aggregate agg = aggregate_rows(rows, method);
    out << method << "," << agg.trials_ok << "," << metrics_row(agg.mean)
        << "," << format_runtime(agg.runtime) << "\n";
  }
}

struct ExperimentArgs {
  std::string spec_path;
  std::string preset;
  std::string out_override;
  int trials_override = 0;
  int jobs = 1;
};

ExperimentSpec resolve_spec(const ExperimentArgs& args) {
  ExperimentSpec spec;
  if (!args.preset.empty()) {
    if (args.preset != "table2-desk") {
      throw std::invalid_argument("unknown preset '" + args.preset + "'");
    }
    spec = preset_table2_desk();
    if (!args.spec_path.empty()) {
      throw std::invalid_argument("pass either --spec or --preset, not both");
    }
  } else if (!args.spec_path.empty()) {
    spec = parse_experiment_spec(args.spec_path);
  } else {
    throw std::invalid_argument("need --spec FILE or --preset NAME");
  }
  if (!args.out_override.empty()) spec.out = args.out_override;
  if (args.trials_override > 0) spec.trials = args.trials_override;
  if (spec.methods.empty()) {
    throw std::invalid_argument("experiment spec: methods must be nonempty");
  }
  if (spec.trials < 1) {
    throw std::invalid_argument("experiment spec: trials must be >= 1");
  }
  for (const auto& m : spec.methods) parse_method(m);
  return spec;
}

int run_experiment(const ExperimentArgs& args) {
  const ExperimentSpec spec = resolve_spec(args);
  namespace stdfs = std::filesystem;
  bool all_ok = true;
  for (const auto& run : spec.noise_runs) {
    const stdfs::path dir = run.label.empty()
                                ? stdfs::path(spec.out)
                                : stdfs::path(spec.out) / run.label;
    stdfs::create_directories(dir);
    const std::vector<TrialRow> rows = run_trials(spec, run.noise, args.jobs);
    write_long_csv((dir / "results.csv").string(), rows);
    write_aggregate_csv((dir / "aggregate.csv").string(), spec.methods, rows);
    for (const auto& row : rows) all_ok = all_ok && row.ok;
    std::cout << "wrote " << (dir / "results.csv").string() << " ("
              << rows.size() << " rows)\n";
  }
  return all_ok ? 0 : 1;
}

int run_sweep(const ExperimentArgs& args) {
  ExperimentSpec spec = resolve_spec(args);
  if (spec.noise_runs.size() != 1) {
    throw std::invalid_argument("sweep uses a single noise regime");
  }
  auto grid_or_default = [](std::vector<double> grid, double fallback) {
    if (grid.empty()) grid.push_back(fallback);
    return grid;
  };
  const auto xis = grid_or_default(spec.xi_grid, spec.base_opts.fit.xi);
  const auto betas = grid_or_default(spec.beta_grid, spec.base_opts.fit.beta);
  const auto mus = grid_or_default(spec.mu_grid, spec.base_opts.fit.mu);
  const auto gammas = grid_or_default(spec.gamma_grid, spec.base_opts.fit.gamma);

  namespace stdfs = std::filesystem;
  stdfs::create_directories(spec.out);
  std::ofstream out(stdfs::path(spec.out) / "sweep.csv");
  if (!out) throw std::runtime_error("cannot open sweep.csv");
  out << "method,xi,beta,mu,gamma,trials_ok,fs,ee,ce,balance,runtime_s\n";

  struct Best {
    double fs = -1.0, ee = std::numeric_limits<double>::infinity();
    double ce = std::numeric_limits<double>::infinity(), bal = -1.0;
    std::string fs_at, ee_at, ce_at, bal_at;
  };
  std::map<std::string, Best> best;
  bool all_ok = true;

  for (const auto& method : spec.methods) {
    ExperimentSpec one = spec;
    one.methods = {method};
    for (const double xi : xis) {
      for (const double beta : betas) {
        for (const double mu : mus) {
          for (const double gamma : gammas) {
            MethodOptions opts = options_for(spec, method);
            opts.fit.xi = xi;
            opts.fit.beta = beta;
            opts.fit.mu = mu;
            opts.fit.gamma = gamma;
            one.base_opts = opts;
            one.per_method.clear();
            const std::vector<TrialRow> rows =
                run_trials(one, spec.noise_runs[0].noise, args.jobs);
            const Aggregate agg = aggregate_rows(rows, method);
            for (const auto& row : rows) all_ok = all_ok && row.ok;
            out << method << "," << fgc::format_double(xi) << ","
                << fgc::format_double(beta) << "," << fgc::format_double(mu)
                << "," << fgc::format_double(gamma) << "," << agg.trials_ok
                << "," << metrics_row(agg.mean) << ","
                << format_runtime(agg.runtime) << "\n";
            if (agg.trials_ok == 0) continue;
            const std::string at = "xi=" + fgc::format_double(xi) +
                                   " beta=" + fgc::format_double(beta) +
                                   " mu=" + fgc::format_double(mu) +
                                   " gamma=" + fgc::format_double(gamma);
            Best& b = best[method];
            if (agg.mean.fs > b.fs) { b.fs = agg.mean.fs; b.fs_at = at; }
            if (agg.mean.ee < b.ee) { b.ee = agg.mean.ee; b.ee_at = at; }
            if (agg.mean.ce < b.ce) { b.ce = agg.mean.ce; b.ce_at = at; }
            if (agg.mean.bal > b.bal) { b.bal = agg.mean.bal; b.bal_at = at; }
          }
        }
      }
    }
  }
  for (const auto& [method, b] : best) {
    std::cout << method << " best fs=" << fgc::format_double(b.fs) << " at "
              << b.fs_at << "\n";
    std::cout << method << " best ee=" << fgc::format_double(b.ee) << " at "
              << b.ee_at << "\n";
    std::cout << method << " best ce=" << fgc::format_double(b.ce) << " at "
              << b.ce_at << "\n";
    std::cout << method << " best balance=" << fgc::format_double(b.bal)
              << " at " << b.bal_at << "\n";
  }
  return all_ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// check-theory

int run_check_theory(std::uint64_t seed) {
  bool all_pass = true;

  // Curvature floor of the weight regularizer: the Hessian must dominate
  // 4*beta*I for every positive weight vector.
  {
    fgc::Rng rng(seed);
    double worst = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::Index d = 3 + static_cast<Eigen::Index>(rng.uniform_int(10));
      const Eigen::Index pn = fgc::edge_count(d);
      VectorXd w(pn);
      for (Eigen::Index i = 0; i < pn; ++i) w[i] = rng.uniform(0.05, 2.0);
      const double alpha = rng.uniform(0.5, 2.0);
      const double beta = rng.uniform(0.01, 1.0);
      const MatrixXd h = fgc::regularizer_hessian(w, alpha, beta);
      const double lmin =
          Eigen::SelfAdjointEigenSolver<MatrixXd>(h).eigenvalues().minCoeff();
      worst = std::min(worst, lmin - 4.0 * beta);
    }
    const bool pass = worst >= -1e-8;
    all_pass = all_pass && pass;
    std::cout << "strong-convexity: " << (pass ? "PASS" : "FAIL")
              << " (min eigenvalue margin " << fgc::format_double(worst)
              << ")\n";
  }

  // Estimation-error bound on solver outputs with tight KKT residuals.
  {
    fgc::Rng rng(seed + 1);
    bool pass = true;
    double worst_gap = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 10 && pass; ++trial) {
      fgc::VsbmParams p;
      p.num_nodes = 24;
      p.num_clusters = 3;
      p.num_groups = 2;
      const std::uint64_t s = rng.next_u64();
      const fgc::GroundTruth gt = fgc::vsbm_generate(p, s);
      fgc::NoiseSpec noise;
      noise.lo = 0.0;
      noise.hi = 0.2;
      const fgc::SignalSample sig =
          fgc::sample_signals(gt, 200, noise, fgc::Rng::mix(s));
      const fgc::FairnessSystem fsys = fgc::build_fairness_system(gt.groups);

      const double mu = 0.05, beta = 0.2;
      const MatrixXd y_hat =
          fgc::random_orthonormal(fsys.z.cols(), p.num_clusters, s ^ 0x9e37);
      const MatrixXd u_hat = fsys.z * y_hat;
      const VectorXd pw = fgc::pairwise_cost(sig.x, &u_hat, 1.0, mu);

      fgc::WSolverConfig wcfg;
      wcfg.beta = beta;
      wcfg.rel_tol = 1e-12;
      wcfg.max_iter = 200000;
      const VectorXd w_hat = fgc::solve_w(pw, wcfg).w;
      const double kkt = fgc::w_kkt_residual(pw, w_hat, wcfg.alpha, beta);
      if (kkt > 1e-9) {
        std::cerr << "estimation-bound: KKT residual " << kkt
                  << " too loose on trial " << trial << "\n";
        pass = false;
        break;
      }
      const fgc::BoundReport rep = fgc::prop2_bound(
          fgc::laplacian_from_weights(w_hat),
          fgc::laplacian_from_weights(gt.w), sig.x, y_hat, fsys, mu, beta);
      pass = pass && rep.holds;
      worst_gap = std::min(worst_gap, rep.bound_value - rep.lhs);
    }
    all_pass = all_pass && pass;
    std::cout << "estimation-bound: " << (pass ? "PASS" : "FAIL")
              << " (min bound slack " << fgc::format_double(worst_gap)
              << ")\n";
  }

  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Fair spectral clustering with joint graph learning: dataset "
      "generation, fitting, evaluation, and experiment harness"};
  app.require_subcommand(1);

  // gen ----------------------------------------------------------------
  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dataset");
  gen_cmd->add_option("--D", gen.num_nodes, "Number of nodes");
  gen_cmd->add_option("--K", gen.num_clusters, "Number of clusters");
  gen_cmd->add_option("--S", gen.num_groups, "Number of sensitive groups");
  gen_cmd->add_option("--N", gen.n, "Number of signal samples");
  gen_cmd->add_option("--a", gen.a, "Edge prob., same cluster and group");
  gen_cmd->add_option("--b", gen.b, "Edge prob., same cluster only");
  gen_cmd->add_option("--c", gen.c, "Edge prob., same group only");
  gen_cmd->add_option("--d", gen.d, "Edge prob., neither shared");
  gen_cmd->add_option("--weight-lo", gen.weight_lo, "Edge weight lower bound");
  gen_cmd->add_option("--weight-hi", gen.weight_hi, "Edge weight upper bound");
  gen_cmd->add_option("--zeta", gen.zeta,
                      "Group fractions (comma list; default equal)")
      ->delimiter(',');
  gen_cmd->add_option("--noise-lo", gen.noise_lo, "Noise sigma lower bound");
  gen_cmd->add_option("--noise-hi", gen.noise_hi, "Noise sigma upper bound");
  gen_cmd->add_option("--noise-sigma", gen.noise_sigma,
                      "Constant noise sigma (overrides the range)");
  gen_cmd->add_option("--seed", gen.seed, "RNG seed");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  // fit ------------------------------------------------------------------
  FitArgs fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit one method on a dataset");
  fit_cmd->add_option("--data", fit.data, "Dataset directory")->required();
  fit_cmd->add_option("--out", fit.out, "Result directory (optional)");
  fit_cmd->add_option("--method", fit.method,
                      "unified|sep|sep-kmeans|no-denoise|fjgsed|fsrsc|corr|"
                      "knn|epsnn");
  fit_cmd->add_option("--config", fit.config_path,
                      "Config file (key = value; flags override)");
  double f_xi = 0, f_beta = 0, f_alpha = 0, f_mu = 0, f_gamma = 0;
  double f_rel_tol = 0, f_eps = 0, f_alpha_u = 0, f_gamma_u = 0;
  long long f_outer = 0, f_seed = 0, f_knn = 0, f_l = 0, f_restarts = 0;
  bool f_no_eigen = false, f_refresh = false, f_random_rot = false;
  auto* o_xi = fit_cmd->add_option("--xi", f_xi, "Smoothness weight");
  auto* o_beta = fit_cmd->add_option("--beta", f_beta, "Sparsity weight");
  auto* o_alpha = fit_cmd->add_option("--alpha", f_alpha, "Log-degree weight");
  auto* o_mu = fit_cmd->add_option("--mu", f_mu, "Embedding weight");
  auto* o_gamma = fit_cmd->add_option("--gamma", f_gamma, "Rotation weight");
  auto* o_outer =
      fit_cmd->add_option("--outer-max-iter", f_outer, "Outer sweep cap");
  auto* o_rel =
      fit_cmd->add_option("--outer-rel-tol", f_rel_tol, "Outer stop tolerance");
  auto* o_seed = fit_cmd->add_option("--seed", f_seed, "RNG seed");
  auto* o_knn = fit_cmd->add_option("--knn-k", f_knn, "Neighbor count (knn)");
  auto* o_eps =
      fit_cmd->add_option("--eps-radius", f_eps, "Neighborhood radius (epsnn)");
  auto* o_l = fit_cmd->add_option("--l", f_l, "Neighbor count (fjgsed)");
  auto* o_alpha_u =
      fit_cmd->add_option("--alpha-u", f_alpha_u, "l1 weight (fsrsc)");
  auto* o_gamma_u =
      fit_cmd->add_option("--gamma-u", f_gamma_u, "Consensus weight (fsrsc)");
  auto* o_restarts = fit_cmd->add_option("--kmeans-restarts", f_restarts,
                                         "k-means restarts (sep-kmeans)");
  fit_cmd->add_flag("--no-eigen-warm", f_no_eigen,
                    "Skip the eigenvector warm start on the first sweep");
  fit_cmd->add_flag("--refresh-eigen-warm", f_refresh,
                    "Recompute the eigenvector warm candidate every sweep");
  fit_cmd->add_flag("--random-rotation-init", f_random_rot,
                    "Start from a seeded random rotation instead of identity");

  // eval -----------------------------------------------------------------
  EvalArgs eval;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Metrics for an existing result directory");
  eval_cmd->add_option("--data", eval.data, "Dataset directory")->required();
  eval_cmd->add_option("--result", eval.result, "Result directory")->required();

  // experiment / sweep -----------------------------------------------------
  ExperimentArgs exp;
  CLI::App* exp_cmd =
      app.add_subcommand("experiment", "Run trials x methods, write CSVs");
  exp_cmd->add_option("--spec", exp.spec_path, "Experiment spec file");
  exp_cmd->add_option("--preset", exp.preset, "Named preset (table2-desk)");
  exp_cmd->add_option("--out", exp.out_override, "Output directory override");
  exp_cmd->add_option("--trials", exp.trials_override, "Trial count override");
  exp_cmd->add_option("--jobs", exp.jobs, "Concurrent trials");

  ExperimentArgs swp;
  CLI::App* swp_cmd = app.add_subcommand(
      "sweep", "Grid-search hyperparameters, report best per metric");
  swp_cmd->add_option("--spec", swp.spec_path, "Experiment spec file");
  swp_cmd->add_option("--preset", swp.preset, "Named preset (table2-desk)");
  swp_cmd->add_option("--out", swp.out_override, "Output directory override");
  swp_cmd->add_option("--trials", swp.trials_override, "Trial count override");
  swp_cmd->add_option("--jobs", swp.jobs, "Concurrent trials");

  // check-theory ------------------------------------------------------------
  std::uint64_t theory_seed = 7;
  CLI::App* theory_cmd = app.add_subcommand(
      "check-theory", "Run the curvature and estimation-bound suites");
  theory_cmd->add_option("--seed", theory_seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen_cmd->parsed()) return run_gen(gen);
    if (fit_cmd->parsed()) {
      if (!fit.config_path.empty()) {
        apply_config_file(fit.opts, fit.config_path);
      }
      fgc::FitConfig& f = fit.opts.fit;
      if (o_xi->count()) f.xi = f_xi;
      if (o_beta->count()) f.beta = f_beta;
      if (o_alpha->count()) f.alpha = f_alpha;
      if (o_mu->count()) f.mu = f_mu;
      if (o_gamma->count()) f.gamma = f_gamma;
      if (o_outer->count()) f.outer_max_iter = static_cast<int>(f_outer);
      if (o_rel->count()) f.outer_rel_tol = f_rel_tol;
      if (o_seed->count()) f.seed = static_cast<std::uint64_t>(f_seed);
      if (o_knn->count()) f.knn_k = static_cast<int>(f_knn);
      if (o_eps->count()) f.eps_radius = f_eps;
      if (o_l->count()) fit.opts.l = static_cast<int>(f_l);
      if (o_alpha_u->count()) fit.opts.alpha_u = f_alpha_u;
      if (o_gamma_u->count()) fit.opts.gamma_u = f_gamma_u;
      if (o_restarts->count()) f.kmeans_restarts = static_cast<int>(f_restarts);
      if (f_no_eigen) f.eigen_warm_start = false;
      if (f_refresh) f.refresh_eigen_warm = true;
      if (f_random_rot) f.random_rotation_init = true;
      return run_fit(fit);
    }
    if (eval_cmd->parsed()) return run_eval(eval);
    if (exp_cmd->parsed()) return run_experiment(exp);
    if (swp_cmd->parsed()) return run_sweep(swp);
    if (theory_cmd->parsed()) return run_check_theory(theory_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    const bool isolated =
        std::string(e.what()).find("isolated") != std::string::npos;
    return isolated ? 2 : 1;
  }
  return 1;
}
