// Command-line front end: generate synthetic instances, fit, evaluate, and
// run benchmark sweeps. Exit codes: 0 success, 2 bad input, 3 numerical
// failure.
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "local/datagen.hpp"
#include "local/io.hpp"
#include "local/metrics.hpp"
#include "local/trainer.hpp"

using json = nlohmann::ordered_json;
using namespace local;
namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "0.1.0";
constexpr int kSchemaVersion = 1;

constexpr int kExitBadInput = 2;
constexpr int kExitNumerical = 3;

struct BadInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw BadInput("cannot create output directory " + dir + ": " + ec.message());
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw BadInput("cannot write " + path);
  out << j.dump(2) << "\n";
}

Matrix stack_blocks(const std::vector<Matrix>& blocks) {
  if (blocks.empty()) return Matrix(0, 0);
  const int d = blocks[0].cols;
  Matrix out(static_cast<int>(blocks.size()) * blocks[0].rows, d);
  int row = 0;
  for (const auto& b : blocks) {
    for (int i = 0; i < b.rows; ++i, ++row)
      for (int j = 0; j < d; ++j) out(row, j) = b(i, j);
  }
  return out;
}

Matrix abs_matrix(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data) v = std::fabs(v);
  return out;
}

Matrix support_of(const Matrix& m) {
  Matrix out(m.rows, m.cols);
  for (size_t i = 0; i < m.data.size(); ++i) out.data[i] = m.data[i] != 0.0 ? 1.0 : 0.0;
  return out;
}

// ----------------------------------------------------------------- generate

struct GenerateFlags {
  int d = 10;
  int p = 1;
  int T = 1000;
  double density = 1.0;
  double lag_density = -1.0;
  double eta = 1.5;
  double sigma = 1.0;
  unsigned long long seed = 0;
  std::string out = ".";
};

void run_generate(const GenerateFlags& f) {
  if (f.d < 2) throw BadInput("--d must be at least 2");
  if (f.p < 1) throw BadInput("--p must be at least 1");
  if (f.T < f.p + 1) throw BadInput("--T must exceed --p");
  if (f.sigma <= 0.0) throw BadInput("--sigma must be positive");

  GraphSpec spec;
  spec.d = f.d;
  spec.lag = f.p;
  spec.mean_degree = f.density;
  spec.lag_density = f.lag_density;
  spec.eta = f.eta;
  spec.seed = f.seed;
  SeriesConfig scfg;
  scfg.length = f.T;
  scfg.noise_std = f.sigma;
  scfg.seed = f.seed;

  Instance inst = generate_instance(spec, scfg);

  ensure_dir(f.out);
  write_series_csv(join_path(f.out, "series.csv"), inst.series);
  write_matrix_csv(join_path(f.out, "W_true.csv"), inst.truth.w_true);
  for (int k = 1; k <= f.p; ++k)
    write_matrix_csv(join_path(f.out, "A" + std::to_string(k) + "_true.csv"),
                     inst.truth.a_true[k - 1]);

  json meta;
  meta["schema_version"] = kSchemaVersion;
  meta["tool_version"] = kToolVersion;
  meta["d"] = f.d;
  meta["p"] = f.p;
  meta["T"] = f.T;
  meta["density"] = f.density;
  meta["lag_density"] = f.lag_density < 0.0 ? 1.0 / f.d : f.lag_density;
  meta["eta"] = f.eta;
  meta["sigma"] = f.sigma;
  meta["seed"] = f.seed;
  meta["spectral_radius"] = stability_estimate(inst.truth.a_true, inst.truth.w_true);
  write_json(join_path(f.out, "meta.json"), meta);
}

// ---------------------------------------------------------------------- fit

struct FitFlags {
  std::string series;
  int p = 1;
  int k = -1;
  double lambda2 = 0.01;
  double lr = 1e-2;
  int epochs = 2000;
  int batch = 16;
  double threshold = 0.3;
  double tau = 1.0;
  double omega = 0.01;
  unsigned long long seed = 0;
  std::string ablation = "none";
  std::string out = ".";
};

json loss_summary(const std::vector<LossValue>& history) {
  json j;
  j["epochs"] = history.size();
  if (!history.empty()) {
    j["first"] = history.front().total;
    j["last"] = history.back().total;
    auto dump = [&](int stride) {
      json trace = json::array();
      for (size_t i = 0; i < history.size(); i += stride) trace.push_back(history[i].total);
      return trace;
    };
    j["trace"] = dump(std::max<int>(1, static_cast<int>(history.size()) / 50));
    j["last_data_term"] = history.back().data_term;
    j["last_logdet_term"] = history.back().logdet_term;
    j["last_sparsity_term"] = history.back().sparsity_term;
    j["last_acyclicity_term"] = history.back().acyclicity_term;
  }
  return j;
}

FitResult run_fit(const FitFlags& f) {
  if (f.p < 1) throw BadInput("--p must be at least 1");
  if (f.epochs < 1) throw BadInput("--epochs must be positive");
  if (f.batch < 1) throw BadInput("--batch must be positive");

  std::vector<Matrix> series;
  try {
    series = read_series_csv(f.series);
  } catch (const CsvError& e) {
    throw BadInput(e.what());
  }

  TrainConfig cfg;
  cfg.epochs = f.epochs;
  cfg.batch_size = f.batch;
  cfg.lr = f.lr;
  cfg.seed = f.seed;
  cfg.threshold = f.threshold;
  cfg.loss.lambda2 = f.lambda2;
  cfg.mask.tau = f.tau;
  cfg.mask.omega = f.omega;
  if (f.k > 0) cfg.embed_dim = f.k;
  cfg.ablation = ablation_from_string(f.ablation);
  if (cfg.ablation == Ablation::kNoAcml) {
    cfg.loss.use_mask = false;
    cfg.loss.lambda1 = cfg.lambda1_base;
  }
  if (cfg.ablation == Ablation::kNoQmle) cfg.loss.kind = LossKind::kLse;

  TimeSeriesDataset data;
  try {
    data = make_samples(series, f.p);
  } catch (const DimensionError& e) {
    throw BadInput(e.what());
  }

  FitResult r = fit(data, cfg);

  ensure_dir(f.out);
  write_matrix_csv(join_path(f.out, "W_est.csv"), r.w_weighted);
  write_matrix_csv(join_path(f.out, "W_est_binary.csv"), r.w_binary);
  for (int k = 1; k <= f.p; ++k) {
    write_matrix_csv(join_path(f.out, "A" + std::to_string(k) + "_est.csv"), r.a_weighted[k - 1]);
    write_matrix_csv(join_path(f.out, "A" + std::to_string(k) + "_est_binary.csv"),
                     r.a_binary[k - 1]);
  }

  json report;
  report["schema_version"] = kSchemaVersion;
  report["tool_version"] = kToolVersion;
  report["command"] = "fit";
  json cfg_echo;
  // input paths are deliberately not echoed: reports must be byte-identical
  // across runs regardless of where the artifacts live
  cfg_echo["p"] = f.p;
  cfg_echo["k"] = f.k > 0 ? f.k : default_embed_dim(data.x.cols);
  cfg_echo["lambda2"] = f.lambda2;
  cfg_echo["lr"] = f.lr;
  cfg_echo["epochs"] = f.epochs;
  cfg_echo["batch"] = f.batch;
  cfg_echo["threshold"] = f.threshold;
  cfg_echo["tau"] = f.tau;
  cfg_echo["omega"] = f.omega;
  cfg_echo["seed"] = f.seed;
  cfg_echo["ablation"] = f.ablation;
  report["config"] = cfg_echo;
  report["loss"] = loss_summary(r.loss_history);
  // wall time deliberately omitted: report.json must be reproducible byte
  // for byte across runs with the same seed
  report["aborted"] = r.aborted;
  if (!r.note.empty()) report["note"] = r.note;
  write_json(join_path(f.out, "report.json"), report);

  if (r.aborted) throw NumericError("fit aborted: " + r.note);
  return r;
}

// --------------------------------------------------------------------- eval

struct EvalFlags {
  std::string est;
  std::string truth;
  int p = 1;
  std::string out;
  bool quiet = false;
};

struct TargetMetrics {
  double tpr = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  long shd_count = 0;
  double auroc_v = 0.0;
  double auprc_v = 0.0;
};

TargetMetrics score_target(const Matrix& weighted, const Matrix& binary, const Matrix& truth,
                           bool exclude_diagonal) {
  TargetMetrics t;
  EdgeScores es = tpr_f1(confusion(binary, truth, exclude_diagonal));
  t.tpr = es.tpr;
  t.precision = es.precision;
  t.f1 = es.f1;
  t.shd_count = shd(binary, truth, exclude_diagonal);
  Matrix scores = abs_matrix(weighted);
  try {
    t.auroc_v = auroc(scores, truth, exclude_diagonal);
    t.auprc_v = auprc(scores, truth, exclude_diagonal);
  } catch (const std::invalid_argument&) {
    // single-class truth: curve areas are undefined, report NaN
    t.auroc_v = std::nan("");
    t.auprc_v = std::nan("");
  }
  return t;
}

Matrix load_matrix(const std::string& dir, const std::string& name) {
  std::string path = join_path(dir, name);
  if (!fs::exists(path)) throw BadInput("missing file " + path);
  try {
    return read_matrix_csv(path);
  } catch (const CsvError& e) {
    throw BadInput(e.what());
  }
}

// Estimate directories may hold fit output (W_est*) or ground truth
// (W_true); the latter lets eval compare a truth directory against itself.
Matrix load_first(const std::string& dir, const std::vector<std::string>& names) {
  for (const auto& n : names)
    if (fs::exists(join_path(dir, n))) return load_matrix(dir, n);
  throw BadInput("none of the expected files found in " + dir + " (tried " + names[0] + ")");
}

void check_shape(const Matrix& a, const Matrix& b, const std::string& what) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw BadInput("shape mismatch for " + what + ": " + std::to_string(a.rows) + "x" +
                   std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                   std::to_string(b.cols));
}

json metrics_json(const TargetMetrics& t) {
  json j;
  j["tpr"] = t.tpr;
  j["precision"] = t.precision;
  j["f1"] = t.f1;
  j["shd"] = t.shd_count;
  if (std::isnan(t.auroc_v)) {
    j["auroc"] = nullptr;
    j["auprc"] = nullptr;
  } else {
    j["auroc"] = t.auroc_v;
    j["auprc"] = t.auprc_v;
  }
  return j;
}

json run_eval(const EvalFlags& f) {
  Matrix w_weighted = load_first(f.est, {"W_est.csv", "W_true.csv"});
  Matrix w_binary = fs::exists(join_path(f.est, "W_est_binary.csv"))
                        ? load_matrix(f.est, "W_est_binary.csv")
                        : support_of(w_weighted);
  Matrix w_truth = support_of(load_first(f.truth, {"W_true.csv", "W_est.csv"}));
  check_shape(w_binary, w_truth, "W");

  std::vector<Matrix> a_weighted, a_binary, a_truth;
  for (int k = 1; k <= f.p; ++k) {
    std::string est_name = "A" + std::to_string(k) + "_est.csv";
    std::string true_name = "A" + std::to_string(k) + "_true.csv";
    Matrix aw = load_first(f.est, {est_name, true_name});
    Matrix ab = fs::exists(join_path(f.est, "A" + std::to_string(k) + "_est_binary.csv"))
                    ? load_matrix(f.est, "A" + std::to_string(k) + "_est_binary.csv")
                    : support_of(aw);
    Matrix at = support_of(load_first(f.truth, {true_name, est_name}));
    check_shape(ab, at, "A" + std::to_string(k));
    a_weighted.push_back(aw);
    a_binary.push_back(ab);
    a_truth.push_back(at);
  }

  TargetMetrics inst = score_target(w_weighted, w_binary, w_truth, true);
  // lag blocks keep their diagonal: self-lag edges are real dependencies
  TargetMetrics lagged = score_target(stack_blocks(a_weighted), stack_blocks(a_binary),
                                      stack_blocks(a_truth), false);

  json report;
  report["schema_version"] = kSchemaVersion;
  report["tool_version"] = kToolVersion;
  report["command"] = "eval";
  report["p"] = f.p;
  report["instantaneous"] = metrics_json(inst);
  report["lagged"] = metrics_json(lagged);

  if (!f.out.empty()) {
    ensure_dir(f.out);
    write_json(join_path(f.out, "report.json"), report);
  }

  if (!f.quiet) {
    std::printf("%-14s %8s %8s %8s %8s %8s %8s\n", "target", "tpr", "prec", "f1", "shd", "auroc",
                "auprc");
    auto row = [](const char* name, const TargetMetrics& t) {
      std::printf("%-14s %8.3f %8.3f %8.3f %8ld %8.3f %8.3f\n", name, t.tpr, t.precision, t.f1,
                  t.shd_count, t.auroc_v, t.auprc_v);
    };
    row("instantaneous", inst);
    row("lagged", lagged);
  }
  return report;
}

// -------------------------------------------------------------------- bench

struct BenchFlags {
  std::vector<int> d_list = {10};
  std::vector<unsigned long long> seeds = {1, 2, 3};
  int T = 1000;
  int p = 1;
  int epochs = 2000;
  std::vector<std::string> ablations = {"none"};
  std::string out = "bench_out";
  int jobs = 1;
};

struct BenchCell {
  int d = 0;
  unsigned long long seed = 0;
  std::string ablation;
  bool ok = false;
  std::string error;
  TargetMetrics inst;
  TargetMetrics lagged;
  double wall_time_seconds = 0.0;
};

TargetMetrics metrics_from_json(const json& j) {
  TargetMetrics t;
  t.tpr = j.at("tpr").get<double>();
  t.precision = j.at("precision").get<double>();
  t.f1 = j.at("f1").get<double>();
  t.shd_count = j.at("shd").get<long>();
  t.auroc_v = j.at("auroc").is_null() ? std::nan("") : j.at("auroc").get<double>();
  t.auprc_v = j.at("auprc").is_null() ? std::nan("") : j.at("auprc").get<double>();
  return t;
}

void run_cell(const BenchFlags& f, BenchCell& cell) {
  auto start = std::chrono::steady_clock::now();
  std::string dir = join_path(f.out, "cells/d" + std::to_string(cell.d) + "_s" +
                                         std::to_string(cell.seed) + "_" + cell.ablation);
  try {
    GenerateFlags gen;
    gen.d = cell.d;
    gen.p = f.p;
    gen.T = f.T;
    gen.seed = cell.seed;
    gen.out = dir;
    run_generate(gen);

    FitFlags fit_flags;
    fit_flags.series = join_path(dir, "series.csv");
    fit_flags.p = f.p;
    fit_flags.epochs = f.epochs;
    fit_flags.seed = cell.seed;
    fit_flags.ablation = cell.ablation;
    fit_flags.out = dir;
    FitResult r = run_fit(fit_flags);
    cell.wall_time_seconds = r.wall_time_seconds;

    EvalFlags ev;
    ev.est = dir;
    ev.truth = dir;
    ev.p = f.p;
    ev.quiet = true;
    json report = run_eval(ev);
    cell.inst = metrics_from_json(report["instantaneous"]);
    cell.lagged = metrics_from_json(report["lagged"]);
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  if (cell.wall_time_seconds == 0.0) cell.wall_time_seconds = elapsed.count();
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= xs.size();
  for (double x : xs) m.std += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(m.std / xs.size());
  return m;
}

void run_bench(const BenchFlags& f) {
  if (f.jobs < 1) throw BadInput("--jobs must be positive");
  ensure_dir(f.out);

  std::vector<BenchCell> cells;
  for (int d : f.d_list)
    for (const auto& abl : f.ablations)
      for (unsigned long long seed : f.seeds) {
        BenchCell c;
        c.d = d;
        c.seed = seed;
        c.ablation = abl;
        cells.push_back(c);
      }

  std::atomic<size_t> next{0};
  std::mutex io_mutex;
  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      run_cell(f, cells[i]);
      std::lock_guard<std::mutex> lock(io_mutex);
      if (cells[i].ok)
        std::printf("d=%d seed=%llu ablation=%s inst_f1=%.3f lagged_f1=%.3f (%.1fs)\n", cells[i].d,
                    cells[i].seed, cells[i].ablation.c_str(), cells[i].inst.f1, cells[i].lagged.f1,
                    cells[i].wall_time_seconds);
      else
        std::printf("d=%d seed=%llu ablation=%s FAILED: %s\n", cells[i].d, cells[i].seed,
                    cells[i].ablation.c_str(), cells[i].error.c_str());
    }
  };
  int n_workers = std::min<int>(f.jobs, static_cast<int>(cells.size()));
  std::vector<std::thread> pool;
  for (int i = 1; i < n_workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // long-format CSV, one row per cell and metric
  {
    std::ofstream out(join_path(f.out, "bench_long.csv"));
    out << "d,seed,ablation,status,target,metric,value\n";
    for (const auto& c : cells) {
      if (!c.ok) {
        out << c.d << "," << c.seed << "," << c.ablation << ",failed,,,\n";
        continue;
      }
      auto emit = [&](const char* target, const TargetMetrics& t) {
        auto line = [&](const char* metric, double v) {
          out << c.d << "," << c.seed << "," << c.ablation << ",ok," << target << "," << metric
              << "," << format_double(v) << "\n";
        };
        line("tpr", t.tpr);
        line("precision", t.precision);
        line("f1", t.f1);
        line("shd", static_cast<double>(t.shd_count));
        line("auroc", t.auroc_v);
        line("auprc", t.auprc_v);
      };
      emit("instantaneous", c.inst);
      emit("lagged", c.lagged);
      out << c.d << "," << c.seed << "," << c.ablation << ",ok,,wall_time_seconds,"
          << format_double(c.wall_time_seconds) << "\n";
    }
  }

  // summary table: one row per (d, ablation), mean +/- population std
  {
    std::ofstream out(join_path(f.out, "bench_summary.csv"));
    out << "d,ablation,n_ok,n_failed,"
           "inst_tpr_mean,inst_tpr_std,inst_shd_mean,inst_shd_std,"
           "inst_f1_mean,inst_f1_std,inst_auroc_mean,inst_auroc_std,"
           "lag_tpr_mean,lag_tpr_std,lag_shd_mean,lag_shd_std,"
           "lag_f1_mean,lag_f1_std,lag_auroc_mean,lag_auroc_std,"
           "wall_time_mean,wall_time_std\n";
    for (int d : f.d_list)
      for (const auto& abl : f.ablations) {
        std::vector<const BenchCell*> group;
        int failed = 0;
        for (const auto& c : cells)
          if (c.d == d && c.ablation == abl) {
            if (c.ok)
              group.push_back(&c);
            else
              ++failed;
          }
        auto collect = [&](auto getter) {
          std::vector<double> xs;
          for (const auto* c : group) xs.push_back(getter(*c));
          return mean_std(xs);
        };
        out << d << "," << abl << "," << group.size() << "," << failed;
        auto pair = [&](MeanStd m) {
          out << "," << format_double(m.mean) << "," << format_double(m.std);
        };
        pair(collect([](const BenchCell& c) { return c.inst.tpr; }));
        pair(collect([](const BenchCell& c) { return static_cast<double>(c.inst.shd_count); }));
        pair(collect([](const BenchCell& c) { return c.inst.f1; }));
        pair(collect([](const BenchCell& c) { return c.inst.auroc_v; }));
        pair(collect([](const BenchCell& c) { return c.lagged.tpr; }));
        pair(collect([](const BenchCell& c) { return static_cast<double>(c.lagged.shd_count); }));
        pair(collect([](const BenchCell& c) { return c.lagged.f1; }));
        pair(collect([](const BenchCell& c) { return c.lagged.auroc_v; }));
        pair(collect([](const BenchCell& c) { return c.wall_time_seconds; }));
        out << "\n";
      }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structure learning for time series with instantaneous and lagged edges"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  GenerateFlags gen;
  CLI::App* cmd_gen = app.add_subcommand("generate", "sample a ground-truth model and series");
  cmd_gen->add_option("--d", gen.d, "number of variables");
  cmd_gen->add_option("--p", gen.p, "lag order");
  cmd_gen->add_option("--T", gen.T, "series length");
  cmd_gen->add_option("--density", gen.density, "mean out-degree of the instantaneous DAG");
  cmd_gen->add_option("--lag-density", gen.lag_density, "lag edge probability (default 1/d)");
  cmd_gen->add_option("--eta", gen.eta, "lag decay factor");
  cmd_gen->add_option("--sigma", gen.sigma, "noise standard deviation");
  cmd_gen->add_option("--seed", gen.seed, "rng seed");
  cmd_gen->add_option("--out", gen.out, "output directory");

  FitFlags fitf;
  CLI::App* cmd_fit = app.add_subcommand("fit", "estimate graphs from a series file");
  cmd_fit->add_option("--series", fitf.series, "series.csv path")->required();
  cmd_fit->add_option("--p", fitf.p, "lag order");
  cmd_fit->add_option("--k", fitf.k, "embedding dimension (default round(2d/5))");
  cmd_fit->add_option("--lambda2", fitf.lambda2, "sparsity weight");
  cmd_fit->add_option("--lr", fitf.lr, "learning rate");
  cmd_fit->add_option("--epochs", fitf.epochs, "training epochs");
  cmd_fit->add_option("--batch", fitf.batch, "batch size");
  cmd_fit->add_option("--threshold", fitf.threshold, "edge weight threshold");
  cmd_fit->add_option("--tau", fitf.tau, "mask temperature");
  cmd_fit->add_option("--omega", fitf.omega, "priority margin");
  cmd_fit->add_option("--seed", fitf.seed, "rng seed");
  cmd_fit->add_option("--ablation", fitf.ablation, "none|no-dgpl|no-acml|no-qmle");
  cmd_fit->add_option("--out", fitf.out, "output directory");

  EvalFlags ev;
  CLI::App* cmd_eval = app.add_subcommand("eval", "score estimates against ground truth");
  cmd_eval->add_option("--est", ev.est, "directory with estimate matrices")->required();
  cmd_eval->add_option("--truth", ev.truth, "directory with ground-truth matrices")->required();
  cmd_eval->add_option("--p", ev.p, "lag order");
  cmd_eval->add_option("--out", ev.out, "directory for report.json (optional)");

  BenchFlags bench;
  CLI::App* cmd_bench = app.add_subcommand("bench", "generate+fit+eval over a grid");
  cmd_bench->add_option("--d", bench.d_list, "grid of variable counts");
  cmd_bench->add_option("--seeds", bench.seeds, "grid of seeds");
  cmd_bench->add_option("--T", bench.T, "series length");
  cmd_bench->add_option("--p", bench.p, "lag order");
  cmd_bench->add_option("--epochs", bench.epochs, "training epochs per cell");
  cmd_bench->add_option("--ablation", bench.ablations, "ablation list");
  cmd_bench->add_option("--out", bench.out, "output directory");
  cmd_bench->add_option("--jobs", bench.jobs, "concurrent cells");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadInput;
  }

  try {
    if (cmd_gen->parsed()) run_generate(gen);
    if (cmd_fit->parsed()) run_fit(fitf);
    if (cmd_eval->parsed()) run_eval(ev);
    if (cmd_bench->parsed()) run_bench(bench);
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const SingularError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
  return 0;
}
