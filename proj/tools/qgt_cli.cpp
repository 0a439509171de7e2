// qgt — command-line front end for the quantitative group testing lab.
//
// Subcommands: generate, train, eval, verify, sweep-m, sweep-s, complexity,
// plot. Every experiment is driven by a JSON config (see --config); outputs
// land under --out, $QGT_OUTPUT_ROOT, or ./qgt-out in that order.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qgt/checkpoint.hpp"
#include "qgt/errors.hpp"
#include "qgt/experiment.hpp"
#include "qgt/format.hpp"
#include "qgt/report.hpp"
#include "qgt/verify.hpp"

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool smoke = false;
  int jobs = 1;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config JSON file");
  cmd->add_option("--out", args.out_dir, "output root directory");
  cmd->add_option("--seed", args.seed, "rebase the seed list to seed, seed+1, ...")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_flag("--smoke", args.smoke, "quarter-size dataset splits");
  cmd->add_option("--jobs", args.jobs, "parallel runs")->check(CLI::PositiveNumber);
  cmd->add_flag("--quiet", args.quiet, "suppress progress lines");
}

fs::path resolve_out(const CommonArgs& args) {
  if (!args.out_dir.empty()) return args.out_dir;
  if (const char* env = std::getenv("QGT_OUTPUT_ROOT"); env && *env) return env;
  return "qgt-out";
}

qgt::ExperimentConfig resolve_config(const CommonArgs& args) {
  qgt::ExperimentConfig cfg;
  if (!args.config_path.empty()) cfg = qgt::load_experiment_config(args.config_path);
  if (args.seed_set) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) cfg.seeds[i] = args.seed + i;
  }
  if (args.smoke) cfg = qgt::apply_smoke_profile(cfg);
  return cfg;
}

qgt::RunOptions resolve_run_options(const CommonArgs& args, const fs::path& out) {
  qgt::RunOptions opts;
  opts.output_root = out;
  opts.jobs = args.jobs;
  opts.verbose = !args.quiet;
  return opts;
}

qgt::GenConfig gen_config_of(const qgt::ExperimentConfig& cfg, std::uint64_t seed) {
  return qgt::GenConfig{cfg.items, cfg.pools, cfg.expected_defectives,
                        cfg.noise_sparsity, cfg.noise_bound, seed};
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex16(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[h & 0xf];
    h >>= 4;
  }
  return s;
}

int cmd_generate(const CommonArgs& args, bool with_csv) {
  const auto cfg = resolve_config(args);
  const auto seed = cfg.seeds.front();
  const auto data = qgt::make_dataset(gen_config_of(cfg, seed), cfg.sizes);
  const fs::path dir = resolve_out(args) / "data";
  fs::create_directories(dir);
  qgt::save_dataset(data.train, dir / "train.qgt");
  qgt::save_dataset(data.val, dir / "val.qgt");
  qgt::save_dataset(data.test, dir / "test.qgt");
  if (with_csv) {
    qgt::export_dataset_csv(data.train, dir / "train.csv");
    qgt::export_dataset_csv(data.val, dir / "val.csv");
    qgt::export_dataset_csv(data.test, dir / "test.csv");
  }
  std::cout << "wrote " << (dir / "{train,val,test}.qgt").string() << " ("
            << data.train.count << "/" << data.val.count << "/" << data.test.count
            << " samples, seed " << seed << ")\n";
  return 0;
}

int cmd_train(const CommonArgs& args, const std::string& data_dir) {
  const auto cfg = resolve_config(args);
  const auto seed = cfg.seeds.front();

  qgt::Dataset train_set, val_set;
  if (!data_dir.empty()) {
    train_set = qgt::load_dataset(fs::path(data_dir) / "train.qgt", qgt::Split::kTrain);
    val_set = qgt::load_dataset(fs::path(data_dir) / "val.qgt", qgt::Split::kVal);
  } else {
    auto data = qgt::make_dataset(gen_config_of(cfg, seed), cfg.sizes);
    train_set = std::move(data.train);
    val_set = std::move(data.val);
  }

  auto model = qgt::build_model(train_set.gen_config.pools, train_set.gen_config.items,
                                qgt::resolved_hidden(cfg), seed);
  model.complexity_level = cfg.complexity_level;
  qgt::TrainConfig tc = cfg.train;
  tc.seed = seed;
  auto [trained, history] = qgt::train(std::move(model), train_set, val_set, tc);
  const auto tau = qgt::calibrate_threshold(trained, val_set);

  const fs::path dir =
      resolve_out(args) / "train" / (qgt::point_label(cfg) + "_seed" + std::to_string(seed));
  fs::create_directories(dir);
  qgt::save_history_csv(history, dir / "history.csv");
  qgt::save_checkpoint({trained, train_set.gen_config, tau.value, tc},
                       dir / "checkpoint.json");
  std::cout << "checkpoint: " << (dir / "checkpoint.json").string()
            << "\nbest_epoch=" << history.best_epoch
            << " epochs_run=" << history.epochs_run()
            << " val_loss=" << qgt::format_double(history.val_loss[history.best_epoch - 1])
            << " tau=" << qgt::format_double(tau.value) << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& checkpoint_path,
             const std::string& data_path) {
  const auto ckpt = qgt::load_checkpoint(checkpoint_path);
  qgt::Dataset test_set;
  if (!data_path.empty()) {
    test_set = qgt::load_dataset(data_path, qgt::Split::kTest);
  } else {
    qgt::SplitSizes sizes;
    const auto cfg = resolve_config(args);
    sizes = cfg.sizes;
    test_set = qgt::make_dataset(ckpt.gen_config, sizes).test;
  }
  if (!ckpt.threshold)
    throw qgt::InvalidArgument("eval: checkpoint has no calibrated threshold");

  const qgt::Matrix preds = qgt::eval_outputs(ckpt.model, qgt::to_input_matrix(test_set));
  std::vector<qgt::SampleMetrics> per_sample;
  per_sample.reserve(test_set.count);
  std::vector<std::uint8_t> bits(test_set.gen_config.items);
  for (int i = 0; i < test_set.count; ++i) {
    for (int j = 0; j < test_set.gen_config.items; ++j)
      bits[j] = preds(i, j) >= *ckpt.threshold ? 1 : 0;
    per_sample.push_back(qgt::sample_metrics(test_set.signal(i), bits));
  }
  const auto report = qgt::aggregate(std::move(per_sample));

  const fs::path dir = resolve_out(args) / "eval";
  fs::create_directories(dir);
  const fs::path csv = dir / "metrics.csv";
  std::ofstream out(csv);
  if (!out) throw qgt::IoError("eval: cannot open " + csv.string());
  std::ostringstream cfg_text;
  cfg_text << ckpt.gen_config.items << "|" << ckpt.gen_config.pools << "|"
           << qgt::format_double(ckpt.gen_config.expected_defectives) << "|"
           << qgt::format_double(ckpt.gen_config.noise_sparsity) << "|"
           << ckpt.gen_config.noise_bound << "|" << ckpt.gen_config.seed;
  out << "config_hash,count,precision,recall,f1,success_rate,mse,tau\n"
      << hex16(fnv1a(cfg_text.str())) << "," << report.count << ","
      << qgt::format_double(report.mean.precision) << ","
      << qgt::format_double(report.mean.recall) << ","
      << qgt::format_double(report.mean.f1) << ","
      << qgt::format_double(report.mean.success) << ","
      << qgt::format_double(report.mean.mse) << ","
      << qgt::format_double(*ckpt.threshold) << "\n";
  std::cout << "test samples: " << report.count
            << "\nprecision=" << qgt::format_double(report.mean.precision)
            << " recall=" << qgt::format_double(report.mean.recall)
            << " f1=" << qgt::format_double(report.mean.f1)
            << " success_rate=" << qgt::format_double(report.mean.success)
            << " mse=" << qgt::format_double(report.mean.mse) << "\nwrote "
            << csv.string() << "\n";
  return 0;
}

int cmd_verify(const CommonArgs& args, const std::string& checkpoint_path,
               int jacobian_samples) {
  const auto ckpt = qgt::load_checkpoint(checkpoint_path);
  auto cfg = resolve_config(args);
  const int wanted = jacobian_samples > 0 ? jacobian_samples : cfg.jacobian_samples;
  qgt::SplitSizes sizes = cfg.sizes;
  sizes.test = std::max(sizes.test, wanted);
  const auto test_set = qgt::make_dataset(ckpt.gen_config, sizes).test;

  const auto batch = qgt::collect_jacobians(ckpt.model, test_set, wanted);
  const auto solution = qgt::solve_relaxed(batch);
  const auto recovered = qgt::binarize_kmeans(solution.estimate);
  const double err = qgt::structural_error(recovered, test_set.pooling);

  const fs::path dir = resolve_out(args) / "verify";
  fs::create_directories(dir);
  qgt::write_matrix_csv(solution.estimate.values, dir / "a_relaxed.csv");
  qgt::Matrix rec(test_set.pooling.pools, test_set.pooling.items);
  for (int i = 0; i < test_set.pooling.pools; ++i)
    for (int j = 0; j < test_set.pooling.items; ++j)
      rec(i, j) = recovered.values.at(i, j);
  qgt::write_matrix_csv(rec, dir / "a_recovered.csv");
  std::ofstream out(dir / "summary.csv");
  if (!out) throw qgt::IoError("verify: cannot write summary");
  out << "jacobian_samples,ridge_applied,condition_estimate,mismatch_pct\n"
      << wanted << "," << (solution.ridge_applied ? 1 : 0) << ","
      << qgt::format_double(solution.condition_estimate) << ","
      << qgt::format_double(err) << "\n";
  std::cout << "structural mismatch: " << qgt::format_double(err) << "% ("
            << wanted << " jacobians, ridge "
            << (solution.ridge_applied ? "applied" : "not applied") << ")\nwrote "
            << (dir / "a_recovered.csv").string() << "\n";
  return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& kind,
              const std::vector<double>& values) {
  auto cfg = resolve_config(args);
  if (!values.empty()) cfg.sweep_values = values;
  const fs::path out = resolve_out(args) / (kind == "pools" ? "sweep_m" : "sweep_s");
  const auto opts = resolve_run_options(args, out);
  const auto rows = kind == "pools" ? qgt::run_sweep_measurements(cfg, opts)
                                    : qgt::run_sweep_noise(cfg, opts);
  qgt::emit_outputs(rows, out);
  std::cout << "wrote " << (out / "results.csv").string() << " (" << rows.size()
            << " points)\n";
  return 0;
}

int cmd_complexity(const CommonArgs& args) {
  const auto cfg = resolve_config(args);
  const fs::path out = resolve_out(args) / "complexity";
  const auto rows = qgt::run_complexity_study(cfg, resolve_run_options(args, out));
  qgt::emit_outputs(rows, out);
  std::cout << "level  err%    f1      success_rate\n";
  for (const auto& row : rows)
    std::cout << "  " << int(row.sweep_value) << "    "
              << qgt::format_double(row.mean_struct_err_pct) << "  "
              << qgt::format_double(row.mean_metrics.f1) << "  "
              << qgt::format_double(row.mean_metrics.success) << "\n";
  std::cout << "wrote " << (out / "results.csv").string() << "\n";
  return 0;
}

// Rebuild SVG plots from a results.csv produced by this tool.
int cmd_plot(const CommonArgs& args, const std::string& results_path) {
  std::ifstream in(results_path);
  if (!in) throw qgt::IoError("plot: cannot open " + results_path);
  std::string header;
  std::getline(in, header);
  std::vector<std::string> columns;
  {
    std::istringstream hs(header);
    std::string col;
    while (std::getline(hs, col, ',')) columns.push_back(col);
  }
  const auto column_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    throw qgt::IoError("plot: results file lacks column '" + name + "'");
  };
  const int axis_col = column_index("sweep_axis");
  const int value_col = column_index("sweep_value");
  struct PlotMetric {
    const char* name;
    int col;
  };
  std::vector<PlotMetric> metrics;
  for (const char* name : {"precision", "recall", "f1", "success_rate", "mse",
                           "struct_err_pct"})
    metrics.push_back({name, column_index(name)});

  std::vector<qgt::ResultRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    qgt::ResultRow row;
    row.sweep_axis = cells.at(axis_col);
    row.sweep_value = std::stod(cells.at(value_col));
    row.mean_metrics.precision = std::stod(cells.at(metrics[0].col));
    row.mean_metrics.recall = std::stod(cells.at(metrics[1].col));
    row.mean_metrics.f1 = std::stod(cells.at(metrics[2].col));
    row.mean_metrics.success = std::stod(cells.at(metrics[3].col));
    row.mean_metrics.mse = std::stod(cells.at(metrics[4].col));
    row.mean_struct_err_pct = std::stod(cells.at(metrics[5].col));
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2 || rows.front().sweep_axis.empty())
    throw qgt::InvalidArgument("plot: need at least two swept rows");
  const fs::path dir = resolve_out(args) / "plots";
  fs::create_directories(dir);
  for (const auto& metric : metrics)
    qgt::write_metric_plot(rows, metric.name, dir / (std::string(metric.name) + ".svg"));
  std::cout << "wrote " << dir.string() << "/*.svg\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantitative group testing lab"};
  app.require_subcommand(1);

  CommonArgs args;
  bool gen_csv = false;
  std::string data_dir, checkpoint_path, data_path, results_path;
  std::vector<double> sweep_values;
  int jacobian_samples = 0;

  auto* generate = app.add_subcommand("generate", "write dataset files");
  add_common(generate, args);
  generate->add_flag("--csv", gen_csv, "also export CSV copies");

  auto* train = app.add_subcommand("train", "train one decoder and checkpoint it");
  add_common(train, args);
  train->add_option("--data", data_dir, "directory with train.qgt/val.qgt");

  auto* eval = app.add_subcommand("eval", "score a checkpoint on the test split");
  add_common(eval, args);
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")->required();
  eval->add_option("--data", data_path, "test dataset file");

  auto* verify = app.add_subcommand("verify", "recover the pooling matrix");
  add_common(verify, args);
  verify->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")->required();
  verify->add_option("-T,--jacobians", jacobian_samples, "jacobian sample count");

  auto* sweep_m = app.add_subcommand("sweep-m", "sweep the measurement count");
  add_common(sweep_m, args);
  sweep_m->add_option("--values", sweep_values, "pool counts")->delimiter(',');

  auto* sweep_s = app.add_subcommand("sweep-s", "sweep the noise activation ratio");
  add_common(sweep_s, args);
  sweep_s->add_option("--values", sweep_values, "noise ratios")->delimiter(',');

  auto* complexity = app.add_subcommand("complexity", "capacity levels 1-7");
  add_common(complexity, args);

  auto* plot = app.add_subcommand("plot", "rebuild plots from results.csv");
  add_common(plot, args);
  plot->add_option("--results", results_path, "results.csv path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*generate) return cmd_generate(args, gen_csv);
    if (*train) return cmd_train(args, data_dir);
    if (*eval) return cmd_eval(args, checkpoint_path, data_path);
    if (*verify) return cmd_verify(args, checkpoint_path, jacobian_samples);
    if (*sweep_m) return cmd_sweep(args, "pools", sweep_values);
    if (*sweep_s) return cmd_sweep(args, "noise", sweep_values);
    if (*complexity) return cmd_complexity(args);
    if (*plot) return cmd_plot(args, results_path);
  } catch (const qgt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const qgt::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const qgt::TrainingDiverged& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const qgt::SingularSystem& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const qgt::DegenerateClustering& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
