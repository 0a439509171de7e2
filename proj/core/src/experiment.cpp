#include "qgt/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "qgt/checkpoint.hpp"
#include "qgt/errors.hpp"
#include "qgt/format.hpp"
#include "qgt/report.hpp"
#include "qgt/verify.hpp"

namespace qgt {

namespace {

using nlohmann::json;

constexpr int kMaxLevel = 7;

json sizes_to_json(const SplitSizes& s) {
  return json{{"train", s.train}, {"val", s.val}, {"test", s.test}};
}

json train_to_json(const TrainConfig& t) {
  return json{{"batch_size", t.batch_size}, {"learning_rate", t.learning_rate},
              {"max_epochs", t.max_epochs}, {"patience", t.patience},
              {"seed", t.seed},             {"loss", t.loss}};
}

json config_to_json(const ExperimentConfig& c) {
  json j{{"items", c.items},
         {"pools", c.pools},
         {"expected_defectives", c.expected_defectives},
         {"noise_sparsity", c.noise_sparsity},
         {"noise_bound", c.noise_bound},
         {"sizes", sizes_to_json(c.sizes)},
         {"hidden", c.hidden},
         {"seeds", c.seeds},
         {"train", train_to_json(c.train)},
         {"jacobian_samples", c.jacobian_samples},
         {"sweep_axis", c.sweep_axis},
         {"sweep_values", c.sweep_values}};
  if (c.complexity_level) j["complexity_level"] = *c.complexity_level;
  return j;
}

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

ExperimentConfig config_from_json(const json& j) {
  static const std::vector<std::string> known{
      "items",      "pools",  "expected_defectives",
      "noise_sparsity", "noise_bound", "sizes",
      "hidden",     "complexity_level", "seeds",
      "train",      "jacobian_samples", "sweep_axis",
      "sweep_values"};
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end())
      throw ConfigError("config: unknown key '" + item.key() + "'");
  }
  ExperimentConfig c;
  try {
    read_key(j, "items", c.items);
    read_key(j, "pools", c.pools);
    read_key(j, "expected_defectives", c.expected_defectives);
    read_key(j, "noise_sparsity", c.noise_sparsity);
    read_key(j, "noise_bound", c.noise_bound);
    if (j.contains("sizes")) {
      const json& s = j.at("sizes");
      read_key(s, "train", c.sizes.train);
      read_key(s, "val", c.sizes.val);
      read_key(s, "test", c.sizes.test);
    }
    read_key(j, "hidden", c.hidden);
    if (j.contains("complexity_level"))
      c.complexity_level = j.at("complexity_level").get<int>();
    read_key(j, "seeds", c.seeds);
    if (j.contains("train")) {
      const json& t = j.at("train");
      read_key(t, "batch_size", c.train.batch_size);
      read_key(t, "learning_rate", c.train.learning_rate);
      read_key(t, "max_epochs", c.train.max_epochs);
      read_key(t, "patience", c.train.patience);
      read_key(t, "seed", c.train.seed);
      read_key(t, "loss", c.train.loss);
    }
    read_key(j, "jacobian_samples", c.jacobian_samples);
    read_key(j, "sweep_axis", c.sweep_axis);
    read_key(j, "sweep_values", c.sweep_values);
  } catch (const json::exception& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  return c;
}

void validate(const ExperimentConfig& c) {
  if (c.items < 1 || c.pools < 1)
    throw InvalidArgument("config: items and pools must be >= 1");
  if (c.expected_defectives < 0 || c.expected_defectives > c.items)
    throw InvalidArgument("config: expected_defectives must lie in [0, items]");
  if (c.noise_sparsity < 0 || c.noise_sparsity > c.items)
    throw InvalidArgument("config: noise_sparsity must lie in [0, items]");
  if (c.noise_bound < 0) throw InvalidArgument("config: noise_bound must be >= 0");
  if (c.sizes.train < 1 || c.sizes.val < 1 || c.sizes.test < 1)
    throw InvalidArgument("config: all split sizes must be >= 1");
  if (c.seeds.empty()) throw InvalidArgument("config: seeds must be non-empty");
  if (c.jacobian_samples < 1 || c.jacobian_samples > c.sizes.test)
    throw InvalidArgument("config: jacobian_samples must lie in [1, test size]");
  if (c.complexity_level && (*c.complexity_level < 1 || *c.complexity_level > kMaxLevel))
    throw InvalidArgument("config: complexity_level must lie in [1, 7]");
}

// Runs tasks [0, count) on `jobs` worker threads. Each task must touch only
// its own slot, so results are position-deterministic.
void parallel_tasks(int count, int jobs, const std::function<void(int)>& task) {
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const int n_workers = std::min(jobs, count);
  for (int w = 0; w < n_workers; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

SeedRunResult run_one_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                           const std::filesystem::path& run_dir, bool verbose) {
  const auto start = std::chrono::steady_clock::now();

  GenConfig gen{cfg.items, cfg.pools, cfg.expected_defectives, cfg.noise_sparsity,
                cfg.noise_bound, seed};
  const DatasetSplits data = make_dataset(gen, cfg.sizes);

  MlpModel model = build_model(cfg.pools, cfg.items, resolved_hidden(cfg), seed);
  model.complexity_level = cfg.complexity_level;
  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = seed;
  auto [trained, history] = train(std::move(model), data.train, data.val, train_cfg);
  const Threshold tau = calibrate_threshold(trained, data.val);

  const Matrix preds = eval_outputs(trained, to_input_matrix(data.test));
  std::vector<SampleMetrics> per_sample;
  per_sample.reserve(data.test.count);
  std::vector<std::uint8_t> bits(cfg.items);
  for (int i = 0; i < data.test.count; ++i) {
    for (int j = 0; j < cfg.items; ++j)
      bits[j] = preds(i, j) >= tau.value ? 1 : 0;
    per_sample.push_back(sample_metrics(data.test.signal(i), bits));
  }
  const MetricsReport report = aggregate(std::move(per_sample));

  SeedRunResult result;
  result.seed = seed;
  result.test_mean = report.mean;
  result.tau = tau.value;
  result.best_epoch = history.best_epoch;
  result.epochs_run = history.epochs_run();

  RelaxedSolution solution;
  RecoveredPooling recovered;
  {
    const JacobianBatch batch =
        collect_jacobians(trained, data.test, cfg.jacobian_samples);
    solution = solve_relaxed(batch);
    recovered = binarize_kmeans(solution.estimate);
    result.struct_err_pct = structural_error(recovered, data.test.pooling);
    result.ridge_applied = solution.ridge_applied;
    result.condition_estimate = solution.condition_estimate;
  }
  // Diagnostic variant: jacobians at the noiseless counterparts of the same
  // test signals.
  try {
    std::vector<Measurement> clean(cfg.jacobian_samples);
    NoiseVector silent;
    silent.values.assign(cfg.pools, 0);
    for (int i = 0; i < cfg.jacobian_samples; ++i) {
      BinarySignal sig;
      const auto row = data.test.signal(i);
      sig.values.assign(row.begin(), row.end());
      sig.expected_sparsity = cfg.expected_defectives;
      clean[i] = measure(data.test.pooling, sig, silent);
    }
    const JacobianBatch batch = collect_jacobians(trained, clean, cfg.jacobian_samples);
    const RelaxedSolution clean_solution = solve_relaxed(batch);
    const RecoveredPooling clean_recovered = binarize_kmeans(clean_solution.estimate);
    result.struct_err_clean_pct =
        structural_error(clean_recovered, data.test.pooling);
  } catch (const Error&) {
    result.struct_err_clean_pct = std::numeric_limits<double>::quiet_NaN();
  }

  if (!run_dir.empty()) {
    std::filesystem::create_directories(run_dir);
    save_history_csv(history, run_dir / "history.csv");
    Checkpoint ckpt{trained, gen, tau.value, train_cfg};
    save_checkpoint(ckpt, run_dir / "checkpoint.json");
    write_matrix_csv(solution.estimate.values, run_dir / "a_relaxed.csv");
    Matrix rec_matrix(cfg.pools, cfg.items);
    for (int i = 0; i < cfg.pools; ++i)
      for (int j = 0; j < cfg.items; ++j)
        rec_matrix(i, j) = recovered.values.at(i, j);
    write_matrix_csv(rec_matrix, run_dir / "a_recovered.csv");
    json summary{{"jacobian_samples", cfg.jacobian_samples},
                 {"source", "test split (noisy measurements)"},
                 {"ridge_applied", solution.ridge_applied},
                 {"condition_estimate", solution.condition_estimate},
                 {"mismatch_pct", result.struct_err_pct},
                 {"mismatch_clean_pct", result.struct_err_clean_pct},
                 {"centroid_low", recovered.centroid_low},
                 {"centroid_high", recovered.centroid_high}};
    std::ofstream out(run_dir / "verify_summary.json");
    if (!out) throw IoError("run: cannot write verify summary in " + run_dir.string());
    out << summary.dump(2) << "\n";
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (verbose) {
    std::ostringstream line;
    line << "[qgt] " << point_label(cfg) << " seed=" << seed << " f1="
         << format_double(result.test_mean.f1)
         << " sr=" << format_double(result.test_mean.success)
         << " err%=" << format_double(result.struct_err_pct)
         << " epochs=" << result.epochs_run << " ("
         << format_double(result.wall_seconds) << "s)\n";
    std::cerr << line.str();
  }
  return result;
}

ResultRow aggregate_row(const ExperimentConfig& cfg, std::vector<SeedRunResult> runs) {
  ResultRow row;
  row.config = cfg;
  row.sweep_axis = cfg.sweep_axis;
  row.per_seed = std::move(runs);
  const double inv = 1.0 / double(row.per_seed.size());
  for (const SeedRunResult& r : row.per_seed) {
    row.mean_metrics.precision += r.test_mean.precision * inv;
    row.mean_metrics.recall += r.test_mean.recall * inv;
    row.mean_metrics.f1 += r.test_mean.f1 * inv;
    row.mean_metrics.success += r.test_mean.success * inv;
    row.mean_metrics.mse += r.test_mean.mse * inv;
    row.mean_struct_err_pct += r.struct_err_pct * inv;
    row.mean_struct_err_clean_pct += r.struct_err_clean_pct * inv;
    row.mean_tau += r.tau * inv;
    row.wall_seconds += r.wall_seconds;
  }
  return row;
}

std::vector<ResultRow> run_points(const std::vector<ExperimentConfig>& points,
                                  const RunOptions& opts) {
  struct Task {
    int point;
    int seed_slot;
  };
  std::vector<Task> tasks;
  for (int p = 0; p < static_cast<int>(points.size()); ++p)
    for (int s = 0; s < static_cast<int>(points[p].seeds.size()); ++s)
      tasks.push_back({p, s});

  std::vector<std::vector<SeedRunResult>> results(points.size());
  for (std::size_t p = 0; p < points.size(); ++p)
    results[p].resize(points[p].seeds.size());

  parallel_tasks(static_cast<int>(tasks.size()), opts.jobs, [&](int t) {
    const auto [p, s] = tasks[t];
    const ExperimentConfig& cfg = points[p];
    const std::uint64_t seed = cfg.seeds[s];
    std::filesystem::path run_dir;
    if (!opts.output_root.empty())
      run_dir = opts.output_root / "runs" /
                (point_label(cfg) + "_seed" + std::to_string(seed));
    results[p][s] = run_one_seed(cfg, seed, run_dir, opts.verbose);
  });

  std::vector<ResultRow> rows;
  rows.reserve(points.size());
  for (std::size_t p = 0; p < points.size(); ++p)
    rows.push_back(aggregate_row(points[p], std::move(results[p])));
  return rows;
}

}  // namespace

std::vector<int> hidden_for_level(int level) {
  switch (level) {
    case 1: return {};
    case 2: return {128};
    case 3: return {256};
    case 4: return {256, 256};
    case 5: return {500, 500};
    case 6: return {256, 512, 256};
    case 7: return {128, 256, 512, 256, 128};
    default:
      throw InvalidArgument("hidden_for_level: level must lie in [1, 7]");
  }
}

std::vector<int> resolved_hidden(const ExperimentConfig& cfg) {
  return cfg.complexity_level ? hidden_for_level(*cfg.complexity_level) : cfg.hidden;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  return config_from_json(j);
}

std::string experiment_config_json(const ExperimentConfig& cfg) {
  return config_to_json(cfg).dump(2);
}

ExperimentConfig experiment_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  return config_from_json(j);
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  const std::string canon = config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig apply_smoke_profile(ExperimentConfig cfg) {
  cfg.sizes.train = std::max(1, cfg.sizes.train / 4);
  cfg.sizes.val = std::max(1, cfg.sizes.val / 4);
  cfg.sizes.test = std::max(1, cfg.sizes.test / 4);
  cfg.jacobian_samples = std::min(cfg.jacobian_samples, cfg.sizes.test);
  return cfg;
}

std::string point_label(const ExperimentConfig& cfg) {
  std::string arch;
  if (cfg.complexity_level) {
    arch = "level" + std::to_string(*cfg.complexity_level);
  } else if (cfg.hidden.empty()) {
    arch = "linear";
  } else {
    arch = "h";
    for (std::size_t i = 0; i < cfg.hidden.size(); ++i)
      arch += (i ? "x" : "") + std::to_string(cfg.hidden[i]);
  }
  return arch + "_m" + std::to_string(cfg.pools) + "_s" +
         format_double(cfg.noise_sparsity);
}

ResultRow run_single(const ExperimentConfig& cfg, const RunOptions& opts) {
  validate(cfg);
  return run_points({cfg}, opts).front();
}

std::vector<ResultRow> run_sweep_measurements(const ExperimentConfig& cfg,
                                              const RunOptions& opts) {
  std::vector<double> values = cfg.sweep_values;
  if (values.empty()) values = {20, 25, 30, 35, 40};
  std::sort(values.begin(), values.end());
  std::vector<ExperimentConfig> points;
  for (const double v : values) {
    ExperimentConfig point = cfg;
    point.pools = static_cast<int>(std::lround(v));
    if (point.pools < 1 || std::abs(v - point.pools) > 1e-9)
      throw InvalidArgument("sweep: pool counts must be positive integers");
    point.sweep_axis = "pools";
    point.sweep_values = {v};
    validate(point);
    points.push_back(std::move(point));
  }
  auto rows = run_points(points, opts);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].sweep_value = values[i];
  return rows;
}

std::vector<ResultRow> run_sweep_noise(const ExperimentConfig& cfg,
                                       const RunOptions& opts) {
  std::vector<double> ratios = cfg.sweep_values;
  if (ratios.empty()) ratios = {0.04, 0.08, 0.12, 0.16, 0.20};
  std::sort(ratios.begin(), ratios.end());
  std::vector<ExperimentConfig> points;
  for (const double ratio : ratios) {
    if (ratio < 0.0 || ratio > 1.0)
      throw InvalidArgument("sweep: noise ratios must lie in [0, 1]");
    ExperimentConfig point = cfg;
    point.noise_sparsity = ratio * cfg.items;
    point.sweep_axis = "noise_ratio";
    point.sweep_values = {ratio};
    validate(point);
    points.push_back(std::move(point));
  }
  auto rows = run_points(points, opts);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].sweep_value = ratios[i];
  return rows;
}

std::vector<ResultRow> run_complexity_study(const ExperimentConfig& cfg,
                                            const RunOptions& opts) {
  std::vector<ExperimentConfig> points;
  for (int level = 1; level <= kMaxLevel; ++level) {
    ExperimentConfig point = cfg;
    point.complexity_level = level;
    point.sweep_axis = "level";
    point.sweep_values = {double(level)};
    validate(point);
    points.push_back(std::move(point));
  }
  auto rows = run_points(points, opts);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].sweep_value = double(i + 1);
  return rows;
}

}  // namespace qgt
