#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qgt/experiment.hpp"
#include "qgt/matrix.hpp"

namespace qgt {

// Plot axis covering [data_min, data_max] with a little padding.
struct AxisRange {
  double lo = 0.0;
  double hi = 1.0;
};
AxisRange plot_axis(double data_min, double data_max);

// Aggregated table, one row per experiment point. Deterministic: identical
// rows serialize to byte-identical files.
void write_results_csv(const std::vector<ResultRow>& rows,
                       const std::filesystem::path& path);
// Per-(point, seed) detail table.
void write_per_seed_csv(const std::vector<ResultRow>& rows,
                        const std::filesystem::path& path);
// Configs and seeds of every row, for replaying an experiment.
void write_manifest(const std::vector<ResultRow>& rows,
                    const std::filesystem::path& path);

// Static line plot of one measure against the sweep axis.
// Valid keys: precision, recall, f1, success_rate, mse, struct_err_pct.
void write_metric_plot(const std::vector<ResultRow>& rows, const std::string& metric,
                       const std::filesystem::path& path);

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);

// results.csv + per_seed.csv + manifest.json + plots/<metric>.svg.
void emit_outputs(const std::vector<ResultRow>& rows,
                  const std::filesystem::path& out_dir);

}  // namespace qgt
