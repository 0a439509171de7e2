#include "qgt/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "qgt/errors.hpp"
#include "qgt/format.hpp"

namespace qgt {

namespace {

std::string hidden_label(const std::vector<int>& hidden) {
  if (hidden.empty()) return "linear";
  std::string s;
  for (std::size_t i = 0; i < hidden.size(); ++i)
    s += (i ? "x" : "") + std::to_string(hidden[i]);
  return s;
}

std::string seeds_label(const std::vector<std::uint64_t>& seeds) {
  std::string s;
  for (std::size_t i = 0; i < seeds.size(); ++i)
    s += (i ? ";" : "") + std::to_string(seeds[i]);
  return s;
}

std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[h & 0xf];
    h >>= 4;
  }
  return s;
}

double metric_value(const ResultRow& row, const std::string& metric) {
  if (metric == "precision") return row.mean_metrics.precision;
  if (metric == "recall") return row.mean_metrics.recall;
  if (metric == "f1") return row.mean_metrics.f1;
  if (metric == "success_rate") return row.mean_metrics.success;
  if (metric == "mse") return row.mean_metrics.mse;
  if (metric == "struct_err_pct") return row.mean_struct_err_pct;
  throw InvalidArgument("unknown metric '" + metric + "'");
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

AxisRange plot_axis(double data_min, double data_max) {
  if (!(data_min <= data_max))
    throw InvalidArgument("plot_axis: min must not exceed max");
  double span = data_max - data_min;
  if (span == 0.0) span = data_max == 0.0 ? 1.0 : std::abs(data_max);
  return AxisRange{data_min - 0.05 * span, data_max + 0.05 * span};
}

void write_results_csv(const std::vector<ResultRow>& rows,
                       const std::filesystem::path& path) {
  if (rows.empty()) throw InvalidArgument("write_results_csv: no rows");
  auto out = open_out(path);
  out << "config_hash,method,sweep_axis,sweep_value,items,pools,"
         "expected_defectives,noise_sparsity,noise_bound,level,hidden,"
         "n_train,n_val,n_test,jacobian_samples,seeds,"
         "precision,recall,f1,success_rate,mse,"
         "struct_err_pct,struct_err_clean_pct,tau_mean\n";
  for (const ResultRow& r : rows) {
    const ExperimentConfig& c = r.config;
    out << hash_hex(config_hash(c)) << ",mlp," << r.sweep_axis << ","
        << format_double(r.sweep_value) << "," << c.items << "," << c.pools << ","
        << format_double(c.expected_defectives) << ","
        << format_double(c.noise_sparsity) << "," << c.noise_bound << ","
        << (c.complexity_level ? std::to_string(*c.complexity_level) : "") << ","
        << hidden_label(resolved_hidden(c)) << "," << c.sizes.train << ","
        << c.sizes.val << "," << c.sizes.test << "," << c.jacobian_samples << ","
        << seeds_label(c.seeds) << "," << format_double(r.mean_metrics.precision)
        << "," << format_double(r.mean_metrics.recall) << ","
        << format_double(r.mean_metrics.f1) << ","
        << format_double(r.mean_metrics.success) << ","
        << format_double(r.mean_metrics.mse) << ","
        << format_double(r.mean_struct_err_pct) << ","
        << format_double(r.mean_struct_err_clean_pct) << ","
        << format_double(r.mean_tau) << "\n";
  }
  if (!out) throw IoError("write failed on " + path.string());
}

void write_per_seed_csv(const std::vector<ResultRow>& rows,
                        const std::filesystem::path& path) {
  if (rows.empty()) throw InvalidArgument("write_per_seed_csv: no rows");
  auto out = open_out(path);
  out << "config_hash,sweep_axis,sweep_value,seed,precision,recall,f1,"
         "success_rate,mse,struct_err_pct,struct_err_clean_pct,tau,"
         "best_epoch,epochs_run,ridge_applied,condition_estimate\n";
  for (const ResultRow& r : rows) {
    const std::string hash = hash_hex(config_hash(r.config));
    for (const SeedRunResult& s : r.per_seed) {
      out << hash << "," << r.sweep_axis << "," << format_double(r.sweep_value)
          << "," << s.seed << "," << format_double(s.test_mean.precision) << ","
          << format_double(s.test_mean.recall) << ","
          << format_double(s.test_mean.f1) << ","
          << format_double(s.test_mean.success) << ","
          << format_double(s.test_mean.mse) << ","
          << format_double(s.struct_err_pct) << ","
          << format_double(s.struct_err_clean_pct) << "," << format_double(s.tau)
          << "," << s.best_epoch << "," << s.epochs_run << ","
          << (s.ridge_applied ? 1 : 0) << ","
          << format_double(s.condition_estimate) << "\n";
    }
  }
  if (!out) throw IoError("write failed on " + path.string());
}

void write_manifest(const std::vector<ResultRow>& rows,
                    const std::filesystem::path& path) {
  nlohmann::json manifest;
  manifest["format"] = "qgt-manifest";
  manifest["version"] = 1;
  nlohmann::json entries = nlohmann::json::array();
  for (const ResultRow& r : rows) {
    nlohmann::json e;
    e["config_hash"] = hash_hex(config_hash(r.config));
    e["sweep_axis"] = r.sweep_axis;
    e["sweep_value"] = r.sweep_value;
    e["config"] = nlohmann::json::parse(experiment_config_json(r.config));
    entries.push_back(std::move(e));
  }
  manifest["rows"] = std::move(entries);
  auto out = open_out(path);
  out << manifest.dump(2) << "\n";
  if (!out) throw IoError("write failed on " + path.string());
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out << format_double(m(i, j)) << (j + 1 < m.cols() ? "," : "");
    out << "\n";
  }
  if (!out) throw IoError("write failed on " + path.string());
}

void write_metric_plot(const std::vector<ResultRow>& rows, const std::string& metric,
                       const std::filesystem::path& path) {
  if (rows.size() < 2)
    throw InvalidArgument("write_metric_plot: need at least two points");
  std::vector<double> xs, ys;
  for (const ResultRow& r : rows) {
    xs.push_back(r.sweep_value);
    ys.push_back(metric_value(r, metric));
  }
  const auto [x_min_it, x_max_it] = std::minmax_element(xs.begin(), xs.end());
  const auto [y_min_it, y_max_it] = std::minmax_element(ys.begin(), ys.end());
  const AxisRange xr = plot_axis(*x_min_it, *x_max_it);
  const AxisRange yr = plot_axis(*y_min_it, *y_max_it);

  constexpr double width = 640, height = 420;
  constexpr double left = 70, right = 20, top = 30, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  const auto x_px = [&](double v) {
    return left + (v - xr.lo) / (xr.hi - xr.lo) * plot_w;
  };
  const auto y_px = [&](double v) {
    return top + (yr.hi - v) / (yr.hi - yr.lo) * plot_h;
  };

  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height
      << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << metric << " vs "
      << (rows.front().sweep_axis.empty() ? "point" : rows.front().sweep_axis)
      << "</text>\n";
  // axes
  out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\""
      << left + plot_w << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  // ticks
  for (int t = 0; t <= 4; ++t) {
    const double fx = xr.lo + (xr.hi - xr.lo) * t / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * t / 4.0;
    out << "<line x1=\"" << x_px(fx) << "\" y1=\"" << top + plot_h << "\" x2=\""
        << x_px(fx) << "\" y2=\"" << top + plot_h + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << x_px(fx) << "\" y=\"" << top + plot_h + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_double(fx) << "</text>\n";
    out << "<line x1=\"" << left - 5 << "\" y1=\"" << y_px(fy) << "\" x2=\"" << left
        << "\" y2=\"" << y_px(fy) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << left - 8 << "\" y=\"" << y_px(fy) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_double(fy) << "</text>\n";
  }
  // series
  out << "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i)
    out << x_px(xs[i]) << "," << y_px(ys[i]) << (i + 1 < xs.size() ? " " : "");
  out << "\"/>\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    out << "<circle cx=\"" << x_px(xs[i]) << "\" cy=\"" << y_px(ys[i])
        << "\" r=\"3\" fill=\"#1f6fb2\"/>\n";
  // axis range annotation, machine-checkable
  out << "<!-- x_range " << format_double(xr.lo) << " " << format_double(xr.hi)
      << " -->\n";
  out << "<!-- y_range " << format_double(yr.lo) << " " << format_double(yr.hi)
      << " -->\n";
  out << "</svg>\n";
  if (!out) throw IoError("write failed on " + path.string());
}

void emit_outputs(const std::vector<ResultRow>& rows,
                  const std::filesystem::path& out_dir) {
  if (rows.empty()) throw InvalidArgument("emit_outputs: no rows");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec && !std::filesystem::is_directory(out_dir))
    throw IoError("emit_outputs: cannot create " + out_dir.string());
  write_results_csv(rows, out_dir / "results.csv");
  write_per_seed_csv(rows, out_dir / "per_seed.csv");
  write_manifest(rows, out_dir / "manifest.json");
  if (rows.size() >= 2 && !rows.front().sweep_axis.empty()) {
    const auto plot_dir = out_dir / "plots";
    std::filesystem::create_directories(plot_dir);
    for (const char* metric : {"precision", "recall", "f1", "success_rate", "mse",
                               "struct_err_pct"})
      write_metric_plot(rows, metric, plot_dir / (std::string(metric) + ".svg"));
  }
}

}  // namespace qgt
