#include "qgt/metrics.hpp"

#include "qgt/errors.hpp"

namespace qgt {

SampleMetrics sample_metrics(std::span<const std::uint8_t> truth,
                             std::span<const std::uint8_t> pred) {
  if (truth.size() != pred.size())
    throw InvalidArgument("sample_metrics: length mismatch");
  if (truth.empty()) throw InvalidArgument("sample_metrics: empty vectors");
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    if (truth[j] > 1 || pred[j] > 1)
      throw InvalidArgument("sample_metrics: entries must be 0 or 1");
    tp += truth[j] & pred[j];
    fp += (!truth[j]) & pred[j];
    fn += truth[j] & (!pred[j]);
  }
  SampleMetrics m;
  if (tp + fp > 0) m.precision = double(tp) / double(tp + fp);
  else m.precision = fn > 0 ? 0.0 : 1.0;
  if (tp + fn > 0) m.recall = double(tp) / double(tp + fn);
  else m.recall = fp > 0 ? 0.0 : 1.0;
  if (tp == 0 && fp == 0 && fn == 0) m.f1 = 1.0;
  else if (m.precision + m.recall > 0.0)
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  m.success = (fp == 0 && fn == 0) ? 1.0 : 0.0;
  m.mse = double(fp + fn) / double(truth.size());
  return m;
}

MetricsReport aggregate(std::vector<SampleMetrics> samples) {
  if (samples.empty()) throw InvalidArgument("aggregate: no samples");
  MetricsReport report;
  report.count = static_cast<int>(samples.size());
  for (const auto& s : samples) {
    report.mean.precision += s.precision;
    report.mean.recall += s.recall;
    report.mean.f1 += s.f1;
    report.mean.success += s.success;
    report.mean.mse += s.mse;
  }
  const double inv = 1.0 / double(report.count);
  report.mean.precision *= inv;
  report.mean.recall *= inv;
  report.mean.f1 *= inv;
  report.mean.success *= inv;
  report.mean.mse *= inv;
  report.samples = std::move(samples);
  return report;
}

}  // namespace qgt
