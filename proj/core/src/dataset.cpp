#include "qgt/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "qgt/errors.hpp"
#include "qgt/format.hpp"

static_assert(std::endian::native == std::endian::little,
              "dataset records are little-endian; big-endian hosts need byte swaps");

namespace qgt {

const char* split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

namespace {

Dataset generate_split(const GenConfig& cfg, const PoolingMatrix& pooling,
                       Split split, int count) {
  Dataset ds;
  ds.pooling = pooling;
  ds.split = split;
  ds.gen_config = cfg;
  ds.count = count;
  ds.signals.resize(static_cast<std::size_t>(count) * cfg.items);
  ds.measurements.resize(static_cast<std::size_t>(count) * cfg.pools);
  const auto split_id = static_cast<std::uint64_t>(split);
  for (int i = 0; i < count; ++i) {
    Rng sig_rng = stream_rng(cfg.seed, StreamKind::kSignal, split_id, i);
    Rng noise_rng = stream_rng(cfg.seed, StreamKind::kNoise, split_id, i);
    const BinarySignal x = gen_signal(cfg.items, cfg.expected_defectives, sig_rng);
    const NoiseVector eta =
        gen_noise(cfg.pools, cfg.noise_sparsity, cfg.items, cfg.noise_bound, noise_rng);
    const Measurement y = measure(pooling, x, eta);
    std::copy(x.values.begin(), x.values.end(),
              ds.signals.begin() + static_cast<std::size_t>(i) * cfg.items);
    std::copy(y.values.begin(), y.values.end(),
              ds.measurements.begin() + static_cast<std::size_t>(i) * cfg.pools);
  }
  return ds;
}

}  // namespace

DatasetSplits make_dataset(const GenConfig& config, const SplitSizes& sizes) {
  if (sizes.train < 0 || sizes.val < 0 || sizes.test < 0)
    throw InvalidArgument("make_dataset: split sizes must be non-negative");
  Rng pool_rng = stream_rng(config.seed, StreamKind::kPooling);
  const PoolingMatrix pooling =
      gen_pooling_matrix(config.pools, config.items, pool_rng);
  DatasetSplits out;
  out.train = generate_split(config, pooling, Split::kTrain, sizes.train);
  out.val = generate_split(config, pooling, Split::kVal, sizes.val);
  out.test = generate_split(config, pooling, Split::kTest, sizes.test);
  return out;
}

Matrix to_input_matrix(const Dataset& ds) {
  Matrix m(ds.count, ds.gen_config.pools);
  for (int i = 0; i < ds.count; ++i) {
    const auto row = ds.measurement(i);
    for (int j = 0; j < ds.gen_config.pools; ++j)
      m(i, j) = static_cast<double>(row[j]);
  }
  return m;
}

Matrix to_target_matrix(const Dataset& ds) {
  Matrix m(ds.count, ds.gen_config.items);
  for (int i = 0; i < ds.count; ++i) {
    const auto row = ds.signal(i);
    for (int j = 0; j < ds.gen_config.items; ++j)
      m(i, j) = static_cast<double>(row[j]);
  }
  return m;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_dataset: cannot open " + path.string());
  const GenConfig& c = ds.gen_config;
  out << "QGTDATA v1 N=" << c.items << " M=" << c.pools
      << " K=" << format_double(c.expected_defectives)
      << " S=" << format_double(c.noise_sparsity) << " D=" << c.noise_bound
      << " seed=" << c.seed << " count=" << ds.count << "\n";
  for (int i = 0; i < ds.count; ++i) {
    const auto x = ds.signal(i);
    out.write(reinterpret_cast<const char*>(x.data()),
              static_cast<std::streamsize>(x.size()));
    const auto y = ds.measurement(i);
    out.write(reinterpret_cast<const char*>(y.data()),
              static_cast<std::streamsize>(y.size() * sizeof(std::int32_t)));
  }
  if (!out) throw IoError("save_dataset: write failed on " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_dataset: cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic, version;
  hs >> magic >> version;
  if (magic != "QGTDATA" || version != "v1")
    throw IoError("load_dataset: bad header in " + path.string());
  GenConfig cfg;
  int count = -1;
  std::string field;
  while (hs >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos)
      throw IoError("load_dataset: malformed header field '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string val = field.substr(eq + 1);
    if (key == "N") cfg.items = std::stoi(val);
    else if (key == "M") cfg.pools = std::stoi(val);
    else if (key == "K") cfg.expected_defectives = std::stod(val);
    else if (key == "S") cfg.noise_sparsity = std::stod(val);
    else if (key == "D") cfg.noise_bound = std::stoi(val);
    else if (key == "seed") cfg.seed = std::stoull(val);
    else if (key == "count") count = std::stoi(val);
    else throw IoError("load_dataset: unknown header field '" + key + "'");
  }
  if (cfg.items < 1 || cfg.pools < 1 || count < 0)
    throw IoError("load_dataset: incomplete header in " + path.string());

  Dataset ds;
  ds.split = split;
  ds.gen_config = cfg;
  ds.count = count;
  // The file stores only records; the shared pooling design is a pure
  // function of the header config.
  Rng pool_rng = stream_rng(cfg.seed, StreamKind::kPooling);
  ds.pooling = gen_pooling_matrix(cfg.pools, cfg.items, pool_rng);
  ds.signals.resize(static_cast<std::size_t>(count) * cfg.items);
  ds.measurements.resize(static_cast<std::size_t>(count) * cfg.pools);
  for (int i = 0; i < count; ++i) {
    in.read(reinterpret_cast<char*>(ds.signals.data() +
                                    static_cast<std::size_t>(i) * cfg.items),
            cfg.items);
    in.read(reinterpret_cast<char*>(ds.measurements.data() +
                                    static_cast<std::size_t>(i) * cfg.pools),
            static_cast<std::streamsize>(cfg.pools * sizeof(std::int32_t)));
    if (!in) throw IoError("load_dataset: truncated records in " + path.string());
  }
  for (const auto v : ds.signals)
    if (v > 1) throw IoError("load_dataset: non-binary signal byte");
  return ds;
}

void export_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("export_dataset_csv: cannot open " + path.string());
  for (int j = 0; j < ds.gen_config.pools; ++j) out << "y_" << j << ",";
  for (int j = 0; j < ds.gen_config.items; ++j)
    out << "x_" << j << (j + 1 < ds.gen_config.items ? "," : "");
  out << "\n";
  for (int i = 0; i < ds.count; ++i) {
    const auto y = ds.measurement(i);
    for (int j = 0; j < ds.gen_config.pools; ++j) out << y[j] << ",";
    const auto x = ds.signal(i);
    for (int j = 0; j < ds.gen_config.items; ++j)
      out << int(x[j]) << (j + 1 < ds.gen_config.items ? "," : "");
    out << "\n";
  }
  if (!out) throw IoError("export_dataset_csv: write failed on " + path.string());
}

}  // namespace qgt
