#include "qgt/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "qgt/errors.hpp"

namespace qgt {

namespace {

using nlohmann::json;

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json matrix_to_json(const Matrix& m) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < m.size(); ++i) arr.push_back(m.data()[i]);
  return arr;
}

Vector json_to_vector(const json& arr, Eigen::Index expected, const char* what) {
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != expected)
    throw IoError(std::string("checkpoint: bad array length for ") + what);
  Vector v(expected);
  for (Eigen::Index i = 0; i < expected; ++i) v[i] = arr[i].get<double>();
  return v;
}

Matrix json_to_matrix(const json& arr, Eigen::Index rows, Eigen::Index cols,
                      const char* what) {
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != rows * cols)
    throw IoError(std::string("checkpoint: bad array length for ") + what);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows * cols; ++i) m.data()[i] = arr[i].get<double>();
  return m;
}

json layer_to_json(const Layer& layer) {
  json j;
  j["in"] = layer.in_dim;
  j["out"] = layer.out_dim;
  switch (layer.kind()) {
    case LayerKind::kDense: {
      j["kind"] = "dense";
      j["weight"] = matrix_to_json(layer.dense().weight);
      j["bias"] = vector_to_json(layer.dense().bias);
      break;
    }
    case LayerKind::kLeakyRelu: {
      j["kind"] = "leaky_relu";
      j["negative_slope"] = layer.leaky().negative_slope;
      break;
    }
    case LayerKind::kBatchNorm: {
      const BatchNormLayer& b = layer.batchnorm();
      j["kind"] = "batchnorm";
      j["gain"] = vector_to_json(b.gain);
      j["shift"] = vector_to_json(b.shift);
      j["running_mean"] = vector_to_json(b.running_mean);
      j["running_var"] = vector_to_json(b.running_var);
      j["momentum"] = b.momentum;
      j["epsilon"] = b.epsilon;
      break;
    }
    case LayerKind::kDropout: {
      j["kind"] = "dropout";
      j["keep_prob"] = layer.dropout().keep_prob;
      break;
    }
  }
  return j;
}

Layer layer_from_json(const json& j) {
  Layer layer;
  layer.in_dim = j.at("in").get<int>();
  layer.out_dim = j.at("out").get<int>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "dense") {
    DenseLayer d;
    d.weight = json_to_matrix(j.at("weight"), layer.out_dim, layer.in_dim, "weight");
    d.bias = json_to_vector(j.at("bias"), layer.out_dim, "bias");
    layer.params = std::move(d);
  } else if (kind == "leaky_relu") {
    layer.params = LeakyReluLayer{j.at("negative_slope").get<double>()};
  } else if (kind == "batchnorm") {
    BatchNormLayer b;
    b.gain = json_to_vector(j.at("gain"), layer.out_dim, "gain");
    b.shift = json_to_vector(j.at("shift"), layer.out_dim, "shift");
    b.running_mean = json_to_vector(j.at("running_mean"), layer.out_dim, "running_mean");
    b.running_var = json_to_vector(j.at("running_var"), layer.out_dim, "running_var");
    b.momentum = j.at("momentum").get<double>();
    b.epsilon = j.at("epsilon").get<double>();
    layer.params = std::move(b);
  } else if (kind == "dropout") {
    layer.params = DropoutLayer{j.at("keep_prob").get<double>()};
  } else {
    throw IoError("checkpoint: unknown layer kind '" + kind + "'");
  }
  return layer;
}

json gen_config_to_json(const GenConfig& c) {
  return json{{"items", c.items},
              {"pools", c.pools},
              {"expected_defectives", c.expected_defectives},
              {"noise_sparsity", c.noise_sparsity},
              {"noise_bound", c.noise_bound},
              {"seed", c.seed}};
}

GenConfig gen_config_from_json(const json& j) {
  GenConfig c;
  c.items = j.at("items").get<int>();
  c.pools = j.at("pools").get<int>();
  c.expected_defectives = j.at("expected_defectives").get<double>();
  c.noise_sparsity = j.at("noise_sparsity").get<double>();
  c.noise_bound = j.at("noise_bound").get<std::int32_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json train_config_to_json(const TrainConfig& c) {
  return json{{"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"seed", c.seed},
              {"loss", c.loss}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.batch_size = j.at("batch_size").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.patience = j.at("patience").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.loss = j.at("loss").get<std::string>();
  return c;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  json j;
  j["format"] = "qgt-checkpoint";
  j["version"] = 1;
  j["input_dim"] = ckpt.model.input_dim;
  j["output_dim"] = ckpt.model.output_dim;
  j["hidden"] = ckpt.model.hidden;
  if (ckpt.model.complexity_level) j["complexity_level"] = *ckpt.model.complexity_level;
  json layers = json::array();
  for (const Layer& layer : ckpt.model.layers) layers.push_back(layer_to_json(layer));
  j["layers"] = std::move(layers);
  j["gen_config"] = gen_config_to_json(ckpt.gen_config);
  if (ckpt.threshold) j["threshold"] = *ckpt.threshold;
  if (ckpt.train_config) j["train_config"] = train_config_to_json(*ckpt.train_config);

  std::ofstream out(path);
  if (!out) throw IoError("save_checkpoint: cannot open " + path.string());
  out << j.dump() << "\n";
  if (!out) throw IoError("save_checkpoint: write failed on " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_checkpoint: cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("load_checkpoint: " + std::string(e.what()));
  }
  if (j.value("format", "") != "qgt-checkpoint")
    throw IoError("load_checkpoint: not a checkpoint file");

  Checkpoint ckpt;
  ckpt.model.input_dim = j.at("input_dim").get<int>();
  ckpt.model.output_dim = j.at("output_dim").get<int>();
  ckpt.model.hidden = j.at("hidden").get<std::vector<int>>();
  if (j.contains("complexity_level"))
    ckpt.model.complexity_level = j.at("complexity_level").get<int>();
  for (const json& lj : j.at("layers"))
    ckpt.model.layers.push_back(layer_from_json(lj));
  ckpt.model.mode = Mode::kEval;
  ckpt.gen_config = gen_config_from_json(j.at("gen_config"));
  if (j.contains("threshold")) ckpt.threshold = j.at("threshold").get<double>();
  if (j.contains("train_config"))
    ckpt.train_config = train_config_from_json(j.at("train_config"));
  return ckpt;
}

}  // namespace qgt
