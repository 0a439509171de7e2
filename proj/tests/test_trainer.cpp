#include <algorithm>
#include <doctest.h>
#include <fstream>
#include <numeric>

#include "qgt/errors.hpp"
#include "qgt/trainer.hpp"
#include "support/oracles.hpp"

using namespace qgt;
using qgt::testing::central_difference;
using qgt::testing::relative_error;

namespace {

// Hand-assembled dataset with a chosen pooling matrix; measurements are the
// exact noiseless counts.
Dataset manual_dataset(const PoolingMatrix& pooling, int count, double defectives,
                       std::uint64_t seed, Split split, bool zero_targets = false) {
  Dataset ds;
  ds.pooling = pooling;
  ds.split = split;
  ds.gen_config = GenConfig{pooling.items, pooling.pools, defectives, 0.0, 0, seed};
  ds.count = count;
  ds.signals.resize(std::size_t(count) * pooling.items);
  ds.measurements.resize(std::size_t(count) * pooling.pools);
  NoiseVector silent{std::vector<std::int32_t>(pooling.pools, 0), 0.0, 0};
  for (int i = 0; i < count; ++i) {
    Rng rng = stream_rng(seed, StreamKind::kSignal, std::uint64_t(split), i);
    const BinarySignal x = gen_signal(pooling.items, defectives, rng);
    const Measurement y = measure(pooling, x, silent);
    for (int j = 0; j < pooling.items; ++j) {
      const std::uint8_t bit = zero_targets ? 0 : x.values[j];
      ds.signals[std::size_t(i) * pooling.items + j] = bit;
    }
    std::copy(y.values.begin(), y.values.end(),
              ds.measurements.begin() + std::size_t(i) * pooling.pools);
  }
  return ds;
}

PoolingMatrix identity_pooling(int n) {
  PoolingMatrix p{n, n, std::vector<std::uint8_t>(std::size_t(n) * n, 0)};
  for (int i = 0; i < n; ++i) p.entries[std::size_t(i) * n + i] = 1;
  return p;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("balanced loss hand example") {
  Matrix targets(1, 2), preds(1, 2);
  targets << 1, 0;
  preds << 0.5, 0.5;
  const auto r = balanced_mse(targets, preds);
  CHECK(r.loss == doctest::Approx(0.25));
  CHECK(r.grad(0, 0) == doctest::Approx(-0.5));
  CHECK(r.grad(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("perfect predictions give zero loss and gradient") {
  Matrix targets(3, 4);
  targets << 1, 0, 0, 1, 0, 0, 0, 0, 1, 1, 1, 1;
  const auto r = balanced_mse(targets, targets);
  CHECK(r.loss == 0.0);
  CHECK(r.grad.isZero());
}

TEST_CASE("single-class samples use only the occupied class term") {
  Matrix targets(1, 4), preds(1, 4);
  targets << 0, 0, 0, 0;
  preds << 0.1, 0.2, 0.1, 0.2;
  const auto r = balanced_mse(targets, preds);
  CHECK(r.loss == doctest::Approx(0.5 * (0.01 + 0.04 + 0.01 + 0.04) / 4.0));
}

TEST_CASE("non-binary targets are rejected") {
  Matrix targets(1, 2), preds(1, 2);
  targets << 0.5, 0;
  preds << 0, 0;
  CHECK_THROWS_AS((void)balanced_mse(targets, preds), InvalidArgument);
}

TEST_CASE("loss gradient matches finite differences") {
  Rng rng(5);
  Matrix targets(4, 6), preds(4, 6);
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    targets.data()[i] = rng.bernoulli(0.3) ? 1.0 : 0.0;
    preds.data()[i] = rng.uniform_real(-0.5, 1.5);
  }
  const auto analytic = balanced_mse(targets, preds);
  for (Eigen::Index i = 0; i < preds.size(); ++i) {
    const double fd = central_difference(
        preds.data() + i, 1e-6, [&] { return balanced_mse(targets, preds).loss; });
    CHECK(relative_error(fd, analytic.grad.data()[i], 1e-3) < 1e-6);
  }
}

TEST_CASE("loss is invariant under coordinate permutations") {
  Rng rng(6);
  Matrix targets(3, 8), preds(3, 8);
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    targets.data()[i] = rng.bernoulli(0.4) ? 1.0 : 0.0;
    preds.data()[i] = rng.uniform_real(-1.0, 2.0);
  }
  std::vector<int> perm(8);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = 7; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
  Matrix pt(3, 8), pp(3, 8);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 8; ++c) {
      pt(r, perm[c]) = targets(r, c);
      pp(r, perm[c]) = preds(r, c);
    }
  CHECK(balanced_mse(targets, preds).loss ==
        doctest::Approx(balanced_mse(pt, pp).loss).epsilon(1e-12));
}

TEST_CASE("batch loss decomposes into per-sample losses") {
  Rng rng(7);
  Matrix targets(5, 6), preds(5, 6);
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    targets.data()[i] = rng.bernoulli(0.3) ? 1.0 : 0.0;
    preds.data()[i] = rng.uniform_real(-0.5, 1.5);
  }
  const double whole = balanced_mse(targets, preds).loss;
  double acc = 0.0;
  for (int r = 0; r < 5; ++r)
    acc += balanced_mse(targets.row(r), preds.row(r)).loss;
  CHECK(whole == doctest::Approx(acc).epsilon(1e-12));
}

TEST_CASE("identity pooling is learnable by a linear model") {
  const auto pooling = identity_pooling(12);
  const auto train_set = manual_dataset(pooling, 512, 3.0, 100, Split::kTrain);
  const auto val_set = manual_dataset(pooling, 128, 3.0, 100, Split::kVal);
  auto model = build_model(12, 12, {}, 100);
  TrainConfig cfg;
  cfg.batch_size = 32;
  cfg.max_epochs = 400;
  cfg.patience = 30;
  cfg.learning_rate = 5e-3;
  cfg.seed = 100;
  auto [trained, history] = train(std::move(model), train_set, val_set, cfg);
  CHECK(history.val_loss[history.best_epoch - 1] < 1e-3);
}

TEST_CASE("early stopping: worsening validation stops after patience runs out") {
  const auto pooling = identity_pooling(8);
  const auto train_set = manual_dataset(pooling, 256, 2.0, 200, Split::kTrain);
  // all-zero validation targets against a zero-initialized model: the first
  // epoch already moves predictions off zero, so validation only worsens
  const auto val_set = manual_dataset(pooling, 64, 2.0, 201, Split::kVal, true);
  auto model = build_model(8, 8, {}, 200);
  model.layers[0].dense().weight.setZero();
  TrainConfig cfg;
  cfg.batch_size = 32;
  cfg.max_epochs = 50;
  cfg.patience = 1;
  cfg.seed = 200;
  auto [trained, history] = train(std::move(model), train_set, val_set, cfg);
  CHECK(history.epochs_run() == 2);
  CHECK(history.best_epoch == 1);
  CHECK(history.val_loss[1] > history.val_loss[0]);
  // the returned snapshot is the epoch-1 model
  const double returned = validation_loss(trained, to_target_matrix(val_set),
                                          to_input_matrix(val_set));
  CHECK(returned == doctest::Approx(history.val_loss[0]).epsilon(1e-12));
}

TEST_CASE("returned model beats every epoch that ran") {
  const auto pooling = identity_pooling(10);
  const auto train_set = manual_dataset(pooling, 300, 2.5, 300, Split::kTrain);
  const auto val_set = manual_dataset(pooling, 80, 2.5, 301, Split::kVal);
  auto model = build_model(10, 10, {}, 300);
  TrainConfig cfg;
  cfg.batch_size = 32;
  cfg.max_epochs = 25;
  cfg.patience = 5;
  cfg.seed = 300;
  auto [trained, history] = train(std::move(model), train_set, val_set, cfg);
  const double returned = validation_loss(trained, to_target_matrix(val_set),
                                          to_input_matrix(val_set));
  for (const double v : history.val_loss) CHECK(returned <= v + 1e-12);
  CHECK(returned ==
        doctest::Approx(history.val_loss[history.best_epoch - 1]).epsilon(1e-12));
}

TEST_CASE("training is deterministic") {
  const auto pooling = identity_pooling(6);
  const auto train_set = manual_dataset(pooling, 128, 1.5, 400, Split::kTrain);
  const auto val_set = manual_dataset(pooling, 40, 1.5, 401, Split::kVal);
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.max_epochs = 8;
  cfg.patience = 8;
  cfg.seed = 400;
  auto [m1, h1] = train(build_model(6, 6, {8}, 400), train_set, val_set, cfg);
  auto [m2, h2] = train(build_model(6, 6, {8}, 400), train_set, val_set, cfg);
  CHECK(h1.train_loss == h2.train_loss);
  CHECK(h1.val_loss == h2.val_loss);
  CHECK(h1.best_epoch == h2.best_epoch);
}

TEST_CASE("empty splits and bad configs are rejected") {
  const auto pooling = identity_pooling(4);
  const auto train_set = manual_dataset(pooling, 16, 1.0, 500, Split::kTrain);
  Dataset empty = manual_dataset(pooling, 0, 1.0, 500, Split::kVal);
  TrainConfig cfg;
  CHECK_THROWS_AS((void)train(build_model(4, 4, {}, 1), train_set, empty, cfg),
                  InvalidArgument);
  TrainConfig bad = cfg;
  bad.loss = "mse";
  CHECK_THROWS_AS((void)train(build_model(4, 4, {}, 1), train_set, train_set, bad),
                  InvalidArgument);
}

TEST_CASE("calibration: separable predictions give a perfect threshold") {
  // a linear model with zero weights and a chosen bias predicts the bias
  // for every sample; engineer targets so one coordinate is always hot
  auto model = build_model(2, 3, {}, 600);
  model.layers[0].dense().weight.setZero();
  model.layers[0].dense().bias << 0.9, 0.1, 0.1;
  Dataset val;
  val.pooling = PoolingMatrix{2, 3, {1, 0, 0, 0, 1, 0}};
  val.split = Split::kVal;
  val.gen_config = GenConfig{3, 2, 1.0, 0.0, 0, 1};
  val.count = 4;
  val.signals = {1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0};
  val.measurements = {0, 0, 1, 0, 0, 1, 2, 2};
  const auto tau = calibrate_threshold(model, val);
  // any threshold in (0.1, 0.9] recovers every sample; the smallest optimal
  // candidate is the midpoint 0.5
  CHECK(tau.value == doctest::Approx(0.5));
  for (int i = 0; i < val.count; ++i) {
    const auto bits = decode(model, val.measurement(i), tau);
    CHECK(bits == std::vector<std::uint8_t>{1, 0, 0});
  }
}

TEST_CASE("calibration beats a fine threshold grid") {
  const auto pooling = identity_pooling(9);
  const auto train_set = manual_dataset(pooling, 200, 2.0, 700, Split::kTrain);
  const auto val_set = manual_dataset(pooling, 60, 2.0, 701, Split::kVal);
  auto model = build_model(9, 9, {12}, 700);
  TrainConfig cfg;
  cfg.batch_size = 25;
  cfg.max_epochs = 15;
  cfg.patience = 15;
  cfg.seed = 700;
  auto [trained, history] = train(std::move(model), train_set, val_set, cfg);
  const auto tau = calibrate_threshold(trained, val_set);

  const Matrix preds = eval_outputs(trained, to_input_matrix(val_set));
  const auto success_rate = [&](double t) {
    int ok = 0;
    for (int i = 0; i < val_set.count; ++i) {
      bool exact = true;
      for (int j = 0; j < 9; ++j)
        exact &= (preds(i, j) >= t ? 1 : 0) == val_set.signal(i)[j];
      ok += exact;
    }
    return double(ok) / val_set.count;
  };
  const double chosen = success_rate(tau.value);
  const double lo = preds.minCoeff() - 0.01, hi = preds.maxCoeff() + 0.01;
  for (int g = 0; g <= 1000; ++g) {
    const double t = lo + (hi - lo) * g / 1000.0;
    CHECK(success_rate(t) <= chosen + 1e-12);
  }
}

TEST_CASE("calibration handles the all-zero degenerate class") {
  auto model = build_model(2, 2, {}, 800);
  model.layers[0].dense().weight.setZero();
  model.layers[0].dense().bias << 0.2, 0.3;  // all predictions below 0.5
  Dataset val;
  val.pooling = identity_pooling(2);
  val.split = Split::kVal;
  val.gen_config = GenConfig{2, 2, 0.0, 0.0, 0, 1};
  val.count = 3;
  val.signals = {0, 0, 0, 0, 0, 0};
  val.measurements = {0, 0, 0, 0, 0, 0};
  const auto tau = calibrate_threshold(model, val);
  CHECK(tau.value > 0.3);  // above every prediction
  for (int i = 0; i < val.count; ++i) {
    const auto bits = decode(model, val.measurement(i), tau);
    CHECK(bits == std::vector<std::uint8_t>{0, 0});
  }
}

TEST_CASE("decode thresholds with >= at the boundary") {
  auto model = build_model(1, 2, {}, 900);
  model.layers[0].dense().weight.setZero();
  model.layers[0].dense().bias << 0.2, 0.9;
  const std::vector<std::int32_t> y{0};
  CHECK(decode(model, y, Threshold{0.5}) == std::vector<std::uint8_t>{0, 1});
  CHECK(decode(model, y, Threshold{0.9}) == std::vector<std::uint8_t>{0, 1});
  CHECK(decode(model, y, Threshold{0.2}) == std::vector<std::uint8_t>{1, 1});
  CHECK(decode(model, y, Threshold{1.5}) == std::vector<std::uint8_t>{0, 0});
}

TEST_CASE("history csv lists one line per epoch") {
  TrainHistory h;
  h.train_loss = {0.5, 0.25};
  h.val_loss = {0.6, 0.3};
  h.best_epoch = 2;
  const auto path = std::filesystem::temp_directory_path() / "qgt_history.csv";
  save_history_csv(h, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,train_loss,val_loss");
  std::getline(in, line);
  CHECK(line == "1,0.5,0.6");
  std::getline(in, line);
  CHECK(line == "2,0.25,0.3");
}

}  // TEST_SUITE
