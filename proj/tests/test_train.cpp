#include <doctest.h>

#include <cmath>

#include "bbsteal/dataset.hpp"
#include "bbsteal/defense.hpp"
#include "bbsteal/metrics.hpp"
#include "bbsteal/train.hpp"
#include "bbsteal/truncation.hpp"
#include "helpers.hpp"

using namespace bbsteal;
using bbsteal::testing::make_toy2conv;
using bbsteal::testing::random_image;

namespace {

TrainConfig quick_config(int epochs, uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.base_lr = 0.05;
  cfg.scale_lr_by_batch = false;
  cfg.lr_decay_factor = 0.5;
  cfg.lr_decay_period = std::max(1, epochs / 2);
  cfg.momentum = 0.9;
  cfg.weight_decay = 0.0;
  cfg.batch_size = 8;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("TrainConfig validation and lr scaling") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.effective_lr() == doctest::Approx(0.02 * 32.0 / 128.0));
  cfg.scale_lr_by_batch = false;
  CHECK(cfg.effective_lr() == doctest::Approx(0.02));
  cfg.lr_decay_factor = 1.5;
  CHECK_THROWS(cfg.validate());
  cfg = TrainConfig{};
  cfg.epochs = 0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("fit: one-sample memorization drives the loss below 0.01") {
  Classifier model("toy", make_toy2conv({3, 8, 8}, 4, 6, 8), 1);
  Rng rng(2);
  const ImageTensor x = random_image(3, 8, 8, rng);
  const HardLabel y = hard_label_from_class(2, 4);
  const std::vector<TrainItem> items = {{&x.data, &y.onehot}};
  fit(model, items, quick_config(60, 3));
  CHECK(total_loss(model, items) < 0.01);
}

TEST_CASE("fit: loss decreases relative to initialization; deterministic by seed") {
  const LabeledData data = make_shapes_data(64, 5, 16);
  std::vector<TrainItem> items;
  for (size_t i = 0; i < data.size(); ++i) {
    items.push_back({&data.images[i].data, &data.labels[i].onehot});
  }
  Classifier model("smallcnn", Dims{3, 16, 16}, 10, 7);
  TrainConfig cfg = quick_config(5, 11);
  cfg.batch_size = 16;

  // loss at the exact initialization fit() will start from
  Classifier init_copy = model;
  init_copy.reinit(cfg.seed);
  const double before = total_loss(init_copy, items);

  fit(model, items, cfg);
  const double after = total_loss(model, items);
  CHECK(after < before);

  Classifier model2("smallcnn", Dims{3, 16, 16}, 10, 999);
  fit(model2, items, cfg);  // same config seed: identical result
  for (size_t p = 0; p < model.net().params.size(); ++p) {
    CHECK(model.net().params[p].v == model2.net().params[p].v);
  }
}

TEST_CASE("fit_substitute: empty union errors; soft one-hot equals hard") {
  Classifier model("toy", make_toy2conv({3, 8, 8}, 3), 13);
  SampleSet empty;
  CHECK_THROWS(fit_substitute(model, {&empty}, nullptr, quick_config(2, 1)));

  // same data labeled two ways: HardLabel vs one-hot ProbVector
  Rng rng(14);
  SampleSet hard, soft;
  for (int i = 0; i < 8; ++i) {
    const ImageTensor img = random_image(3, 8, 8, rng);
    const int cls = i % 3;
    Sample a;
    a.image = img;
    a.label = hard_label_from_class(cls, 3);
    a.provenance = Provenance::transfer;
    hard.add(std::move(a));
    Sample b;
    b.image = img;
    ProbVector onehot;
    onehot.probs.assign(3, 0.0f);
    onehot.probs[cls] = 1.0f;
    b.label = std::move(onehot);
    b.provenance = Provenance::pseudo;
    soft.add(std::move(b));
  }
  Classifier m1("toy", make_toy2conv({3, 8, 8}, 3), 1);
  Classifier m2("toy", make_toy2conv({3, 8, 8}, 3), 2);
  const TrainConfig cfg = quick_config(4, 21);
  fit_substitute(m1, {&hard}, nullptr, cfg);
  SampleSet none;
  fit_substitute(m2, {}, &soft, cfg);
  for (size_t p = 0; p < m1.net().params.size(); ++p) {
    CHECK(m1.net().params[p].v == m2.net().params[p].v);
  }
}

TEST_CASE("total_loss: doubling an example's multiplicity doubles its contribution") {
  Classifier model("toy", make_toy2conv({3, 8, 8}, 3), 31);
  Rng rng(32);
  const ImageTensor a = random_image(3, 8, 8, rng);
  const ImageTensor b = random_image(3, 8, 8, rng);
  const HardLabel ya = hard_label_from_class(0, 3);
  const HardLabel yb = hard_label_from_class(1, 3);
  const std::vector<TrainItem> base = {{&a.data, &ya.onehot}, {&b.data, &yb.onehot}};
  const std::vector<TrainItem> doubled = {
      {&a.data, &ya.onehot}, {&b.data, &yb.onehot}, {&b.data, &yb.onehot}};
  const double la = total_loss(model, {base[0]});
  const double lb = total_loss(model, {base[1]});
  CHECK(total_loss(model, base) == doctest::Approx(la + lb).epsilon(1e-9));
  CHECK(total_loss(model, doubled) == doctest::Approx(la + 2 * lb).epsilon(1e-9));
}

TEST_CASE("misinformation training pushes the true-class probability below 1/N") {
  const LabeledData data = make_shapes_data(96, 41, 16);
  std::vector<TrainItem> items;
  for (size_t i = 0; i < data.size(); ++i) {
    items.push_back({&data.images[i].data, &data.labels[i].onehot});
  }
  Classifier misinfo("smallcnn", Dims{3, 16, 16}, 10, 43);
  TrainConfig cfg = quick_config(8, 43);
  cfg.batch_size = 16;
  train_misinformation_model(misinfo, items, cfg);

  double mean_true = 0.0;
  const auto probs = misinfo.predict(data.images);
  for (size_t i = 0; i < data.size(); ++i) {
    mean_true += probs[i].probs[data.labels[i].class_index];
  }
  mean_true /= static_cast<double>(data.size());
  CHECK(mean_true < 0.1);
}

TEST_CASE("shapes dataset: separable enough for a quick victim") {
  // a tiny victim on a tiny split already clears chance by a wide margin
  const LabeledData train = make_shapes_data(400, 51, 16);
  const LabeledData test = make_shapes_data(200, 52, 16);
  Classifier victim("smallcnn", Dims{3, 16, 16}, 10, 53);
  TrainConfig cfg = quick_config(10, 53);
  cfg.batch_size = 32;
  cfg.base_lr = 0.05;
  std::vector<TrainItem> items;
  for (size_t i = 0; i < train.size(); ++i) {
    items.push_back({&train.images[i].data, &train.labels[i].onehot});
  }
  fit(victim, items, cfg);
  const auto probs = victim.predict(test.images);
  std::vector<HardLabel> preds;
  for (const auto& p : probs) preds.push_back(truncate_hard(p));
  CHECK(accuracy(preds, test.labels) > 0.5);
}
