#include "doctest.h"

#include <cmath>

#include "ldg/checkpoint.hpp"
#include "ldg/config.hpp"
#include "ldg/data.hpp"
#include "ldg/trainer.hpp"

using namespace ldg;

namespace {

TrapSpec tiny_trap(double rho, std::uint64_t seed, int n_train = 24) {
  TrapSpec spec;
  spec.rho = rho;
  spec.n_train = n_train;
  spec.n_val = 24;
  spec.n_test_id = 24;
  spec.n_test_ood = 24;
  spec.seed = seed;
  return spec;
}

TrainConfig tiny_config(Toggles toggles, int epochs, int cluster_epoch) {
  TrainConfig cfg;
  cfg.encoder.image_size = 32;
  cfg.encoder.patch_size = 8;
  cfg.encoder.embed_dim = 16;
  cfg.encoder.depth = 2;
  cfg.encoder.num_heads = 2;
  cfg.toggles = toggles;
  cfg.num_domains = 2;
  cfg.prompt_len = 2;
  cfg.cluster_epoch = cluster_epoch;
  cfg.epochs = epochs;
  cfg.batch_size = 8;
  cfg.patience = 100;
  cfg.augment = false;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("train config invariants") {
  TrainConfig cfg = tiny_config(Toggles::full(), 4, 2);
  CHECK_NOTHROW(cfg.validate());

  cfg.cluster_epoch = 4;  // must be < epochs
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = tiny_config(Toggles::full(), 4, 2);
  cfg.patience = 0;
  CHECK_THROWS_AS(cfg.validate(), config_error);

  Toggles bad;
  bad.A = true;  // A without P
  CHECK_THROWS_AS(bad.validate(), config_error);
  bad = Toggles{};
  bad.M = true;
  CHECK_THROWS_AS(bad.validate(), config_error);
  bad = Toggles{};
  bad.G = true;
  CHECK_THROWS_AS(bad.validate(), config_error);

  CHECK(Toggles::none().tag() == "baseline");
  CHECK(Toggles::full().tag() == "+P+A+M+G");
  CHECK(Toggles{true, true, false, false}.tag() == "+P+A");
}

TEST_CASE("warmup epoch: step count and untouched prompt parameters") {
  auto data = generate_trap(tiny_trap(1.0, 1, 20));
  TrainConfig cfg = tiny_config(Toggles::full(), 4, 2);
  cfg.batch_size = 8;

  Model model = Model::build(cfg.encoder, cfg.toggles, cfg.prompt_len, cfg.num_domains,
                             cfg.seed);
  PromptBank bank_before = *model.bank;
  Adapter adapter_before = *model.adapter;
  Matrix enc_before = model.enc.patch_embed_w;

  AdamW opt;
  opt.lr = cfg.lr;
  opt.weight_decay = cfg.weight_decay;
  opt.init(std::as_const(model.enc).tensors());
  auto losses = warmup_epoch(model, data.train, opt, cfg, 1);

  CHECK(losses.size() == 3);  // ceil(20 / 8)
  CHECK(model.enc.patch_embed_w != enc_before);  // backbone trained
  CHECK(model.bank->shared == bank_before.shared);
  for (int m = 0; m < 2; ++m) {
    CHECK(model.bank->u[m] == bank_before.u[m]);
    CHECK(model.bank->v[m] == bank_before.v[m]);
  }
  CHECK(model.adapter->w1 == adapter_before.w1);
  CHECK(model.adapter->w2 == adapter_before.w2);
}

TEST_CASE("warmup losses decrease on separable data") {
  auto data = generate_trap(tiny_trap(1.0, 2, 32));
  TrainConfig cfg = tiny_config(Toggles::none(), 3, 1);
  cfg.lr = 1e-3;

  Model model = Model::build(cfg.encoder, cfg.toggles, 1, 1, cfg.seed);
  AdamW opt;
  opt.lr = cfg.lr;
  opt.weight_decay = cfg.weight_decay;
  opt.init(std::as_const(model.enc).tensors());

  double first = 0.0, last = 0.0;
  for (int epoch = 1; epoch <= 3; ++epoch) {
    auto losses = warmup_epoch(model, data.train, opt, cfg, epoch);
    double mean = 0.0;
    for (double l : losses) mean += l;
    mean /= static_cast<double>(losses.size());
    if (epoch == 1) first = mean;
    last = mean;
  }
  CHECK(last < first);
}

TEST_CASE("fit schedule: one-time clustering stamped at the clustering epoch") {
  auto data = generate_trap(tiny_trap(1.0, 3, 24));
  TrainConfig cfg = tiny_config(Toggles::full(), 5, 3);
  FitDatasets sets{&data.train, &data.val, nullptr};

  FitResult result = fit(cfg, sets);
  REQUIRE(result.assignment.has_value());
  CHECK(result.assignment->epoch == 3);
  CHECK(result.assignment->layer == cfg.cluster_layer);
  CHECK(result.assignment->M == 2);
  CHECK(result.assignment->assignment.size() == data.train.size());

  // selection happens in the prompted phase only
  CHECK(result.history.selected_epoch > cfg.cluster_epoch);
  // losses recorded for every epoch
  CHECK(result.history.epochs.size() == 5);
  // prompted-phase steps carry the weighted-loss parts
  bool saw_prompted = false;
  for (const auto& rec : result.step_log) {
    if (rec.epoch <= 3) {
      CHECK(rec.parts.weighted_ce == 0.0);
    } else {
      saw_prompted = true;
      CHECK(rec.parts.weighted_ce > 0.0);
      CHECK(rec.parts.weight_supervision > 0.0);
    }
  }
  CHECK(saw_prompted);
}

TEST_CASE("fit reproducibility: identical config and seed, identical history") {
  auto data = generate_trap(tiny_trap(0.9, 4, 24));
  TrainConfig cfg = tiny_config(Toggles::full(), 4, 2);
  cfg.augment = true;  // exercise the augmentation rng streams too
  FitDatasets sets{&data.train, &data.val, nullptr};

  FitResult r1 = fit(cfg, sets);
  FitResult r2 = fit(cfg, sets);
  REQUIRE(r1.history.epochs.size() == r2.history.epochs.size());
  for (std::size_t i = 0; i < r1.history.epochs.size(); ++i) {
    CHECK(r1.history.epochs[i].train_loss == r2.history.epochs[i].train_loss);
    CHECK(r1.history.epochs[i].val_metric == r2.history.epochs[i].val_metric);
  }
  REQUIRE(r1.step_log.size() == r2.step_log.size());
  for (std::size_t i = 0; i < r1.step_log.size(); ++i)
    CHECK(r1.step_log[i].parts.total == r2.step_log[i].parts.total);

  auto t1 = r1.model.tensors();
  auto t2 = r2.model.tensors();
  for (std::size_t t = 0; t < t1.size(); ++t) CHECK(*t1[t] == *t2[t]);
}

TEST_CASE("early stopping on a plateauing validation metric") {
  auto data = generate_trap(tiny_trap(1.0, 5, 24));
  TrainConfig cfg = tiny_config(Toggles::none(), 12, 1);
  cfg.patience = 2;
  cfg.lr = 1e-3;  // reaches a perfect in-distribution auc quickly, then plateaus
  FitDatasets sets{&data.train, &data.val, nullptr};

  FitResult result = fit(cfg, sets);
  CHECK(result.history.epochs.size() < 12);

  // selection soundness: the selected metric is the max over recorded epochs
  double best = -1.0;
  for (const auto& rec : result.history.epochs) best = std::max(best, rec.val_metric);
  CHECK(result.history.selected_metric == best);
  int marked = 0;
  for (const auto& rec : result.history.epochs)
    if (rec.selected) {
      ++marked;
      CHECK(rec.epoch == result.history.selected_epoch);
      CHECK(rec.val_metric == result.history.selected_metric);
    }
  CHECK(marked == 1);
}

TEST_CASE("ablation lattice: each toggle changes only its loss terms") {
  auto data = generate_trap(tiny_trap(0.9, 6, 24));
  FitDatasets sets{&data.train, &data.val, nullptr};

  auto prompted_rows = [&](const Toggles& toggles) {
    TrainConfig cfg = tiny_config(toggles, 3, 1);
    FitResult r = fit(cfg, sets);
    std::vector<StepRecord> rows;
    for (const auto& rec : r.step_log)
      if (rec.epoch > 1) rows.push_back(rec);
    return rows;
  };

  for (const auto& rec : prompted_rows({true, false, false, false})) {
    CHECK(rec.parts.mixup_loss > 0.0);
    CHECK(rec.parts.weighted_ce == 0.0);
    CHECK(rec.parts.weight_supervision == 0.0);
    CHECK(rec.parts.total == rec.parts.mixup_loss);
  }
  for (const auto& rec : prompted_rows({true, true, false, false})) {
    CHECK(rec.parts.weighted_ce > 0.0);
    CHECK(rec.parts.weight_supervision > 0.0);
    CHECK(rec.parts.total ==
          rec.parts.mixup_loss + rec.parts.weighted_ce +
              rec.parts.lambda_w * rec.parts.weight_supervision);
  }
}

TEST_CASE("predict reductions, shapes and determinism") {
  auto data = generate_trap(tiny_trap(0.5, 7, 24));
  auto images = image_pointers(data.val);

  // toggles off: predict equals plain softmax scores
  Model erm = Model::build(tiny_config(Toggles::none(), 2, 1).encoder, Toggles::none(), 1,
                           1, 9);
  Prediction p = predict(erm, Toggles::none(), images);
  CHECK(p.weights.size() == 0);
  auto plain = forward_plain(erm.cfg, erm.enc, images);
  for (Eigen::Index i = 0; i < p.scores.rows(); ++i) {
    CHECK(p.scores.row(i).sum() == doctest::Approx(1.0).epsilon(1e-6));
    Eigen::Index arg_pred, arg_plain;
    p.scores.row(i).maxCoeff(&arg_pred);
    plain.logits.row(i).maxCoeff(&arg_plain);
    CHECK(arg_pred == arg_plain);
  }

  // prompt-enabled model: weights on the simplex, repeated calls identical
  Model full = Model::build(tiny_config(Toggles::full(), 2, 1).encoder, Toggles::full(), 2,
                            3, 11);
  Prediction q1 = predict(full, Toggles::full(), images);
  Prediction q2 = predict(full, Toggles::full(), images);
  CHECK(q1.scores == q2.scores);
  CHECK(q1.weights == q2.weights);
  CHECK(q1.weights.cols() == 3);
  for (Eigen::Index i = 0; i < q1.weights.rows(); ++i)
    CHECK(q1.weights.row(i).sum() == doctest::Approx(1.0).epsilon(1e-6));

  // P without A: uniform weighting
  Toggles p_only{true, false, false, false};
  Model pm = Model::build(full.cfg, p_only, 2, 3, 13);
  Prediction q3 = predict(pm, p_only, images);
  for (Eigen::Index i = 0; i < q3.weights.rows(); ++i)
    for (int m = 0; m < 3; ++m) CHECK(q3.weights(i, m) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("trained checkpoint round trip preserves predictions and assignment") {
  auto data = generate_trap(tiny_trap(0.9, 8, 24));
  TrainConfig cfg = tiny_config(Toggles::full(), 3, 1);
  FitDatasets sets{&data.train, &data.val, nullptr};
  FitResult result = fit(cfg, sets);

  Checkpoint ckpt;
  ckpt.seed = cfg.seed;
  ckpt.toggles = cfg.toggles;
  ckpt.prompt_len = cfg.prompt_len;
  ckpt.num_domains = cfg.num_domains;
  ckpt.model = result.model;
  ckpt.assignment = result.assignment;
  ckpt.selected_epoch = result.history.selected_epoch;
  ckpt.selected_metric = result.history.selected_metric;
  save_checkpoint("trainer_ckpt_test.bin", ckpt);
  Checkpoint loaded = load_checkpoint("trainer_ckpt_test.bin");
  std::remove("trainer_ckpt_test.bin");

  auto images = image_pointers(data.test_ood);
  Prediction p1 = predict(ckpt.model, ckpt.toggles, images);
  Prediction p2 = predict(loaded.model, loaded.toggles, images);
  CHECK(p1.scores == p2.scores);
  CHECK(p1.weights == p2.weights);
  CHECK(loaded.assignment->assignment == result.assignment->assignment);
  CHECK(loaded.selected_metric == result.history.selected_metric);
}

TEST_CASE("ood-val selection requires the ood dataset") {
  auto data = generate_trap(tiny_trap(0.5, 9, 24));
  TrainConfig cfg = tiny_config(Toggles::none(), 2, 1);
  cfg.selection = TrainConfig::Selection::ood_val;
  FitDatasets sets{&data.train, &data.val, nullptr};
  CHECK_THROWS_AS(fit(cfg, sets), config_error);
  FitDatasets with_ood{&data.train, &data.val, &data.test_ood};
  CHECK_NOTHROW(fit(cfg, with_ood));
}

TEST_CASE("config json round trip and strictness") {
  TrainConfig cfg = preset_train_config("pldg-desk");
  cfg.encoder.embed_dim = 64;
  cfg.diag_layers = {1, 6};
  std::string text = train_config_json(cfg);
  TrainConfig back = parse_train_config(text);
  CHECK(back.encoder.embed_dim == 64);
  CHECK(back.toggles.G);
  CHECK(back.diag_layers == std::vector<int>{1, 6});

  CHECK_THROWS_AS(parse_train_config("{\"bogus\": 1}"), config_error);
  CHECK_THROWS_AS(parse_train_config("{\"toggles\": {\"Q\": true}}"), config_error);
  CHECK_THROWS_AS(parse_train_config("not json"), config_error);
  CHECK_THROWS_AS(parse_train_config("{\"lr\": \"fast\"}"), config_error);

  TrainConfig overridden = parse_train_config("{}", {"lr=0.001", "toggles.P=true",
                                                     "encoder.embed_dim=32"});
  CHECK(overridden.lr == 0.001);
  CHECK(overridden.toggles.P);
  CHECK(overridden.encoder.embed_dim == 32);

  CHECK_THROWS_AS(parse_trap_spec("{\"rho\": 2.0}"), argument_error);
  CHECK_THROWS_AS(parse_trap_spec("{\"wat\": 1}"), config_error);
  TrapSpec spec = parse_trap_spec("{\"artifacts\": [\"curve_hair\"], \"rho\": 0.3}");
  CHECK(spec.artifacts == std::vector<ArtifactKind>{ArtifactKind::curve_hair});
}
