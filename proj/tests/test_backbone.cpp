#include "doctest.h"

#include <random>

#include "ldg/backbone.hpp"
#include "ldg/checkpoint.hpp"
#include "ldg/model.hpp"
#include "ldg/objectives.hpp"
#include "ldg/rng.hpp"

#include "oracles.hpp"

using namespace ldg;

namespace {

EncoderConfig tiny_config() {
  EncoderConfig cfg;
  cfg.image_size = 16;
  cfg.patch_size = 8;
  cfg.embed_dim = 16;
  cfg.depth = 2;
  cfg.num_heads = 2;
  cfg.num_classes = 2;
  return cfg;
}

Image random_image(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(size, size);
  for (double& p : img.pixels) p = u(rng);
  return img;
}

Image tinted(const Image& img) {
  Image out = img;
  constexpr double kTint[3] = {0.95, 0.55, 0.35};
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < 3; ++c)
        out.at(y, x, c) = 0.65 * out.at(y, x, c) + 0.35 * kTint[c];
  return out;
}

double cosine_distance(const RowVector& a, const RowVector& b) {
  return 1.0 - a.dot(b) / (a.norm() * b.norm());
}

}  // namespace

TEST_CASE("encoder config invariants") {
  EncoderConfig cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());

  cfg.image_size = 15;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = tiny_config();
  cfg.embed_dim = 17;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = tiny_config();
  cfg.depth = 0;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = tiny_config();
  cfg.num_classes = 1;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = tiny_config();
  cfg.drop_rate = 1.0;
  CHECK_THROWS_AS(cfg.validate(), config_error);
}

TEST_CASE("forward_plain shape contract") {
  EncoderConfig cfg;
  cfg.image_size = 32;
  cfg.patch_size = 8;
  cfg.embed_dim = 64;
  cfg.depth = 2;
  cfg.num_heads = 4;
  cfg.num_classes = 2;
  auto params = EncoderParams::init(cfg, 1);
  Image a = random_image(32, 10), b = random_image(32, 11);
  auto out = forward_plain(cfg, params, {&a, &b});
  CHECK(out.cls.rows() == 2);
  CHECK(out.cls.cols() == 64);
  CHECK(out.logits.rows() == 2);
  CHECK(out.logits.cols() == 2);

  Image wrong = random_image(16, 12);
  CHECK_THROWS_AS(forward_plain(cfg, params, {&wrong}), config_error);
}

TEST_CASE("duplicated inputs give identical rows in eval mode") {
  EncoderConfig cfg = tiny_config();
  cfg.drop_rate = 0.3;  // eval mode must ignore it
  auto params = EncoderParams::init(cfg, 2);
  Image img = random_image(16, 20);
  auto out = forward_plain(cfg, params, {&img, &img, &img});
  CHECK(out.logits.row(0) == out.logits.row(1));
  CHECK(out.logits.row(1) == out.logits.row(2));
  CHECK(out.cls.row(0) == out.cls.row(2));
}

TEST_CASE("seeded init is bitwise reproducible across runs") {
  EncoderConfig cfg = tiny_config();
  auto p1 = EncoderParams::init(cfg, 77);
  auto p2 = EncoderParams::init(cfg, 77);
  Image img = random_image(16, 30);
  auto o1 = forward_plain(cfg, p1, {&img});
  auto o2 = forward_plain(cfg, p2, {&img});
  CHECK(o1.logits == o2.logits);
  CHECK(o1.cls == o2.cls);
}

TEST_CASE("extract_cls boundary and errors") {
  EncoderConfig cfg = tiny_config();
  auto params = EncoderParams::init(cfg, 3);
  Image img = random_image(16, 40);

  auto plain = forward_plain(cfg, params, {&img});
  Matrix deep = extract_cls(cfg, params, {&img}, cfg.depth);
  CHECK(deep.row(0) == plain.cls.row(0));

  Matrix shallow = extract_cls(cfg, params, {&img}, 1);
  CHECK(shallow.rows() == 1);
  CHECK(shallow.cols() == cfg.embed_dim);
  CHECK(shallow.row(0) != plain.cls.row(0));

  CHECK_THROWS_AS(extract_cls(cfg, params, {&img}, 0), argument_error);
  CHECK_THROWS_AS(extract_cls(cfg, params, {&img}, cfg.depth + 1), argument_error);
}

TEST_CASE("layer-1 features track a global tint more than content") {
  EncoderConfig cfg;
  cfg.image_size = 16;
  cfg.patch_size = 4;
  cfg.embed_dim = 32;
  cfg.depth = 2;
  cfg.num_heads = 4;
  auto params = EncoderParams::init(cfg, 42);

  const int n = 12;
  std::vector<Image> plain_imgs, tint_imgs;
  for (int i = 0; i < n; ++i) {
    plain_imgs.push_back(random_image(16, 100 + i));
    tint_imgs.push_back(tinted(plain_imgs.back()));
  }
  std::vector<const Image*> all;
  for (const auto& im : plain_imgs) all.push_back(&im);
  for (const auto& im : tint_imgs) all.push_back(&im);
  Matrix feats = extract_cls(cfg, params, all, 1);

  double cross = 0.0, same = 0.0;
  int cross_n = 0, same_n = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      cross += cosine_distance(feats.row(i), feats.row(n + j));
      ++cross_n;
      same += cosine_distance(feats.row(i), feats.row(j));
      ++same_n;
    }
  CHECK(cross / cross_n > same / same_n);
}

TEST_CASE("empty prompt reproduces forward_plain bitwise") {
  EncoderConfig cfg = tiny_config();
  auto params = EncoderParams::init(cfg, 5);
  Image img = random_image(16, 50);
  auto plain = forward_plain(cfg, params, {&img});
  auto prompted = forward_prompted(cfg, params, {&img}, Matrix(0, cfg.embed_dim));
  CHECK(plain.logits == prompted.logits);
  CHECK(plain.cls == prompted.cls);
}

TEST_CASE("prompted forward shapes and prompt sensitivity") {
  EncoderConfig cfg = tiny_config();
  auto params = EncoderParams::init(cfg, 6);
  Image img = random_image(16, 60);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> dist(0.0, 0.5);
  Matrix p1(4, cfg.embed_dim), p2(4, cfg.embed_dim);
  for (Eigen::Index i = 0; i < p1.rows(); ++i)
    for (Eigen::Index j = 0; j < p1.cols(); ++j) {
      p1(i, j) = dist(rng);
      p2(i, j) = dist(rng);
    }

  auto o1 = forward_prompted(cfg, params, {&img}, p1);
  CHECK(o1.logits.rows() == 1);
  CHECK(o1.logits.cols() == cfg.num_classes);
  auto o2 = forward_prompted(cfg, params, {&img}, p2);
  CHECK((o1.logits - o2.logits).cwiseAbs().maxCoeff() > 1e-9);

  Matrix bad(4, cfg.embed_dim + 1);
  bad.setZero();
  CHECK_THROWS_AS(forward_prompted(cfg, params, {&img}, bad), argument_error);
}

TEST_CASE("patch permutation changes logits (position-aware)") {
  EncoderConfig cfg = tiny_config();
  auto params = EncoderParams::init(cfg, 8);
  Image img = random_image(16, 70);
  Image swapped = img;
  // swap the two top patches (8x8 blocks)
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      for (int c = 0; c < 3; ++c)
        std::swap(swapped.at(y, x, c), swapped.at(y, x + 8, c));
  auto o1 = forward_plain(cfg, params, {&img});
  auto o2 = forward_plain(cfg, params, {&swapped});
  CHECK((o1.logits - o2.logits).cwiseAbs().maxCoeff() > 1e-12);
}

TEST_CASE("prompt gradient matches central finite differences") {
  EncoderConfig cfg = tiny_config();
  auto params = EncoderParams::init(cfg, 9);
  Image img = random_image(16, 80);
  Matrix prompt(3, cfg.embed_dim);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> dist(0.0, 0.3);
  for (Eigen::Index i = 0; i < prompt.rows(); ++i)
    for (Eigen::Index j = 0; j < prompt.cols(); ++j) prompt(i, j) = dist(rng);
  const int label = 1;

  ForwardCache cache;
  encoder_forward(cfg, params, img, prompt, false, nullptr, cache);
  Vector dlogits;
  softmax_cross_entropy(cache.logits, label, &dlogits);
  EncoderParams grads = EncoderParams::zeros(cfg);
  Matrix d_prompt = encoder_backward(cfg, params, cache, dlogits, grads);

  auto eval = [&] {
    ForwardCache c;
    encoder_forward(cfg, params, img, prompt, false, nullptr, c);
    return softmax_cross_entropy(c.logits, label);
  };
  std::uniform_int_distribution<int> pick_row(0, 2), pick_col(0, cfg.embed_dim - 1);
  for (int k = 0; k < 12; ++k) {
    int i = pick_row(rng), j = pick_col(rng);
    double numeric = oracle::central_diff(eval, prompt(i, j));
    CHECK(oracle::rel_err(d_prompt(i, j), numeric) < 1e-4);
  }
}

TEST_CASE("encoder parameter gradients match finite differences") {
  EncoderConfig cfg = tiny_config();
  auto params = EncoderParams::init(cfg, 13);
  Image img = random_image(16, 90);
  const int label = 0;

  ForwardCache cache;
  encoder_forward(cfg, params, img, Matrix(0, cfg.embed_dim), false, nullptr, cache);
  Vector dlogits;
  softmax_cross_entropy(cache.logits, label, &dlogits);
  EncoderParams grads = EncoderParams::zeros(cfg);
  encoder_backward(cfg, params, cache, dlogits, grads);

  auto eval = [&] {
    ForwardCache c;
    encoder_forward(cfg, params, img, Matrix(0, cfg.embed_dim), false, nullptr, c);
    return softmax_cross_entropy(c.logits, label);
  };

  std::mt19937_64 rng(17);
  auto tensors = params.tensors();
  auto grad_tensors = grads.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    Matrix& theta = *tensors[t];
    std::uniform_int_distribution<Eigen::Index> pr(0, theta.rows() - 1);
    std::uniform_int_distribution<Eigen::Index> pc(0, theta.cols() - 1);
    for (int k = 0; k < 3; ++k) {
      Eigen::Index i = pr(rng), j = pc(rng);
      double numeric = oracle::central_diff(eval, theta(i, j));
      INFO("tensor ", t, " entry (", i, ",", j, ")");
      CHECK(oracle::rel_err((*grad_tensors[t])(i, j), numeric) < 1e-4);
    }
  }
}

TEST_CASE("dropout is deterministic given the seed and off in eval") {
  EncoderConfig cfg = tiny_config();
  cfg.drop_rate = 0.2;
  auto params = EncoderParams::init(cfg, 21);
  Image img = random_image(16, 95);

  ForwardCache c1, c2;
  std::mt19937_64 r1(5), r2(5);
  encoder_forward(cfg, params, img, Matrix(0, cfg.embed_dim), true, &r1, c1);
  encoder_forward(cfg, params, img, Matrix(0, cfg.embed_dim), true, &r2, c2);
  CHECK(c1.logits == c2.logits);

  std::mt19937_64 r3(6);
  encoder_forward(cfg, params, img, Matrix(0, cfg.embed_dim), true, &r3, c2);
  CHECK(c1.logits != c2.logits);

  CHECK_THROWS_AS(
      encoder_forward(cfg, params, img, Matrix(0, cfg.embed_dim), true, nullptr, c1),
      argument_error);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  EncoderConfig cfg = tiny_config();
  Model model = Model::build(cfg, Toggles::full(), 3, 2, 123);
  Image img = random_image(16, 99);

  Checkpoint ckpt;
  ckpt.seed = 123;
  ckpt.toggles = Toggles::full();
  ckpt.prompt_len = 3;
  ckpt.num_domains = 2;
  ckpt.model = model;
  ckpt.selected_epoch = 4;
  ckpt.selected_metric = 0.75;
  PseudoDomainAssignment assignment;
  assignment.M = 2;
  assignment.layer = 1;
  assignment.epoch = 4;
  assignment.centroids = Matrix::Random(2, cfg.embed_dim);
  assignment.assignment["a"] = 0;
  assignment.assignment["b"] = 1;
  ckpt.assignment = assignment;

  std::string path = "ckpt_roundtrip_test.bin";
  save_checkpoint(path, ckpt);
  Checkpoint loaded = load_checkpoint(path);
  std::remove(path.c_str());

  auto before = ckpt.model.tensors();
  auto after = loaded.model.tensors();
  REQUIRE(before.size() == after.size());
  for (std::size_t t = 0; t < before.size(); ++t) CHECK(*before[t] == *after[t]);

  auto o1 = forward_plain(cfg, ckpt.model.enc, {&img});
  auto o2 = forward_plain(cfg, loaded.model.enc, {&img});
  CHECK(o1.logits == o2.logits);
  CHECK(loaded.seed == 123);
  CHECK(loaded.selected_epoch == 4);
  CHECK(loaded.assignment.has_value());
  CHECK(loaded.assignment->assignment.at("b") == 1);
  CHECK(loaded.assignment->centroids == assignment.centroids);
}
