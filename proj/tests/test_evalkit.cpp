#include "doctest.h"

#include <random>

#include "ldg/csv.hpp"
#include "ldg/evalkit.hpp"

#include "oracles.hpp"

using namespace ldg;

TEST_CASE("roc_auc trivial orderings and the pinned example") {
  CHECK(roc_auc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == 1.0);
  CHECK(roc_auc({0.1, 0.2, 0.8, 0.9}, {1, 1, 0, 0}) == 0.0);
  CHECK(roc_auc({0.9, 0.8, 0.3, 0.1}, {1, 0, 1, 0}) == doctest::Approx(0.75));
  // ties count one half
  CHECK(roc_auc({0.5, 0.5}, {1, 0}) == doctest::Approx(0.5));
}

TEST_CASE("roc_auc error contracts") {
  CHECK_THROWS_AS(roc_auc({0.5, 0.5}, {1, 1}), argument_error);
  CHECK_THROWS_AS(roc_auc({0.5}, {1, 0}), argument_error);
  CHECK_THROWS_AS(roc_auc({0.5, 0.4}, {1, 2}), argument_error);
  CHECK_THROWS_AS(roc_auc({std::numeric_limits<double>::quiet_NaN(), 0.4}, {1, 0}),
                  argument_error);
}

TEST_CASE("roc_auc matches pair counting on random instances") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  std::uniform_int_distribution<int> size(2, 60);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> quantized(0, 4);
  int done = 0;
  while (done < 100) {
    int n = size(rng);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    bool any_pos = false, any_neg = false;
    for (int i = 0; i < n; ++i) {
      // quantized scores provoke ties half the time
      scores[i] = coin(rng) ? score(rng) : quantized(rng) / 4.0;
      labels[i] = coin(rng);
      (labels[i] ? any_pos : any_neg) = true;
    }
    if (!any_pos || !any_neg) continue;
    ++done;
    CHECK(roc_auc(scores, labels) ==
          doctest::Approx(oracle::auc_pair_count(scores, labels)).epsilon(1e-12));
  }
}

TEST_CASE("roc_auc invariances") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> scores(20);
    std::vector<int> labels(20);
    for (int i = 0; i < 20; ++i) {
      scores[i] = score(rng);
      labels[i] = i < 10 ? 1 : 0;  // both classes present
    }
    double base = roc_auc(scores, labels);

    // strictly monotone transform
    std::vector<double> transformed(20);
    for (int i = 0; i < 20; ++i) transformed[i] = std::exp(3.0 * scores[i]) + 1.0;
    CHECK(roc_auc(transformed, labels) == doctest::Approx(base).epsilon(1e-12));

    // complement symmetry (scores continuous: ties almost surely absent)
    std::vector<double> flipped(20);
    std::vector<int> inverted(20);
    for (int i = 0; i < 20; ++i) {
      flipped[i] = -scores[i];
      inverted[i] = labels[i];
    }
    CHECK(roc_auc(flipped, inverted) == doctest::Approx(1.0 - base).epsilon(1e-12));
  }
  (void)coin;
}

TEST_CASE("accuracy examples and hamming complement") {
  CHECK(accuracy({1, 2, 3}, {1, 2, 3}) == 1.0);
  CHECK(accuracy({1, 0}, {0, 1}) == 0.0);
  CHECK(accuracy({0, 1, 1, 0}, {0, 1, 0, 0}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(accuracy({1}, {1, 2}), argument_error);

  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> p(16), l(16);
    for (int i = 0; i < 16; ++i) {
      p[i] = coin(rng);
      l[i] = coin(rng);
    }
    double hamming = 0.0;
    for (int i = 0; i < 16; ++i) hamming += p[i] != l[i] ? 1.0 : 0.0;
    CHECK(accuracy(p, l) == doctest::Approx(1.0 - hamming / 16.0).epsilon(1e-12));
  }
}

TEST_CASE("frechet distance identity and mean shift") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix a(50, 3);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = dist(rng);

  CHECK(frechet_distance(a, a) <= 1e-6);

  RowVector delta(3);
  delta << 0.7, -0.3, 1.1;
  Matrix b = a.rowwise() + delta;
  CHECK(frechet_distance(a, b) == doctest::Approx(delta.squaredNorm()).epsilon(1e-6));

  // symmetry
  Matrix c(40, 3);
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j) c(i, j) = dist(rng) * 2.0 + 0.5;
  CHECK(frechet_distance(a, c) == doctest::Approx(frechet_distance(c, a)).epsilon(1e-10));
  CHECK(frechet_distance(a, c) >= 0.0);

  CHECK_THROWS_AS(frechet_distance(a, Matrix(1, 3)), argument_error);
  CHECK_THROWS_AS(frechet_distance(a, Matrix(10, 2)), argument_error);
  Matrix nan_mat = a;
  nan_mat(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(frechet_distance(nan_mat, a), data_error);
}

TEST_CASE("frechet matches the analytic 2x2 oracle on random feature sets") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.2, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix a(20, 2), b(25, 2);
    double sa = scale(rng), sb = scale(rng);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      a(i, 0) = dist(rng) * sa;
      a(i, 1) = dist(rng) * sb + 0.4 * a(i, 0);
    }
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      b(i, 0) = dist(rng) * sb + 0.8;
      b(i, 1) = dist(rng) * sa - 0.3 * b(i, 0);
    }
    // oracle: sample moments plus the analytic 2x2 square root
    auto moments = [](const Matrix& x) {
      Vector mu = x.colwise().mean().transpose();
      Matrix centered = x.rowwise() - mu.transpose();
      Matrix cov = centered.transpose() * centered / (x.rows() - 1.0);
      cov += 1e-6 * Matrix::Identity(2, 2);
      return std::pair<Vector, Matrix>(mu, cov);
    };
    auto [mu_a, cov_a] = moments(a);
    auto [mu_b, cov_b] = moments(b);
    double expected = oracle::frechet_gaussian_2d(mu_a, cov_a, mu_b, cov_b);
    CHECK(frechet_distance(a, b) == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("frechet approaches the population value on sampled gaussians") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector mu_a(2), mu_b(2);
  mu_a << 0.0, 0.0;
  mu_b << 1.0, -0.5;
  Matrix la(2, 2), lb(2, 2);
  la << 1.0, 0.0, 0.3, 0.8;   // cov_a = la la^T
  lb << 0.9, 0.0, -0.2, 1.1;  // cov_b = lb lb^T

  const int n = 20000;
  Matrix a(n, 2), b(n, 2);
  for (int i = 0; i < n; ++i) {
    Vector z(2);
    z << dist(rng), dist(rng);
    a.row(i) = (mu_a + la * z).transpose();
    z << dist(rng), dist(rng);
    b.row(i) = (mu_b + lb * z).transpose();
  }
  double population = oracle::frechet_gaussian_2d(mu_a, la * la.transpose(), mu_b,
                                                  lb * lb.transpose());
  CHECK(frechet_distance(a, b) == doctest::Approx(population).epsilon(0.05));
}

TEST_CASE("spearman rank correlation") {
  CHECK(*spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(*spearman({1, 2, 3, 4}, {5, 4, 3, 2}) == doctest::Approx(-1.0));
  // monotone nonlinear: still 1
  CHECK(*spearman({1, 2, 3, 4}, {1, 8, 27, 64}) == doctest::Approx(1.0));
  CHECK(!spearman({1, 2}, {2, 1}).has_value());      // fewer than 3 points
  CHECK(!spearman({1, 1, 1}, {1, 2, 3}).has_value());  // constant ranks
  CHECK_THROWS_AS(spearman({1, 2}, {1, 2, 3}), argument_error);
}

TEST_CASE("metric and distance csv formats") {
  write_metrics_csv("metrics_test.csv", {{"trap", "roc_auc", 0.875, 64, 7}});
  auto metrics = read_csv("metrics_test.csv");
  std::remove("metrics_test.csv");
  CHECK(metrics.header ==
        std::vector<std::string>{"dataset", "metric", "value", "n", "seed"});
  CHECK(metrics.rows[0][2] == "0.875");

  DomainDistanceReport report;
  report.rows = {{0, 1.5, 0.4}, {1, 3.0, 0.6}};
  report.spearman_correlation = -1.0;
  write_distance_csv("distance_test.csv", report);
  auto distances = read_csv("distance_test.csv");
  std::remove("distance_test.csv");
  CHECK(distances.header == std::vector<std::string>{"domain", "frechet", "mean_weight"});
  CHECK(distances.rows.size() == 2);
}
