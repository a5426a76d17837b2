#include "doctest.h"

#include <Eigen/Dense>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "ldg/data.hpp"
#include "ldg/png_io.hpp"
#include "ldg/rng.hpp"

#include "oracles.hpp"

using namespace ldg;
namespace fs = std::filesystem;

namespace {

TrapSpec small_spec(double rho, std::uint64_t seed, int n_train = 64) {
  TrapSpec spec;
  spec.rho = rho;
  spec.n_train = n_train;
  spec.n_val = 16;
  spec.n_test_id = 16;
  spec.n_test_ood = 16;
  spec.seed = seed;
  return spec;
}

// empirical phi coefficient between artifact presence and class
double artifact_class_correlation(const Dataset& ds) {
  double n = static_cast<double>(ds.size());
  double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
  for (const auto& s : ds.samples) {
    bool art = s.artifact_label.value_or(0) > 0;
    bool cls = s.class_label == 1;
    if (art && cls) n11++;
    else if (art) n10++;
    else if (cls) n01++;
    else n00++;
  }
  double num = n11 * n00 - n10 * n01;
  double den = std::sqrt((n11 + n10) * (n01 + n00) * (n11 + n01) * (n10 + n00));
  return den > 0 ? num / den : 0.0;
  (void)n;
}

}  // namespace

TEST_CASE("trap spec validation") {
  TrapSpec spec = small_spec(0.5, 1);
  CHECK_NOTHROW(spec.validate());
  spec.rho = 1.5;
  CHECK_THROWS_AS(spec.validate(), argument_error);
  spec = small_spec(0.5, 1);
  spec.artifacts.clear();
  CHECK_THROWS_AS(spec.validate(), argument_error);
  spec = small_spec(0.5, 1);
  spec.n_val = 0;
  CHECK_THROWS_AS(spec.validate(), argument_error);
}

TEST_CASE("rho=0 leaves artifact and class independent") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    auto data = generate_trap(small_spec(0.0, seed, 200));
    CHECK(std::abs(artifact_class_correlation(data.train)) <= 0.05);
  }
}

TEST_CASE("rho=1 is deterministic and reversed out of distribution") {
  auto data = generate_trap(small_spec(1.0, 4, 100));
  for (const auto& s : data.train.samples) {
    bool art = s.artifact_label.value_or(0) > 0;
    CHECK(art == (s.class_label == 1));
  }
  for (const auto& s : data.val.samples) {
    bool art = s.artifact_label.value_or(0) > 0;
    CHECK(art == (s.class_label == 1));
  }
  for (const auto& s : data.test_ood.samples) {
    bool art = s.artifact_label.value_or(0) > 0;
    CHECK(art == (s.class_label == 0));  // reversed
  }
}

TEST_CASE("rho=0.5 contingency matches the target joint (chi-square)") {
  auto data = generate_trap(small_spec(0.5, 7, 2000));
  // cells: (class0,art),(class0,clean),(class1,art),(class1,clean)
  std::vector<long> observed(4, 0);
  for (const auto& s : data.train.samples) {
    bool art = s.artifact_label.value_or(0) > 0;
    int cell = (s.class_label == 1 ? 2 : 0) + (art ? 0 : 1);
    observed[cell]++;
  }
  // p(art|class1) = 0.75, p(art|class0) = 0.25, classes balanced
  std::vector<double> expected = {0.5 * 0.25, 0.5 * 0.75, 0.5 * 0.75, 0.5 * 0.25};
  double stat = oracle::chi_square(observed, expected, data.train.size());
  CHECK(stat < 7.81);  // chi-square 95% critical value, 3 dof
}

TEST_CASE("generation is a pure function of the spec") {
  auto a = generate_trap(small_spec(0.7, 11, 32));
  auto b = generate_trap(small_spec(0.7, 11, 32));
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train.samples[i].sample_id == b.train.samples[i].sample_id);
    CHECK(a.train.samples[i].class_label == b.train.samples[i].class_label);
    CHECK(a.train.samples[i].image.pixels == b.train.samples[i].image.pixels);
  }
  auto c = generate_trap(small_spec(0.7, 12, 32));
  bool any_diff = false;
  for (std::size_t i = 0; i < a.train.size() && !any_diff; ++i)
    any_diff = a.train.samples[i].image.pixels != c.train.samples[i].image.pixels;
  CHECK(any_diff);
}

TEST_CASE("sample ids are unique and disjoint across splits") {
  auto data = generate_trap(small_spec(0.3, 13, 48));
  std::set<std::string> ids;
  for (const Dataset* ds : {&data.train, &data.val, &data.test_id, &data.test_ood})
    for (const auto& s : ds->samples) CHECK(ids.insert(s.sample_id).second);
  CHECK(ids.size() == 48 + 16 + 16 + 16);
}

TEST_CASE("unsatisfiable rho/count combinations are rejected") {
  TrapSpec spec = small_spec(0.5, 1);
  spec.n_train = 2;  // one sample per class: p=0.75 rounds to a full cell
  CHECK_THROWS_AS(generate_trap(spec), argument_error);
}

TEST_CASE("planted artifact is linearly separable from raw pixels") {
  TrapSpec spec = small_spec(0.0, 17, 200);
  spec.image_size = 16;
  auto data = generate_trap(spec);

  const int dim = 16 * 16 * 3;
  const int n = static_cast<int>(data.train.size());
  Matrix x(n, dim + 1);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) x(i, j) = data.train.samples[i].image.pixels[j];
    x(i, dim) = 1.0;
    y(i) = data.train.samples[i].artifact_label.value_or(0) > 0 ? 1.0 : 0.0;
  }
  int n_fit = n / 2;
  Matrix xf = x.topRows(n_fit);
  Vector yf = y.head(n_fit);
  Matrix gram = xf.transpose() * xf + 1e-3 * Matrix::Identity(dim + 1, dim + 1);
  Vector w = gram.ldlt().solve(xf.transpose() * yf);

  int correct = 0;
  for (int i = n_fit; i < n; ++i) {
    double pred = x.row(i) * w;
    if ((pred > 0.5) == (y(i) > 0.5)) correct++;
  }
  double acc = static_cast<double>(correct) / (n - n_fit);
  CHECK(acc > 0.95);
}

TEST_CASE("uniform style mode balances artifact kinds within classes") {
  TrapSpec spec = small_spec(0.0, 19, 80);
  spec.style_mode = StyleMode::uniform;
  spec.artifacts = {ArtifactKind::corner_patch, ArtifactKind::stripe_ruler,
                    ArtifactKind::color_tint, ArtifactKind::curve_hair};
  auto data = generate_trap(spec);
  std::map<std::pair<int, int>, int> counts;  // (class, kind) -> count
  for (const auto& s : data.train.samples) {
    CHECK(s.artifact_label.value_or(0) > 0);  // every sample carries a style
    counts[{s.class_label, *s.artifact_label}]++;
  }
  for (const auto& [key, count] : counts) CHECK(count == 10);  // 80 / (2*4)
}

TEST_CASE("split_by_domain covers the dataset disjointly") {
  auto data = generate_trap(small_spec(0.0, 23, 16));
  std::map<std::string, int> domains;
  int i = 0;
  for (const auto& s : data.train.samples) domains[s.sample_id] = i++ % 2;

  auto split = split_by_domain(data.train, domains);
  CHECK(split.size() == 2);
  CHECK(split[0].size() == 8);
  CHECK(split[1].size() == 8);

  std::set<std::string> seen;
  std::size_t total = 0;
  for (const auto& [dom, subset] : split) {
    total += subset.size();
    for (const auto& s : subset.samples) CHECK(seen.insert(s.sample_id).second);
  }
  CHECK(total == data.train.size());

  // single-domain map gives back a single subset of full size
  for (auto& [id, d] : domains) d = 0;
  auto single = split_by_domain(data.train, domains);
  CHECK(single.size() == 1);
  CHECK(single[0].size() == data.train.size());

  domains.erase(data.train.samples[0].sample_id);
  CHECK_THROWS_AS(split_by_domain(data.train, domains), consistency_error);
}

TEST_CASE("png io round trip at 8-bit precision") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(12, 9);
  for (double& p : img.pixels) p = u(rng);
  write_png("png_test.png", img);
  Image back = read_png("png_test.png");
  std::remove("png_test.png");
  REQUIRE(back.height == 12);
  REQUIRE(back.width == 9);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    CHECK(std::abs(back.pixels[i] - img.pixels[i]) <= 0.5 / 255.0 + 1e-12);
}

TEST_CASE("dataset directory save and load round trip") {
  auto data = generate_trap(small_spec(1.0, 31, 8));
  fs::path dir = "trap_dir_test";
  fs::remove_all(dir);
  save_trap_datasets(data, small_spec(1.0, 31, 8), dir.string());
  CHECK(fs::exists(dir / "trapspec.json"));
  CHECK(fs::exists(dir / "manifest.csv"));

  auto loaded = load_trap_datasets(dir.string());
  REQUIRE(loaded.train.size() == data.train.size());
  CHECK(loaded.test_ood.size() == data.test_ood.size());
  for (std::size_t i = 0; i < loaded.train.size(); ++i) {
    CHECK(loaded.train.samples[i].sample_id == data.train.samples[i].sample_id);
    CHECK(loaded.train.samples[i].class_label == data.train.samples[i].class_label);
    CHECK(loaded.train.samples[i].artifact_label == data.train.samples[i].artifact_label);
  }
  fs::remove_all(dir);
}

TEST_CASE("image folder loader honors the manifest contract") {
  fs::path dir = "folder_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 3; ++i) {
    Image img(8, 8);
    for (double& p : img.pixels) p = u(rng);
    write_png((dir / ("img" + std::to_string(i) + ".png")).string(), img);
  }

  {
    std::ofstream manifest(dir / "manifest.csv");
    manifest << "path,class,given_domain\n";
    manifest << "img0.png,0,2\nimg1.png,1,1\nimg2.png,0,\n";
  }
  auto ds = load_image_folder(dir.string(), (dir / "manifest.csv").string());
  REQUIRE(ds.size() == 3);
  CHECK(ds.samples[0].given_domain == 2);
  CHECK(!ds.samples[2].given_domain.has_value());
  CHECK(ds.samples[1].class_label == 1);

  {
    std::ofstream manifest(dir / "plain.csv");
    manifest << "path,class\nimg0.png,0\n";
  }
  auto plain = load_image_folder(dir.string(), (dir / "plain.csv").string());
  CHECK(!plain.samples[0].given_domain.has_value());

  // resize hook
  auto resized = load_image_folder(dir.string(), (dir / "plain.csv").string(), 16);
  CHECK(resized.samples[0].image.height == 16);

  {
    std::ofstream manifest(dir / "missing.csv");
    manifest << "path,class\nnope.png,0\n";
  }
  CHECK_THROWS_WITH_AS(
      load_image_folder(dir.string(), (dir / "missing.csv").string()),
      doctest::Contains("nope.png"), data_error);

  {
    std::ofstream garbage(dir / "bad.png");
    garbage << "not a png at all";
  }
  {
    std::ofstream manifest(dir / "corrupt.csv");
    manifest << "path,class\nbad.png,0\n";
  }
  CHECK_THROWS_WITH_AS(load_image_folder(dir.string(), (dir / "corrupt.csv").string()),
                       doctest::Contains("bad.png"), data_error);

  {
    std::ofstream manifest(dir / "badclass.csv");
    manifest << "path,class\nimg0.png,-3\n";
  }
  CHECK_THROWS_AS(load_image_folder(dir.string(), (dir / "badclass.csv").string()),
                  data_error);
  fs::remove_all(dir);
}

TEST_CASE("augmentation keeps range and is rng-deterministic") {
  auto data = generate_trap(small_spec(0.5, 41, 8));
  const Image& img = data.train.samples[0].image;

  std::mt19937_64 r1(7), r2(7), r3(8);
  Image a = augment_image(img, r1);
  Image b = augment_image(img, r2);
  Image c = augment_image(img, r3);
  CHECK(a.pixels == b.pixels);
  CHECK(a.pixels != c.pixels);
  CHECK(a.height == img.height);
  for (double p : a.pixels) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
}
