#include <benchmark/benchmark.h>

#include "ldg/backbone.hpp"
#include "ldg/data.hpp"
#include "ldg/discovery.hpp"
#include "ldg/evalkit.hpp"
#include "ldg/model.hpp"
#include "ldg/objectives.hpp"
#include "ldg/rng.hpp"

namespace {

ldg::EncoderConfig bench_config() {
  ldg::EncoderConfig cfg;
  cfg.image_size = 32;
  cfg.patch_size = 4;
  cfg.embed_dim = 128;
  cfg.depth = 6;
  cfg.num_heads = 4;
  return cfg;
}

ldg::TrapSpec bench_spec(int n) {
  ldg::TrapSpec spec;
  spec.rho = 0.5;
  spec.n_train = n;
  spec.n_val = 8;
  spec.n_test_id = 8;
  spec.n_test_ood = 8;
  spec.seed = 11;
  return spec;
}

void BM_ForwardPlain(benchmark::State& state) {
  auto cfg = bench_config();
  auto params = ldg::EncoderParams::init(cfg, 1);
  auto data = ldg::generate_trap(bench_spec(32));
  auto images = ldg::image_pointers(data.train);
  for (auto _ : state) {
    auto out = ldg::forward_plain(cfg, params, images);
    benchmark::DoNotOptimize(out.logits.sum());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(images.size()));
}
BENCHMARK(BM_ForwardPlain)->Unit(benchmark::kMillisecond);

void BM_ErmStep(benchmark::State& state) {
  auto cfg = bench_config();
  ldg::Model model = ldg::Model::build(cfg, ldg::Toggles::none(), 1, 1, 3);
  auto data = ldg::generate_trap(bench_spec(32));
  std::vector<const ldg::LabeledImage*> batch;
  for (const auto& s : data.train.samples) batch.push_back(&s);
  for (auto _ : state) {
    ldg::Model grads = ldg::Model::zeros_like(model);
    double loss = ldg::erm_loss(model, batch, &grads, 7);
    benchmark::DoNotOptimize(loss);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(batch.size()));
}
BENCHMARK(BM_ErmStep)->Unit(benchmark::kMillisecond);

void BM_TotalLossStep(benchmark::State& state) {
  auto cfg = bench_config();
  ldg::Model model = ldg::Model::build(cfg, ldg::Toggles::full(), 4, 4, 3);
  auto data = ldg::generate_trap(bench_spec(32));
  std::vector<const ldg::LabeledImage*> batch;
  std::vector<int> domains;
  for (const auto& s : data.train.samples) {
    batch.push_back(&s);
    domains.push_back(static_cast<int>(domains.size()) % 4);
  }
  ldg::ObjectiveSettings settings;
  settings.toggles = ldg::Toggles::full();
  auto rng = ldg::make_rng(5, ldg::Stream::mixup, 1, 1);
  auto mix = ldg::mixup_batch(batch, domains, 4, 0.3, rng);
  for (auto _ : state) {
    ldg::Model grads = ldg::Model::zeros_like(model);
    auto parts = ldg::total_loss_batch(model, batch, domains, mix, settings, &grads, 7);
    benchmark::DoNotOptimize(parts.total);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(batch.size()));
}
BENCHMARK(BM_TotalLossStep)->Unit(benchmark::kMillisecond);

void BM_KMeans(benchmark::State& state) {
  auto rng = std::mt19937_64(42);
  std::normal_distribution<double> dist(0.0, 1.0);
  ldg::Matrix features(1024, 128);
  for (Eigen::Index r = 0; r < features.rows(); ++r)
    for (Eigen::Index c = 0; c < features.cols(); ++c) features(r, c) = dist(rng);
  for (auto _ : state) {
    auto km = ldg::kmeans(features, 4, 17);
    benchmark::DoNotOptimize(km.inertia);
  }
}
BENCHMARK(BM_KMeans)->Unit(benchmark::kMillisecond);

void BM_Frechet(benchmark::State& state) {
  auto rng = std::mt19937_64(42);
  std::normal_distribution<double> dist(0.0, 1.0);
  ldg::Matrix a(512, 64), b(512, 64);
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      a(r, c) = dist(rng);
      b(r, c) = dist(rng) + 0.5;
    }
  for (auto _ : state) {
    double d = ldg::frechet_distance(a, b);
    benchmark::DoNotOptimize(d);
  }
}
BENCHMARK(BM_Frechet)->Unit(benchmark::kMillisecond);

void BM_GenerateTrap(benchmark::State& state) {
  auto spec = bench_spec(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto data = ldg::generate_trap(spec);
    benchmark::DoNotOptimize(data.train.samples.size());
  }
}
BENCHMARK(BM_GenerateTrap)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
