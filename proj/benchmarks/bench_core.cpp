// Microbenchmarks for the hot paths: posterior evaluation, marginal density,
// the semi-supervised gradient, a single Langevin step, and ECE binning.
#include <benchmark/benchmark.h>

#include "gcsl/calibration.hpp"
#include "gcsl/ebm_sgld.hpp"
#include "gcsl/gcs_layer.hpp"
#include "gcsl/model.hpp"
#include "gcsl/objectives.hpp"

namespace {

gcsl::HybridModel make_model(int classes, int dim, uint64_t seed) {
  gcsl::HybridModel model(classes, dim);
  gcsl::Rng rng(seed);
  for (int c = 0; c < classes; ++c) {
    for (int j = 0; j < dim; ++j) {
      model.disc.weights(c, j) = rng.uniform(-1.0, 1.0);
      model.gen.means(c, j) = rng.uniform(-2.0, 2.0);
    }
    model.disc.biases[c] = rng.uniform(-0.5, 0.5);
    model.gen.mix_logits[c] = rng.uniform(-1.0, 1.0);
  }
  for (double& v : model.gen.precision.raw()) v = rng.uniform(-0.3, 0.3);
  return model;
}

gcsl::Dataset make_data(int n, int dim, int classes, uint64_t seed) {
  gcsl::Dataset data;
  data.features = gcsl::Mat(n, dim);
  data.labels.resize(n);
  gcsl::Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) data.features(i, j) = rng.normal();
    data.labels[i] = (i % 2 == 0) ? std::optional<int>(i % classes) : std::nullopt;
  }
  return data;
}

void bm_posterior_disc(benchmark::State& state) {
  auto model = make_model(7, 16, 1);
  gcsl::Vec x(16, 0.25);
  for (auto _ : state) benchmark::DoNotOptimize(gcsl::posterior_disc(x, model.disc));
}
BENCHMARK(bm_posterior_disc);

void bm_marginal_log_density(benchmark::State& state) {
  auto model = make_model(7, 16, 2);
  gcsl::Vec x(16, 0.25);
  for (auto _ : state) benchmark::DoNotOptimize(gcsl::marginal_log_density(x, model.gen));
}
BENCHMARK(bm_marginal_log_density);

void bm_semi_supervised_gradient(benchmark::State& state) {
  auto model = make_model(3, 8, 3);
  auto data = make_data(256, 8, 3, 4);
  gcsl::GradientBundle grad = gcsl::GradientBundle::zeros_like(model);
  for (auto _ : state) {
    auto loss = gcsl::semi_supervised_loss(data, {}, model, 10.0, &grad);
    benchmark::DoNotOptimize(loss.total);
  }
}
BENCHMARK(bm_semi_supervised_gradient);

void bm_sgld_step(benchmark::State& state) {
  auto model = make_model(3, 8, 5);
  gcsl::SgldConfig cfg;
  cfg.steps = 1;
  cfg.step_size = 0.01;
  cfg.noise_std = 0.1;
  gcsl::Rng rng(6);
  gcsl::Vec x(8, 0.5);
  for (auto _ : state) {
    gcsl::Rng chain_rng = rng.split(state.iterations());
    auto traj = gcsl::sgld_chain(x, model, cfg, chain_rng);
    benchmark::DoNotOptimize(traj);
  }
}
BENCHMARK(bm_sgld_step);

void bm_ece(benchmark::State& state) {
  std::vector<gcsl::PredictionRecord> recs;
  gcsl::Rng rng(7);
  for (int i = 0; i < 4096; ++i) {
    double conf = 0.5 + 0.5 * rng.uniform();
    int pred = static_cast<int>(rng.uniform() * 3);
    int label = rng.uniform() < conf ? pred : (pred + 1) % 3;
    recs.push_back({conf, pred, label});
  }
  for (auto _ : state) benchmark::DoNotOptimize(gcsl::ece(recs, 10));
}
BENCHMARK(bm_ece);

}  // namespace

BENCHMARK_MAIN();
