#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "gcsl/trainer.hpp"
#include "test_util.hpp"

using namespace gcsl;

namespace {

Dataset two_blob_train(int n, uint64_t seed) {
  return gen_two_gaussians(n, 10, seed).first;
}

TrainConfig tractable_cfg() {
  TrainConfig cfg;
  cfg.mode = TrainMode::standalone_tractable;
  cfg.epochs = 200;
  cfg.learning_rate = 0.05;
  cfg.lambda = 10.0;
  cfg.seed = 5;
  return cfg;
}

TrainConfig joint_cfg() {
  TrainConfig cfg;
  cfg.mode = TrainMode::joint_ebm;
  cfg.net_layers = {8, 2};
  cfg.activation = Activation::tanh;
  cfg.optimizer = OptimizerKind::adaptive_moment;
  cfg.learning_rate = 0.01;
  cfg.epochs = 5;
  cfg.batch_size = 0;
  cfg.lambda = 1.0;
  cfg.seed = 7;
  cfg.sgld.steps = 10;
  cfg.sgld.step_size = 0.05;
  cfg.sgld.noise_std = 0.05;
  cfg.sgld.chains = 16;
  cfg.sgld.init_low = {-2.0, -2.0};
  cfg.sgld.init_high = {2.0, 2.0};
  return cfg;
}

}  // namespace

TEST_CASE("epochs zero returns the initialized model unchanged") {
  Dataset train_set = two_blob_train(40, 3);
  TrainConfig cfg = tractable_cfg();
  cfg.epochs = 0;
  auto [model, hist] = train(train_set, cfg);
  CHECK(hist.epochs.empty());
  HybridModel fresh = init_model(train_set, cfg);
  CHECK(model.to_flat() == fresh.to_flat());
}

TEST_CASE("init_model starts at labeled class means with pooled spread") {
  Dataset train_set = two_blob_train(60, 11);
  TrainConfig cfg = tractable_cfg();
  HybridModel m = init_model(train_set, cfg);

  // per-class labeled means
  Vec mean0(2, 0.0), mean1(2, 0.0);
  int n0 = 0, n1 = 0;
  for (int i = 0; i < train_set.size(); ++i) {
    for (int j = 0; j < 2; ++j) {
      if (*train_set.labels[i] == 0) mean0[j] += train_set.features(i, j);
      else mean1[j] += train_set.features(i, j);
    }
    (*train_set.labels[i] == 0 ? n0 : n1)++;
  }
  for (int j = 0; j < 2; ++j) {
    CHECK(m.gen.means(0, j) == doctest::Approx(mean0[j] / n0).epsilon(1e-12));
    CHECK(m.gen.means(1, j) == doctest::Approx(mean1[j] / n1).epsilon(1e-12));
  }
  // softmax head starts flat; mixture logits at the label log-frequencies
  for (double v : m.disc.weights.a) CHECK(v == 0.0);
  for (double v : m.disc.biases) CHECK(v == 0.0);
  CHECK(m.gen.mix_logits[0] ==
        doctest::Approx(std::log(static_cast<double>(n0) / train_set.size()))
            .epsilon(1e-12));
  CHECK(!m.net.has_value());
}

TEST_CASE("training is bit-exact across reruns and seed-sensitive") {
  Dataset train_set = two_blob_train(50, 21);
  TrainConfig cfg = tractable_cfg();
  cfg.epochs = 50;
  cfg.batch_size = 16;

  auto [ma, ha] = train(train_set, cfg);
  auto [mb, hb] = train(train_set, cfg);
  CHECK(ma.to_flat() == mb.to_flat());
  REQUIRE(ha.epochs.size() == hb.epochs.size());
  for (size_t e = 0; e < ha.epochs.size(); ++e)
    CHECK(ha.epochs[e].loss.total == hb.epochs[e].loss.total);

  cfg.seed = 6;
  auto [mc, hc] = train(train_set, cfg);
  (void)hc;
  CHECK(ma.to_flat() != mc.to_flat());
}

TEST_CASE("joint mode trains deterministically too") {
  Dataset train_set = two_blob_train(30, 33);
  Dataset masked = apply_mask(train_set, MaskRule{MaskKind::extremal_y, 5, 0});
  TrainConfig cfg = joint_cfg();
  auto [ma, ha] = train(masked, cfg);
  auto [mb, hb] = train(masked, cfg);
  (void)ha;
  (void)hb;
  CHECK(ma.to_flat() == mb.to_flat());
  CHECK(ma.net.has_value());
  CHECK(ma.feature_dim() == 2);
  CHECK(ma.input_dim() == 2);
}

TEST_CASE("history loss decreases on an easy supervised problem") {
  Dataset train_set = two_blob_train(80, 41);
  TrainConfig cfg = tractable_cfg();
  cfg.epochs = 300;
  cfg.learning_rate = 0.05;
  auto [model, hist] = train(train_set, cfg);
  (void)model;
  REQUIRE(hist.epochs.size() == 300);
  double first = hist.epochs.front().loss.total;
  double last = hist.epochs.back().loss.total;
  CHECK(last < first);
  // training accuracy is tracked per epoch over labeled rows
  CHECK(hist.epochs.back().train_accuracy > 0.9);
}

TEST_CASE("fully supervised lambda-zero training recovers class means") {
  Dataset train_set = two_blob_train(400, 55);
  TrainConfig cfg = tractable_cfg();
  cfg.lambda = 0.0;
  cfg.epochs = 1500;
  cfg.learning_rate = 0.05;
  auto [model, hist] = train(train_set, cfg);
  (void)hist;
  CHECK(std::abs(model.gen.means(0, 0) - 0.0) < 0.1);
  CHECK(std::abs(model.gen.means(0, 1) + 0.5) < 0.1);
  CHECK(std::abs(model.gen.means(1, 0) - 0.0) < 0.1);
  CHECK(std::abs(model.gen.means(1, 1) - 0.5) < 0.1);
}

TEST_CASE("labeled conditional feature loss matches central differences") {
  Rng rng(71);
  for (int trial = 0; trial < 6; ++trial) {
    std::vector<int> sizes = {3, 5, 2};
    HybridModel model(2, 2);
    model.net = make_mlp(sizes, Activation::tanh, rng);
    for (int c = 0; c < 2; ++c)
      for (int j = 0; j < 2; ++j) model.gen.means(c, j) = rng.uniform(-1.0, 1.0);
    for (double& v : model.gen.precision.raw()) v = rng.uniform(-0.3, 0.3);

    Dataset d;
    d.features = Mat(6, 3, 0.0);
    d.labels.resize(6);
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 3; ++j) d.features(i, j) = rng.uniform(-1.5, 1.5);
      d.labels[i] = i % 2;
    }
    std::vector<int> idx(6);
    std::iota(idx.begin(), idx.end(), 0);

    GradientBundle g = GradientBundle::zeros_like(model);
    labeled_conditional_nll_grad(d, idx, model, &g);

    HybridModel probe = model;
    Vec fd = testutil::central_diff(
        [&](const Vec& p) {
          probe.from_flat(p);
          GradientBundle sink = GradientBundle::zeros_like(probe);
          return labeled_conditional_nll_grad(d, idx, probe, &sink);
        },
        model.to_flat());
    CHECK(testutil::max_rel_err(g.to_flat(), fd, 1e-6) < 1e-5);
  }
}

TEST_CASE("evaluate returns posterior_disc rows and breaks ties low") {
  Rng rng(61);
  HybridModel model = testutil::random_model(rng, 3, 2);
  Dataset d;
  d.features = Mat(4, 2, 0.0);
  for (double& v : d.features.a) v = rng.uniform(-1.0, 1.0);
  d.labels = {0, 1, 2, 0};

  EvalResult res = evaluate(model, d);
  REQUIRE(res.posteriors.rows == 4);
  for (int i = 0; i < 4; ++i) {
    Vec expect = posterior_disc(d.features.row(i), model.disc);
    for (int c = 0; c < 3; ++c)
      CHECK(res.posteriors(i, c) == doctest::Approx(expect[c]).epsilon(1e-15));
  }

  // a zero model scores every class equally: prediction must be class 0
  HybridModel flat(3, 2);
  EvalResult tied = evaluate(flat, d);
  for (int p : tied.predicted) CHECK(p == 0);
  CHECK(tied.accuracy == doctest::Approx(0.5));  // rows 0 and 3 carry label 0

  Dataset unlabeled = d;
  unlabeled.labels[1] = std::nullopt;
  CHECK_THROWS_AS(evaluate(model, unlabeled), std::invalid_argument);
}

TEST_CASE("grad_check reports per-block errors and passes on exact gradients") {
  Rng rng(91);
  HybridModel model = testutil::random_model(rng, 2, 2);
  Dataset d = two_blob_train(12, 77);
  d.labels[3] = std::nullopt;  // exercise the semi-supervised path

  for (double lambda : {0.0, 10.0}) {
    GradCheckReport rep = grad_check(model, d, lambda);
    CHECK(rep.pass);
    CHECK(rep.worst < rep.tolerance);
    CHECK(rep.blocks.size() >= 4);
    double worst_seen = 0.0;
    for (const auto& b : rep.blocks) worst_seen = std::max(worst_seen, b.max_rel_err);
    CHECK(rep.worst == doctest::Approx(worst_seen).epsilon(1e-15));
  }
}

TEST_CASE("training diverges loudly instead of returning garbage") {
  Dataset train_set = two_blob_train(30, 99);
  TrainConfig cfg = tractable_cfg();
  cfg.learning_rate = 1e9;  // guaranteed overshoot into non-finite territory
  cfg.epochs = 50;
  CHECK_THROWS_AS(train(train_set, cfg), TrainingDiverged);
}

TEST_CASE("config contracts are enforced") {
  Dataset train_set = two_blob_train(10, 1);
  TrainConfig cfg = tractable_cfg();
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(train(train_set, cfg), std::invalid_argument);
  cfg = tractable_cfg();
  cfg.lambda = -1.0;
  CHECK_THROWS_AS(train(train_set, cfg), std::invalid_argument);
  cfg = tractable_cfg();
  cfg.mode = TrainMode::joint_ebm;  // no net layers given
  cfg.net_layers = {};
  CHECK_THROWS_AS(train(train_set, cfg), std::invalid_argument);
  cfg = tractable_cfg();
  cfg.unlabeled_weight = -0.5;
  CHECK_THROWS_AS(train(train_set, cfg), std::invalid_argument);

  Dataset empty;
  empty.features = Mat(0, 2, 0.0);
  CHECK_THROWS_AS(train(empty, tractable_cfg()), std::invalid_argument);
}

TEST_CASE("checkpoints round-trip bit-exactly, net included") {
  Dataset train_set = two_blob_train(30, 13);
  Dataset masked = apply_mask(train_set, MaskRule{MaskKind::extremal_y, 5, 0});
  auto [model, hist] = train(masked, joint_cfg());
  (void)hist;

  auto path = std::filesystem::temp_directory_path() / "gcsl_ckpt_test.json";
  save_checkpoint(model, path.string(), "{\"note\":\"unit\"}");
  auto [back, echo] = load_checkpoint(path.string());
  CHECK(back.to_flat() == model.to_flat());
  CHECK(back.net.has_value() == model.net.has_value());
  CHECK(back.net->activation == model.net->activation);
  CHECK(echo.find("unit") != std::string::npos);
  std::filesystem::remove(path);

  // tractable model (no net) round-trips too
  auto [flat_model, h2] = train(train_set, tractable_cfg());
  (void)h2;
  save_checkpoint(flat_model, path.string());
  auto [flat_back, echo2] = load_checkpoint(path.string());
  (void)echo2;
  CHECK(flat_back.to_flat() == flat_model.to_flat());
  CHECK(!flat_back.net.has_value());
  std::filesystem::remove(path);

  CHECK_THROWS(load_checkpoint("/nonexistent/ckpt.json"));
}
