#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "gcsl/gcs_layer.hpp"
#include "test_util.hpp"

using namespace gcsl;

TEST_CASE("posterior_disc frozen example") {
  DiscriminativeParams disc;
  disc.weights = Mat(2, 2, 0.0);
  disc.weights(0, 0) = 1.0;  // w1 = [1, 0], w2 = [0, 0]
  disc.biases = Vec{0.0, 0.0};
  Vec p = posterior_disc(Vec{std::log(3.0), 0.0}, disc);
  CHECK(p[0] == doctest::Approx(0.75).epsilon(1e-13));
  CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("posterior_disc is a probability vector") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    int C = 1 + static_cast<int>(rng.uniform() * 6);
    int D = 1 + static_cast<int>(rng.uniform() * 5);
    auto model = testutil::random_model(rng, C, D);
    Vec x(D);
    for (double& v : x) v = rng.uniform(-30.0, 30.0);  // stress the shift
    Vec p = posterior_disc(x, model.disc);
    double sum = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("posterior_disc single class and contract") {
  DiscriminativeParams disc;
  disc.weights = Mat(1, 2, 0.3);
  disc.biases = Vec{-4.0};
  Vec p = posterior_disc(Vec{1.0, 2.0}, disc);
  CHECK(p[0] == 1.0);
  CHECK_THROWS_AS(posterior_disc(Vec{1.0}, disc), std::invalid_argument);
}

TEST_CASE("joint_log_density standard normal value") {
  GenerativeParams gen(1, 1);  // pi = 1, mu = 0, Lambda = 1
  double v = joint_log_density(Vec{0.0}, 0, gen);
  CHECK(v == doctest::Approx(-0.9189385332046727).epsilon(1e-14));
  // at x = 1: subtract 1/2
  CHECK(joint_log_density(Vec{1.0}, 0, gen) ==
        doctest::Approx(-1.4189385332046727).epsilon(1e-14));
}

TEST_CASE("joint_log_density matches a dense-formula oracle") {
  Rng rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    int C = 1 + static_cast<int>(rng.uniform() * 5);
    int D = 1 + static_cast<int>(rng.uniform() * 5);
    auto gen = testutil::random_gen(rng, C, D);
    Vec x(D);
    for (double& v : x) v = rng.uniform(-3.0, 3.0);
    int c = static_cast<int>(rng.uniform() * C);

    // oracle: dense precision, explicit quadratic form and determinant
    Mat lam = gen.precision.precision();
    Vec delta(D);
    for (int j = 0; j < D; ++j) delta[j] = x[j] - gen.means(c, j);
    double quad = dot(delta, matvec(lam, delta));
    double logdet = gen.precision.log_det_precision();
    double lpi = gen.mix_logits[c] - log_sum_exp(gen.mix_logits);
    double expected =
        lpi - 0.5 * D * std::log(2.0 * 3.14159265358979323846) + 0.5 * logdet - 0.5 * quad;

    CHECK(joint_log_density(x, c, gen) == doctest::Approx(expected).epsilon(1e-11));
  }
}

TEST_CASE("joint_log_density contract") {
  GenerativeParams gen(2, 2);
  CHECK_THROWS_AS(joint_log_density(Vec{0.0}, 0, gen), std::invalid_argument);
  CHECK_THROWS_AS(joint_log_density(Vec{0.0, 0.0}, 2, gen), std::invalid_argument);
  CHECK_THROWS_AS(joint_log_density(Vec{0.0, 0.0}, -1, gen), std::invalid_argument);
}

TEST_CASE("marginal_log_density reduces to the joint for one class") {
  Rng rng(41);
  auto gen = testutil::random_gen(rng, 1, 3);
  Vec x{0.5, -1.0, 2.0};
  CHECK(marginal_log_density(x, gen) ==
        doctest::Approx(joint_log_density(x, 0, gen)).epsilon(1e-14));
}

TEST_CASE("marginal_log_density never falls below any joint") {
  Rng rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    auto gen = testutil::random_gen(rng, 3, 2);
    Vec x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    double m = marginal_log_density(x, gen);
    for (int c = 0; c < 3; ++c) CHECK(m >= joint_log_density(x, c, gen) - 1e-12);
  }
}

TEST_CASE("associate frozen example: identity covariance") {
  GenerativeParams gen(2, 2);  // Lambda = I, uniform mixture
  gen.means(0, 0) = 1.0;       // mu1 = [1, 0], mu2 = [0, 0]
  DiscriminativeParams disc = associate(gen);
  CHECK(disc.weights(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(disc.weights(0, 1) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(disc.biases[0] == doctest::Approx(-1.1931471805599453).epsilon(1e-13));
  CHECK(disc.biases[1] == doctest::Approx(std::log(0.5)).epsilon(1e-13));
}

TEST_CASE("associate frozen example: the synthetic-task parameters") {
  GenerativeParams gen(2, 2);
  // Sigma = 0.5 I  =>  Lambda = 2 I  =>  L = sqrt(2) I
  gen.precision.raw_at(0, 0) = 0.5 * std::log(2.0);
  gen.precision.raw_at(1, 1) = 0.5 * std::log(2.0);
  gen.means(0, 1) = -0.5;
  gen.means(1, 1) = 0.5;
  DiscriminativeParams disc = associate(gen);
  CHECK(disc.weights(0, 0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(disc.weights(0, 1) == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(disc.biases[0] == doctest::Approx(-0.9431471805599453).epsilon(1e-13));
  CHECK(disc.weights(1, 1) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(disc.biases[1] == doctest::Approx(-0.9431471805599453).epsilon(1e-13));
}

TEST_CASE("association identity: generative posterior equals softmax on associated parameters") {
  Rng rng(47);
  for (int trial = 0; trial < 300; ++trial) {
    int C = 2 + static_cast<int>(rng.uniform() * 5);
    int D = 1 + static_cast<int>(rng.uniform() * 9);
    auto gen = testutil::random_gen(rng, C, D);
    DiscriminativeParams disc = associate(gen);
    Vec x(D);
    for (double& v : x) v = rng.uniform(-3.0, 3.0);
    Vec pg = posterior_gen(x, gen);
    Vec pd = posterior_disc(x, disc);
    for (int c = 0; c < C; ++c) CHECK(std::abs(pg[c] - pd[c]) < 1e-12);
  }
}

TEST_CASE("posterior_gen agrees with joint-density normalization") {
  Rng rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    int C = 1 + static_cast<int>(rng.uniform() * 5);
    int D = 1 + static_cast<int>(rng.uniform() * 4);
    auto gen = testutil::random_gen(rng, C, D);
    Vec x(D);
    for (double& v : x) v = rng.uniform(-3.0, 3.0);
    double marginal = marginal_log_density(x, gen);
    Vec p = posterior_gen(x, gen);
    for (int c = 0; c < C; ++c) {
      double expected = std::exp(joint_log_density(x, c, gen) - marginal);
      CHECK(p[c] == doctest::Approx(expected).epsilon(1e-10));
    }
  }
}
