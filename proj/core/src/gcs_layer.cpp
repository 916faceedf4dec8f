#include "gcsl/gcs_layer.hpp"

#include <cmath>

namespace gcsl {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

PosteriorVec softmax(Vec scores) {
  double lse = log_sum_exp(scores);
  for (double& s : scores) s = std::exp(s - lse);
  return scores;
}
}  // namespace

Vec log_mix_weights(const GenerativeParams& gen) {
  double lse = log_sum_exp(gen.mix_logits);
  Vec lw = gen.mix_logits;
  for (double& v : lw) v -= lse;
  return lw;
}

PosteriorVec posterior_disc(const Vec& x, const DiscriminativeParams& disc) {
  require(static_cast<int>(x.size()) == disc.dim(), "posterior_disc: dimension mismatch");
  require(disc.classes() >= 1, "posterior_disc: no classes");
  Vec scores = matvec(disc.weights, x);
  for (int c = 0; c < disc.classes(); ++c) scores[c] += disc.biases[c];
  return softmax(std::move(scores));
}

double joint_log_density(const Vec& x, int cls, const GenerativeParams& gen) {
  require(static_cast<int>(x.size()) == gen.dim(), "joint_log_density: dimension mismatch");
  require(cls >= 0 && cls < gen.classes(), "joint_log_density: class out of range");
  Vec delta(gen.dim());
  for (int j = 0; j < gen.dim(); ++j) delta[j] = x[j] - gen.means(cls, j);
  Vec u = gen.precision.lt_apply(delta);
  double quad = dot(u, u);
  double lpi = log_mix_weights(gen)[cls];
  return lpi - 0.5 * gen.dim() * kLogTwoPi + 0.5 * gen.precision.log_det_precision() -
         0.5 * quad;
}

double marginal_log_density(const Vec& x, const GenerativeParams& gen) {
  require(static_cast<int>(x.size()) == gen.dim(), "marginal_log_density: dimension mismatch");
  Vec joints(gen.classes());
  for (int c = 0; c < gen.classes(); ++c) joints[c] = joint_log_density(x, c, gen);
  return log_sum_exp(joints);
}

PosteriorVec posterior_gen(const Vec& x, const GenerativeParams& gen) {
  require(static_cast<int>(x.size()) == gen.dim(), "posterior_gen: dimension mismatch");
  // Quadratic-in-x pieces cancel across classes (shared precision), leaving
  // scores linear in x: mu_c . Lambda x + log pi_c - mu_c . Lambda mu_c / 2.
  Vec lw = log_mix_weights(gen);
  Vec tx = gen.precision.lt_apply(x);
  Vec scores(gen.classes());
  for (int c = 0; c < gen.classes(); ++c) {
    Vec tm = gen.precision.lt_apply(gen.means.row(c));
    scores[c] = dot(tm, tx) + lw[c] - 0.5 * dot(tm, tm);
  }
  return softmax(std::move(scores));
}

DiscriminativeParams associate(const GenerativeParams& gen) {
  DiscriminativeParams disc;
  disc.weights = Mat(gen.classes(), gen.dim(), 0.0);
  disc.biases = Vec(gen.classes(), 0.0);
  Vec lw = log_mix_weights(gen);
  for (int c = 0; c < gen.classes(); ++c) {
    Vec tm = gen.precision.lt_apply(gen.means.row(c));
    Vec w = gen.precision.l_apply(tm);
    disc.weights.set_row(c, w);
    disc.biases[c] = lw[c] - 0.5 * dot(tm, tm);
  }
  return disc;
}

}  // namespace gcsl
