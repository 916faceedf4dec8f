#pragma once

#include "gcsl/numerics.hpp"

namespace gcsl {

// Softmax head: score_c(x) = w_c . x + b_c.
struct DiscriminativeParams {
  Mat weights;  // C x F
  Vec biases;   // C

  int classes() const { return weights.rows; }
  int dim() const { return weights.cols; }
};

// Gaussian head: mixture weights via softmax(mix_logits), one mean per class,
// one shared precision for all classes.
struct GenerativeParams {
  Vec mix_logits;        // C
  Mat means;             // C x F
  CholFactor precision;  // factor of the shared precision Lambda

  GenerativeParams(int classes, int dim)
      : mix_logits(classes, 0.0), means(classes, dim, 0.0), precision(dim) {}

  int classes() const { return means.rows; }
  int dim() const { return means.cols; }
};

// Probability vector over classes: entries in [0,1], summing to 1.
using PosteriorVec = Vec;

Vec log_mix_weights(const GenerativeParams& gen);  // log softmax(mix_logits)

PosteriorVec posterior_disc(const Vec& x, const DiscriminativeParams& disc);

// log pi_c + log N(x; mu_c, Lambda^-1); cls is a 0-based class index.
double joint_log_density(const Vec& x, int cls, const GenerativeParams& gen);

double marginal_log_density(const Vec& x, const GenerativeParams& gen);

PosteriorVec posterior_gen(const Vec& x, const GenerativeParams& gen);

// Maps the Gaussian head onto softmax parameters reproducing its posterior:
// w_c = Lambda mu_c, b_c = log pi_c - mu_c . Lambda mu_c / 2.
DiscriminativeParams associate(const GenerativeParams& gen);

}  // namespace gcsl
