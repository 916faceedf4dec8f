#pragma once

#include <optional>

#include "gcsl/feature_net.hpp"
#include "gcsl/gcs_layer.hpp"

namespace gcsl {

// Softmax head + Gaussian head over a shared feature space, with an optional
// feature net mapping inputs into that space. Absent net means features are
// the inputs themselves.
struct HybridModel {
  DiscriminativeParams disc;
  GenerativeParams gen;
  std::optional<MlpParams> net;

  HybridModel(int classes, int feature_dim)
      : gen(classes, feature_dim) {
    disc.weights = Mat(classes, feature_dim, 0.0);
    disc.biases = Vec(classes, 0.0);
  }

  int classes() const { return gen.classes(); }
  int feature_dim() const { return gen.dim(); }
  int input_dim() const {
    return (net && !net->identity()) ? net->input_dim() : feature_dim();
  }

  Mat features(const Mat& x, ForwardTape* tape = nullptr) const;
  Vec features(const Vec& x) const;

  // Flat layout: disc.weights, disc.biases, mix_logits, means, precision raw,
  // then net layer weights/biases in order. Gradients use the same layout.
  int param_count() const;
  Vec to_flat() const;
  void from_flat(const Vec& flat);
};

// Gradient mirror of HybridModel: same shapes, raw (log-diagonal) space for
// the precision factor block.
struct GradientBundle {
  Mat d_weights;
  Vec d_biases;
  Vec d_mix_logits;
  Mat d_means;
  std::vector<double> d_chol;
  MlpGrads d_net;

  static GradientBundle zeros_like(const HybridModel& model);
  void axpy(double a, const GradientBundle& g);
  void scale(double a);
  Vec to_flat() const;
};

}  // namespace gcsl
