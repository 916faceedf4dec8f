#pragma once

#include "gcsl/numerics.hpp"

namespace gcsl {

enum class Activation { relu, tanh };

struct MlpLayer {
  Mat weights;  // out x in
  Vec bias;     // out
};

// Fully connected feature extractor. The activation applies to every layer
// except the last; an empty layer list is the identity map.
struct MlpParams {
  std::vector<MlpLayer> layers;
  Activation activation = Activation::tanh;

  bool identity() const { return layers.empty(); }
  int input_dim() const { return layers.empty() ? -1 : layers.front().weights.cols; }
  int output_dim() const { return layers.empty() ? -1 : layers.back().weights.rows; }
};

// sizes runs input -> hidden... -> output; fewer than two entries gives the
// identity net. Weights start He-style (fan-in scaled), biases at zero.
MlpParams make_mlp(const std::vector<int>& sizes, Activation act, Rng& rng);

// Everything backward needs: the batch input, per-layer pre-activations and
// per-layer outputs.
struct ForwardTape {
  Mat input;
  std::vector<Mat> preact;
  std::vector<Mat> act;
};

struct MlpGrads {
  std::vector<MlpLayer> layers;  // same shapes as the parameters

  static MlpGrads zeros_like(const MlpParams& net);
  void axpy(double a, const MlpGrads& g);
};

// X is N x input_dim; returns N x output_dim. Tape capture is optional.
Mat mlp_forward(const Mat& x, const MlpParams& net, ForwardTape* tape = nullptr);

// upstream is dLoss/dOutput (N x output_dim, already carrying any 1/N
// factors). Accumulates parameter gradients into *grads when given and
// returns dLoss/dInput. The rectifier derivative at exactly zero is zero.
Mat mlp_backward(const ForwardTape& tape, const MlpParams& net, const Mat& upstream,
                 MlpGrads* grads);

}  // namespace gcsl
