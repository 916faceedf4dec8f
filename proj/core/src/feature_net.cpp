#include "gcsl/feature_net.hpp"

#include <cmath>

namespace gcsl {

MlpParams make_mlp(const std::vector<int>& sizes, Activation act, Rng& rng) {
  MlpParams net;
  net.activation = act;
  if (sizes.size() < 2) return net;
  for (int s : sizes) require(s >= 1, "make_mlp: layer sizes must be positive");
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    int in = sizes[l], out = sizes[l + 1];
    MlpLayer layer;
    layer.weights = Mat(out, in, 0.0);
    layer.bias = Vec(out, 0.0);
    double scale = std::sqrt(2.0 / in);
    for (int i = 0; i < out; ++i)
      for (int j = 0; j < in; ++j) layer.weights(i, j) = scale * rng.normal();
    net.layers.push_back(std::move(layer));
  }
  return net;
}

MlpGrads MlpGrads::zeros_like(const MlpParams& net) {
  MlpGrads g;
  for (const auto& layer : net.layers) {
    MlpLayer z;
    z.weights = Mat(layer.weights.rows, layer.weights.cols, 0.0);
    z.bias = Vec(layer.bias.size(), 0.0);
    g.layers.push_back(std::move(z));
  }
  return g;
}

void MlpGrads::axpy(double a, const MlpGrads& g) {
  require(layers.size() == g.layers.size(), "MlpGrads::axpy: layer count mismatch");
  for (size_t l = 0; l < layers.size(); ++l) {
    for (size_t i = 0; i < layers[l].weights.a.size(); ++i)
      layers[l].weights.a[i] += a * g.layers[l].weights.a[i];
    for (size_t i = 0; i < layers[l].bias.size(); ++i)
      layers[l].bias[i] += a * g.layers[l].bias[i];
  }
}

namespace {

double activate(double h, Activation act) {
  return act == Activation::relu ? (h > 0.0 ? h : 0.0) : std::tanh(h);
}

// Derivative in terms of pre-activation h and output a (= activate(h)).
double activate_grad(double h, double a, Activation act) {
  return act == Activation::relu ? (h > 0.0 ? 1.0 : 0.0) : 1.0 - a * a;
}

}  // namespace

Mat mlp_forward(const Mat& x, const MlpParams& net, ForwardTape* tape) {
  if (tape) *tape = ForwardTape{};
  if (tape) tape->input = x;
  if (net.identity()) return x;
  require(x.cols == net.input_dim(), "mlp_forward: input dimension mismatch");

  Mat cur = x;
  const int depth = static_cast<int>(net.layers.size());
  for (int l = 0; l < depth; ++l) {
    const MlpLayer& layer = net.layers[l];
    Mat h(cur.rows, layer.weights.rows, 0.0);
    for (int n = 0; n < cur.rows; ++n)
      for (int i = 0; i < layer.weights.rows; ++i) {
        double s = layer.bias[i];
        for (int j = 0; j < layer.weights.cols; ++j) s += layer.weights(i, j) * cur(n, j);
        h(n, i) = s;
      }
    Mat out = h;
    if (l + 1 < depth)
      for (double& v : out.a) v = activate(v, net.activation);
    if (tape) {
      tape->preact.push_back(h);
      tape->act.push_back(out);
    }
    cur = std::move(out);
  }
  return cur;
}

Mat mlp_backward(const ForwardTape& tape, const MlpParams& net, const Mat& upstream,
                 MlpGrads* grads) {
  if (net.identity()) return upstream;
  const int depth = static_cast<int>(net.layers.size());
  require(static_cast<int>(tape.preact.size()) == depth, "mlp_backward: tape mismatch");
  require(upstream.rows == tape.input.rows && upstream.cols == net.output_dim(),
          "mlp_backward: upstream shape mismatch");
  if (grads) require(static_cast<int>(grads->layers.size()) == depth,
                     "mlp_backward: grads shape mismatch");

  Mat g = upstream;  // dL/d(output of layer l), activation already applied
  for (int l = depth - 1; l >= 0; --l) {
    const MlpLayer& layer = net.layers[l];
    if (l + 1 < depth) {
      const Mat& h = tape.preact[l];
      const Mat& a = tape.act[l];
      for (size_t i = 0; i < g.a.size(); ++i)
        g.a[i] *= activate_grad(h.a[i], a.a[i], net.activation);
    }
    const Mat& in = (l == 0) ? tape.input : tape.act[l - 1];
    if (grads) {
      MlpLayer& gl = grads->layers[l];
      for (int n = 0; n < g.rows; ++n)
        for (int i = 0; i < layer.weights.rows; ++i) {
          double gi = g(n, i);
          gl.bias[i] += gi;
          for (int j = 0; j < layer.weights.cols; ++j) gl.weights(i, j) += gi * in(n, j);
        }
    }
    Mat prev(g.rows, layer.weights.cols, 0.0);
    for (int n = 0; n < g.rows; ++n)
      for (int i = 0; i < layer.weights.rows; ++i) {
        double gi = g(n, i);
        for (int j = 0; j < layer.weights.cols; ++j) prev(n, j) += gi * layer.weights(i, j);
      }
    g = std::move(prev);
  }
  return g;
}

}  // namespace gcsl
