#include "gcsl/model.hpp"

namespace gcsl {

Mat HybridModel::features(const Mat& x, ForwardTape* tape) const {
  if (net) return mlp_forward(x, *net, tape);
  if (tape) tape->input = x;
  return x;
}

Vec HybridModel::features(const Vec& x) const {
  if (!net || net->identity()) return x;
  Mat row(1, static_cast<int>(x.size()), 0.0);
  row.set_row(0, x);
  return mlp_forward(row, *net).row(0);
}

int HybridModel::param_count() const {
  int n = static_cast<int>(disc.weights.a.size() + disc.biases.size() +
                           gen.mix_logits.size() + gen.means.a.size() +
                           gen.precision.raw().size());
  if (net)
    for (const auto& layer : net->layers)
      n += static_cast<int>(layer.weights.a.size() + layer.bias.size());
  return n;
}

Vec HybridModel::to_flat() const {
  Vec flat;
  flat.reserve(param_count());
  auto push = [&flat](const std::vector<double>& v) {
    flat.insert(flat.end(), v.begin(), v.end());
  };
  push(disc.weights.a);
  push(disc.biases);
  push(gen.mix_logits);
  push(gen.means.a);
  push(gen.precision.raw());
  if (net)
    for (const auto& layer : net->layers) {
      push(layer.weights.a);
      push(layer.bias);
    }
  return flat;
}

void HybridModel::from_flat(const Vec& flat) {
  require(static_cast<int>(flat.size()) == param_count(), "from_flat: size mismatch");
  size_t pos = 0;
  auto pull = [&flat, &pos](std::vector<double>& v) {
    std::copy(flat.begin() + pos, flat.begin() + pos + v.size(), v.begin());
    pos += v.size();
  };
  pull(disc.weights.a);
  pull(disc.biases);
  pull(gen.mix_logits);
  pull(gen.means.a);
  pull(gen.precision.raw());
  if (net)
    for (auto& layer : net->layers) {
      pull(layer.weights.a);
      pull(layer.bias);
    }
}

GradientBundle GradientBundle::zeros_like(const HybridModel& model) {
  GradientBundle g;
  g.d_weights = Mat(model.disc.weights.rows, model.disc.weights.cols, 0.0);
  g.d_biases = Vec(model.disc.biases.size(), 0.0);
  g.d_mix_logits = Vec(model.gen.mix_logits.size(), 0.0);
  g.d_means = Mat(model.gen.means.rows, model.gen.means.cols, 0.0);
  g.d_chol.assign(model.gen.precision.raw().size(), 0.0);
  if (model.net) g.d_net = MlpGrads::zeros_like(*model.net);
  return g;
}

void GradientBundle::axpy(double a, const GradientBundle& g) {
  for (size_t i = 0; i < d_weights.a.size(); ++i) d_weights.a[i] += a * g.d_weights.a[i];
  for (size_t i = 0; i < d_biases.size(); ++i) d_biases[i] += a * g.d_biases[i];
  for (size_t i = 0; i < d_mix_logits.size(); ++i) d_mix_logits[i] += a * g.d_mix_logits[i];
  for (size_t i = 0; i < d_means.a.size(); ++i) d_means.a[i] += a * g.d_means.a[i];
  for (size_t i = 0; i < d_chol.size(); ++i) d_chol[i] += a * g.d_chol[i];
  if (!d_net.layers.empty()) d_net.axpy(a, g.d_net);
}

void GradientBundle::scale(double a) {
  for (double& v : d_weights.a) v *= a;
  for (double& v : d_biases) v *= a;
  for (double& v : d_mix_logits) v *= a;
  for (double& v : d_means.a) v *= a;
  for (double& v : d_chol) v *= a;
  for (auto& layer : d_net.layers) {
    for (double& v : layer.weights.a) v *= a;
    for (double& v : layer.bias) v *= a;
  }
}

Vec GradientBundle::to_flat() const {
  Vec flat;
  auto push = [&flat](const std::vector<double>& v) {
    flat.insert(flat.end(), v.begin(), v.end());
  };
  push(d_weights.a);
  push(d_biases);
  push(d_mix_logits);
  push(d_means.a);
  push(d_chol);
  for (const auto& layer : d_net.layers) {
    push(layer.weights.a);
    push(layer.bias);
  }
  return flat;
}

}  // namespace gcsl
