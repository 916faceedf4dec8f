#include "gcsl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace gcsl {

namespace {

// Fixed stream ids so every run of the same (data, config, seed) triple walks
// identical random sequences.
constexpr uint64_t kInitStream = 1;
constexpr uint64_t kShuffleStream = 2;
constexpr uint64_t kSgldStream = 3;

Mat covariance_about_mean(const Mat& z) {
  const int n = z.rows, d = z.cols;
  Vec mean(d, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) mean[j] += z(i, j) / n;
  Mat cov(d, d, 0.0);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) {
      double da = z(i, a) - mean[a];
      for (int b = 0; b <= a; ++b) cov(a, b) += da * (z(i, b) - mean[b]) / n;
    }
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) cov(a, b) = cov(b, a);
  return cov;
}

std::optional<Mat> invert_spd(const Mat& m) {
  auto chol = CholFactor::from_spd(m);
  if (!chol) return std::nullopt;
  const int d = m.rows;
  Mat inv(d, d, 0.0);
  for (int j = 0; j < d; ++j) {
    Vec e(d, 0.0);
    e[j] = 1.0;
    Vec col = chol->covariance_apply(e);
    for (int i = 0; i < d; ++i) inv(i, j) = col[i];
  }
  // harden symmetry against round-off before refactorizing
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < i; ++j) {
      double v = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = inv(j, i) = v;
    }
  return inv;
}

struct AdamState {
  Vec m, v;
  int t = 0;
};

void apply_update(HybridModel& model, const GradientBundle& grad, const TrainConfig& cfg,
                  AdamState& adam) {
  Vec params = model.to_flat();
  Vec g = grad.to_flat();
  if (cfg.optimizer == OptimizerKind::sgd) {
    for (size_t i = 0; i < params.size(); ++i) params[i] -= cfg.learning_rate * g[i];
  } else {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    if (adam.m.empty()) {
      adam.m.assign(params.size(), 0.0);
      adam.v.assign(params.size(), 0.0);
    }
    adam.t += 1;
    double c1 = 1.0 - std::pow(beta1, adam.t);
    double c2 = 1.0 - std::pow(beta2, adam.t);
    for (size_t i = 0; i < params.size(); ++i) {
      adam.m[i] = beta1 * adam.m[i] + (1.0 - beta1) * g[i];
      adam.v[i] = beta2 * adam.v[i] + (1.0 - beta2) * g[i] * g[i];
      params[i] -= cfg.learning_rate * (adam.m[i] / c1) / (std::sqrt(adam.v[i] / c2) + eps);
    }
  }
  model.from_flat(params);
}

double labeled_accuracy(const HybridModel& model, const Dataset& data) {
  int total = 0, correct = 0;
  Mat z = model.features(data.features);
  for (int i = 0; i < data.size(); ++i) {
    if (!data.labels[i]) continue;
    ++total;
    Vec p = posterior_disc(z.row(i), model.disc);
    int arg = 0;
    for (int c = 1; c < model.classes(); ++c)
      if (p[c] > p[arg]) arg = c;
    if (arg == *data.labels[i]) ++correct;
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / total;
}

// Cross-entropy averaged over the labeled rows of the batch (the standard
// reduction when most rows carry no label) plus the coupling penalty, with
// gradients for the softmax head and (through it) the feature net.
double ce_and_coupling_grad(const Dataset& data, std::span<const int> idx,
                            const HybridModel& model, double lambda,
                            GradientBundle* grad) {
  const int n = static_cast<int>(idx.size());
  const int C = model.classes();

  int labeled = 0;
  for (int t = 0; t < n; ++t)
    if (data.labels[idx[t]]) ++labeled;

  Mat batch(n, data.dim(), 0.0);
  for (int t = 0; t < n; ++t) batch.set_row(t, data.features.row(idx[t]));
  ForwardTape tape;
  Mat z = model.features(batch, &tape);

  double ce = 0.0;
  if (labeled > 0) {
    const double inv_l = 1.0 / labeled;
    Mat upstream(n, model.feature_dim(), 0.0);
    for (int t = 0; t < n; ++t) {
      const auto& label = data.labels[idx[t]];
      if (!label) continue;
      require(*label >= 0 && *label < C, "train: label out of range");
      Vec zr = z.row(t);
      Vec scores = matvec(model.disc.weights, zr);
      for (int c = 0; c < C; ++c) scores[c] += model.disc.biases[c];
      double lse = log_sum_exp(scores);
      ce += (lse - scores[*label]) * inv_l;
      for (int c = 0; c < C; ++c) {
        double gc = (std::exp(scores[c] - lse) - (c == *label ? 1.0 : 0.0)) * inv_l;
        grad->d_biases[c] += gc;
        for (int j = 0; j < model.feature_dim(); ++j) {
          grad->d_weights(c, j) += gc * zr[j];
          upstream(t, j) += gc * model.disc.weights(c, j);
        }
      }
    }
    if (model.net && !model.net->identity())
      mlp_backward(tape, *model.net, upstream, &grad->d_net);
  }

  // Prior spread over the dataset, matching the tractable losses.
  add_coupling_gradient(model, lambda, data.size(), grad);
  return ce;
}

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

}  // namespace

double labeled_conditional_nll_grad(const Dataset& data, std::span<const int> idx,
                                    const HybridModel& model, GradientBundle* grad) {
  const int n = static_cast<int>(idx.size());
  const double inv_n = 1.0 / n;
  const int D = model.feature_dim();
  const auto& gen = model.gen;

  Mat batch(n, data.dim(), 0.0);
  for (int t = 0; t < n; ++t) batch.set_row(t, data.features.row(idx[t]));
  ForwardTape tape;
  Mat z = model.features(batch, &tape);

  const double gauss_const = 0.5 * D * kLogTwoPi - 0.5 * gen.precision.log_det_precision();
  double nll = 0.0;
  Mat scatter(D, D, 0.0);
  Mat upstream(n, D, 0.0);
  for (int t = 0; t < n; ++t) {
    const auto& label = data.labels[idx[t]];
    require(label.has_value(), "train: conditional term needs labeled rows");
    const int c = *label;
    Vec delta(D);
    for (int j = 0; j < D; ++j) delta[j] = z(t, j) - gen.means(c, j);
    Vec u = gen.precision.lt_apply(delta);
    nll += (0.5 * dot(u, u) + gauss_const) * inv_n;

    Vec lam_d = gen.precision.precision_apply(delta);
    for (int j = 0; j < D; ++j) {
      grad->d_means(c, j) -= inv_n * lam_d[j];
      upstream(t, j) = inv_n * lam_d[j];
    }
    for (int i = 0; i < D; ++i)
      for (int j = 0; j <= i; ++j) scatter(i, j) += inv_n * delta[i] * delta[j];
  }

  // d/dL of the quadratic is (scatter) L over the lower triangle; the raw
  // diagonal is log-parameterized, and the log-determinant contributes -1 there.
  Mat l = gen.precision.lower();
  for (int i = 0; i < D; ++i)
    for (int j = i + 1; j < D; ++j) scatter(i, j) = scatter(j, i);
  int k = 0;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j <= i; ++j, ++k) {
      double s = 0.0;
      for (int m = 0; m < D; ++m) s += scatter(i, m) * l(m, j);
      grad->d_chol[k] += (i == j) ? s * l(i, i) - 1.0 : s;
    }

  if (model.net && !model.net->identity())
    mlp_backward(tape, *model.net, upstream, &grad->d_net);
  return nll;
}

HybridModel init_model(const Dataset& train, const TrainConfig& cfg) {
  require(train.size() >= 1, "init_model: empty dataset");
  const int classes = cfg.classes > 0 ? cfg.classes : train.inferred_classes();
  require(classes >= 1, "init_model: class count unknown (no labels and none configured)");

  const bool joint = cfg.mode == TrainMode::joint_ebm;
  Rng init_rng = Rng(cfg.seed).split(kInitStream);

  std::optional<MlpParams> net;
  int feature_dim = train.dim();
  if (joint) {
    require(!cfg.net_layers.empty(), "init_model: joint mode needs net layers");
    std::vector<int> sizes;
    sizes.push_back(train.dim());
    sizes.insert(sizes.end(), cfg.net_layers.begin(), cfg.net_layers.end());
    net = make_mlp(sizes, cfg.activation, init_rng);
    feature_dim = cfg.net_layers.back();
  }

  HybridModel model(classes, feature_dim);
  model.net = std::move(net);

  Mat z = model.features(train.features);

  Vec global_mean(feature_dim, 0.0);
  for (int i = 0; i < z.rows; ++i)
    for (int j = 0; j < feature_dim; ++j) global_mean[j] += z(i, j) / z.rows;

  std::vector<int> counts(classes, 0);
  Mat sums(classes, feature_dim, 0.0);
  for (int i = 0; i < train.size(); ++i) {
    const auto& label = train.labels[i];
    if (!label) continue;
    require(*label >= 0 && *label < classes, "init_model: label outside class count");
    counts[*label] += 1;
    for (int j = 0; j < feature_dim; ++j) sums(*label, j) += z(i, j);
  }
  Rng noise_rng = init_rng.split(7);
  for (int c = 0; c < classes; ++c)
    for (int j = 0; j < feature_dim; ++j)
      model.gen.means(c, j) = counts[c] > 0
                                  ? sums(c, j) / counts[c]
                                  : global_mean[j] + 0.01 * noise_rng.normal();

  if (auto inv = invert_spd(covariance_about_mean(z))) {
    if (auto chol = CholFactor::from_spd(*inv)) model.gen.precision = *chol;
  }

  const int labeled = train.labeled_count();
  const bool every_class_labeled =
      labeled > 0 && std::all_of(counts.begin(), counts.end(), [](int c) { return c > 0; });
  if (every_class_labeled)
    for (int c = 0; c < classes; ++c)
      model.gen.mix_logits[c] = std::log(static_cast<double>(counts[c]) / labeled);

  return model;
}

std::pair<HybridModel, TrainHistory> train(const Dataset& train_data,
                                           const TrainConfig& cfg) {
  require(cfg.epochs >= 0, "train: epochs must be non-negative");
  require(cfg.learning_rate > 0.0, "train: learning rate must be positive");
  require(cfg.lambda >= 0.0, "train: lambda must be non-negative");
  require(cfg.batch_size >= 0, "train: batch size must be non-negative");
  require(cfg.unlabeled_weight >= 0.0, "train: unlabeled weight must be non-negative");
  require(cfg.supervised_warmup >= 0, "train: supervised warmup must be non-negative");
  require(cfg.supervised_warmup == 0 || cfg.mode == TrainMode::joint_ebm,
          "train: supervised warmup applies only to the sampled-marginal mode");

  const bool joint = cfg.mode == TrainMode::joint_ebm;
  HybridModel model = init_model(train_data, cfg);
  const int n = train_data.size();
  const int batch = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);

  Rng shuffle_rng = Rng(cfg.seed).split(kShuffleStream);
  Rng sgld_root = Rng(cfg.seed).split(kSgldStream);

  SgldConfig sgld = cfg.sgld;
  SampleBuffer buffer;
  if (joint) {
    if (sgld.init_low.empty()) sgld.init_low.assign(model.input_dim(), -1.0);
    if (sgld.init_high.empty()) sgld.init_high.assign(model.input_dim(), 1.0);
    buffer = SampleBuffer::make(std::max(sgld.chains, 1), model.input_dim());
  }

  TrainHistory history;
  history.epochs.reserve(cfg.epochs);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  uint64_t batch_counter = 0;
  AdamState adam;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    for (int i = n - 1; i > 0; --i) {
      int j = static_cast<int>(shuffle_rng.uniform() * (i + 1));
      std::swap(order[i], order[std::min(j, i)]);
    }

    LossBreakdown epoch_loss;

    for (int start = 0; start < n; start += batch) {
      const int len = std::min(batch, n - start);
      std::span<const int> idx(order.data() + start, static_cast<size_t>(len));
      GradientBundle grad = GradientBundle::zeros_like(model);
      LossBreakdown part;
      if (!joint) {
        part = semi_supervised_loss(train_data, idx, model, cfg.lambda, &grad);
      } else {
        part.cross_entropy = ce_and_coupling_grad(train_data, idx, model, cfg.lambda, &grad);

        // Generative terms, factorized as in the tractable losses: labeled
        // rows contribute the exact class-conditional feature NLL, unlabeled
        // rows the sampled marginal term. Every row carries weight 1/batch,
        // so the unlabeled mass dominates the feature geometry and the few
        // labels orient it.
        std::vector<int> labeled_idx, unlabeled_idx;
        for (int k : idx)
          (train_data.labels[k] ? labeled_idx : unlabeled_idx).push_back(k);
        double gen_term = 0.0;
        if (epoch < cfg.supervised_warmup) unlabeled_idx.clear();
        if (!unlabeled_idx.empty()) {
          GradientBundle sub = GradientBundle::zeros_like(model);
          double e = ebm_grad(train_data, unlabeled_idx, model, buffer, sgld,
                              sgld_root.split(batch_counter), &sub);
          const double w =
              cfg.unlabeled_weight * static_cast<double>(unlabeled_idx.size()) / len;
          grad.axpy(w, sub);
          gen_term += w * e;
        }
        if (!labeled_idx.empty()) {
          GradientBundle sub = GradientBundle::zeros_like(model);
          double e = labeled_conditional_nll_grad(train_data, labeled_idx, model, &sub);
          const double w = static_cast<double>(labeled_idx.size()) / len;
          grad.axpy(w, sub);
          gen_term += w * e;
        }
        part.generative_nll = gen_term;
        part.coupling_penalty =
            cfg.lambda == 0.0
                ? 0.0
                : -coupling_log_prior(model.disc, model.gen, cfg.lambda) / n;
        part.total = part.cross_entropy + part.generative_nll + part.coupling_penalty;
      }
      ++batch_counter;

      const double w = static_cast<double>(len) / n;
      epoch_loss.cross_entropy += w * part.cross_entropy;
      epoch_loss.generative_nll += w * part.generative_nll;
      epoch_loss.coupling_penalty += w * part.coupling_penalty;
      epoch_loss.total += w * part.total;

      if (!std::isfinite(part.total)) throw TrainingDiverged(epoch);
      apply_update(model, grad, cfg, adam);
      if (!all_finite(model.to_flat())) throw TrainingDiverged(epoch);
    }

    EpochStats stats;
    stats.loss = epoch_loss;
    stats.train_accuracy = labeled_accuracy(model, train_data);
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history.epochs.push_back(stats);
  }
  return {std::move(model), std::move(history)};
}

EvalResult evaluate(const HybridModel& model, const Dataset& data) {
  require(data.fully_labeled(), "evaluate: dataset must be fully labeled");
  require(data.size() >= 1, "evaluate: empty dataset");
  EvalResult res;
  res.posteriors = Mat(data.size(), model.classes(), 0.0);
  res.predicted.resize(data.size());
  Mat z = model.features(data.features);
  int correct = 0;
  for (int i = 0; i < data.size(); ++i) {
    Vec p = posterior_disc(z.row(i), model.disc);
    int arg = 0;
    for (int c = 1; c < model.classes(); ++c)
      if (p[c] > p[arg]) arg = c;  // strict: ties stay on the lower index
    res.posteriors.set_row(i, p);
    res.predicted[i] = arg;
    if (arg == *data.labels[i]) ++correct;
  }
  res.accuracy = static_cast<double>(correct) / data.size();
  return res;
}

GradCheckReport grad_check(const HybridModel& model, const Dataset& data, double lambda,
                           double tolerance) {
  require(!model.net || model.net->identity(), "grad_check: tractable mode only");
  GradientBundle grad = GradientBundle::zeros_like(model);
  semi_supervised_loss(data, {}, model, lambda, &grad);
  Vec analytic = grad.to_flat();

  HybridModel probe = model;
  Vec params = model.to_flat();
  constexpr double h = 1e-5;
  Vec fd(params.size(), 0.0);
  for (size_t i = 0; i < params.size(); ++i) {
    Vec p = params;
    p[i] = params[i] + h;
    probe.from_flat(p);
    double up = semi_supervised_loss(data, {}, probe, lambda).total;
    p[i] = params[i] - h;
    probe.from_flat(p);
    double down = semi_supervised_loss(data, {}, probe, lambda).total;
    fd[i] = (up - down) / (2.0 * h);
  }

  const int C = model.classes(), D = model.feature_dim();
  struct Span {
    const char* name;
    size_t len;
  };
  const Span spans[] = {
      {"weights", static_cast<size_t>(C) * D},
      {"biases", static_cast<size_t>(C)},
      {"mix_logits", static_cast<size_t>(C)},
      {"means", static_cast<size_t>(C) * D},
      {"precision_chol", static_cast<size_t>(CholFactor::packed_size(D))},
  };

  GradCheckReport report;
  report.tolerance = tolerance;
  size_t pos = 0;
  for (const auto& s : spans) {
    GradCheckBlock block;
    block.name = s.name;
    for (size_t i = pos; i < pos + s.len; ++i) {
      double denom = std::max({std::abs(analytic[i]), std::abs(fd[i]), 1e-8});
      block.max_rel_err = std::max(block.max_rel_err, std::abs(analytic[i] - fd[i]) / denom);
    }
    report.worst = std::max(report.worst, block.max_rel_err);
    report.blocks.push_back(std::move(block));
    pos += s.len;
  }
  report.pass = report.worst < tolerance;
  return report;
}

}  // namespace gcsl
