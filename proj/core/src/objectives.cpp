#include "gcsl/objectives.hpp"

#include <cmath>
#include <numeric>

namespace gcsl {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

Vec softmax_from_logits(const Vec& logits) {
  double lse = log_sum_exp(logits);
  Vec p = logits;
  for (double& v : p) v = std::exp(v - lse);
  return p;
}

std::vector<int> all_indices(int n) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

// Chain rule from dF/dL (lower triangle, true entries) to the raw packed
// parameters: off-diagonal passes through, diagonal picks up L_ii.
void add_chol_grad_from_lower(const Mat& dl, const CholFactor& chol, double coef,
                              std::vector<double>* out) {
  const int n = chol.dim();
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j, ++k)
      (*out)[k] += coef * (i == j ? dl(i, j) * chol.entry(i, i) : dl(i, j));
}

}  // namespace

double coupling_residual(const DiscriminativeParams& disc, const GenerativeParams& gen) {
  require(disc.classes() == gen.classes() && disc.dim() == gen.dim(),
          "coupling_residual: head shapes disagree");
  DiscriminativeParams target = associate(gen);
  double s = 0.0;
  for (int c = 0; c < disc.classes(); ++c) {
    for (int j = 0; j < disc.dim(); ++j) {
      double r = disc.weights(c, j) - target.weights(c, j);
      s += r * r;
    }
    double rb = disc.biases[c] - target.biases[c];
    s += rb * rb;
  }
  return s;
}

double coupling_log_prior(const DiscriminativeParams& disc, const GenerativeParams& gen,
                          double lambda) {
  require(lambda >= 0.0, "coupling_log_prior: lambda must be non-negative");
  if (lambda == 0.0) return 0.0;
  return -0.5 * lambda * coupling_residual(disc, gen);
}

void add_coupling_gradient(const HybridModel& model, double lambda, int n,
                           GradientBundle* grad) {
  require(n >= 1, "add_coupling_gradient: empty batch");
  if (lambda == 0.0) return;
  const auto& disc = model.disc;
  const auto& gen = model.gen;
  const int C = gen.classes();
  const int D = gen.dim();
  const double kappa = lambda / n;

  DiscriminativeParams target = associate(gen);
  Vec pi = softmax_from_logits(gen.mix_logits);

  double rb_sum = 0.0;
  Mat b_accum(D, D, 0.0);  // sum_c [ r_b mu mu^T - (r_w mu^T + mu r_w^T) ]
  for (int c = 0; c < C; ++c) {
    Vec mu = gen.means.row(c);
    Vec rw(D);
    for (int j = 0; j < D; ++j) rw[j] = disc.weights(c, j) - target.weights(c, j);
    double rb = disc.biases[c] - target.biases[c];
    rb_sum += rb;

    for (int j = 0; j < D; ++j) grad->d_weights(c, j) += kappa * rw[j];
    grad->d_biases[c] += kappa * rb;

    // d/d mu_c of the penalty: -Lambda r_w + r_b Lambda mu
    Vec lam_rw = gen.precision.precision_apply(rw);
    Vec lam_mu = gen.precision.precision_apply(mu);
    for (int j = 0; j < D; ++j)
      grad->d_means(c, j) += kappa * (-lam_rw[j] + rb * lam_mu[j]);

    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j)
        b_accum(i, j) += rb * mu[i] * mu[j] - (rw[i] * mu[j] + mu[i] * rw[j]);
  }

  // d/d logits: beta_c depends on log pi_c
  for (int k = 0; k < C; ++k) {
    double rb_k = disc.biases[k] - target.biases[k];
    grad->d_mix_logits[k] += kappa * (pi[k] * rb_sum - rb_k);
  }

  // d/dL of the penalty: (B L) over the lower triangle
  Mat l = gen.precision.lower();
  Mat bl(D, D, 0.0);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (int k = 0; k < D; ++k) s += b_accum(i, k) * l(k, j);
      bl(i, j) = s;
    }
  add_chol_grad_from_lower(bl, gen.precision, kappa, &grad->d_chol);
}

namespace {

struct BatchAccum {
  double ce = 0.0;
  double gen_nll = 0.0;
  // Responsibility-weighted scatter sum_n sum_c r_nc delta delta^T, plus the
  // per-class responsibility-weighted delta sums for the mean gradients.
  Mat scatter;
  Mat delta_sums;  // C x D
  Vec resp_sums;   // C
};

LossBreakdown hybrid_loss_impl(const Dataset& data, std::span<const int> idx,
                               const HybridModel& model, double lambda,
                               GradientBundle* grad, bool require_labeled) {
  require(!model.net || model.net->identity(),
          "objectives: tractable regime requires no feature net");
  const auto& disc = model.disc;
  const auto& gen = model.gen;
  require(data.dim() == gen.dim(), "objectives: data dimension mismatch");
  require(disc.classes() == gen.classes() && disc.dim() == gen.dim(),
          "objectives: head shapes disagree");

  std::vector<int> all;
  if (idx.empty()) {
    all = all_indices(data.size());
    idx = all;
  }
  const int n = static_cast<int>(idx.size());
  require(n >= 1, "objectives: empty batch");

  // Data terms average over the batch; the prior is spread over the whole
  // dataset so that summing batch gradients over an epoch reproduces the
  // full-batch gradient and λ keeps one meaning at every batch size.
  const int prior_n = data.size();

  const int C = gen.classes();
  const int D = gen.dim();
  const double inv_n = 1.0 / n;
  const Vec log_pi = log_mix_weights(gen);
  const Vec pi = softmax_from_logits(gen.mix_logits);
  const double log_det = gen.precision.log_det_precision();
  const double gauss_const = -0.5 * D * kLogTwoPi + 0.5 * log_det;

  BatchAccum acc;
  acc.scatter = Mat(D, D, 0.0);
  acc.delta_sums = Mat(C, D, 0.0);
  acc.resp_sums = Vec(C, 0.0);

  Vec joint(C), resp(C);
  std::vector<Vec> deltas(C, Vec(D));
  for (int t = 0; t < n; ++t) {
    const int row = idx[t];
    require(row >= 0 && row < data.size(), "objectives: index out of range");
    const Vec x = data.features.row(row);
    const auto& label = data.labels[row];
    if (require_labeled) require(label.has_value(), "supervised loss: unlabeled sample");
    if (label) require(*label >= 0 && *label < C, "objectives: label out of range");

    for (int c = 0; c < C; ++c) {
      for (int j = 0; j < D; ++j) deltas[c][j] = x[j] - gen.means(c, j);
      Vec u = gen.precision.lt_apply(deltas[c]);
      joint[c] = log_pi[c] + gauss_const - 0.5 * dot(u, u);
    }

    if (label) {
      const int y = *label;
      // cross-entropy on the softmax head
      Vec scores = matvec(disc.weights, x);
      for (int c = 0; c < C; ++c) scores[c] += disc.biases[c];
      double lse = log_sum_exp(scores);
      acc.ce += (lse - scores[y]) * inv_n;
      if (grad)
        for (int c = 0; c < C; ++c) {
          double g = (std::exp(scores[c] - lse) - (c == y ? 1.0 : 0.0)) * inv_n;
          grad->d_biases[c] += g;
          for (int j = 0; j < D; ++j) grad->d_weights(c, j) += g * x[j];
        }
      // joint NLL; the generative gradient sees a one-hot responsibility
      acc.gen_nll += -joint[y] * inv_n;
      std::fill(resp.begin(), resp.end(), 0.0);
      resp[y] = 1.0;
    } else {
      double marginal = log_sum_exp(joint);
      acc.gen_nll += -marginal * inv_n;
      for (int c = 0; c < C; ++c) resp[c] = std::exp(joint[c] - marginal);
    }

    if (grad) {
      for (int c = 0; c < C; ++c) {
        grad->d_mix_logits[c] += (pi[c] - resp[c]) * inv_n;
        if (resp[c] == 0.0) continue;
        acc.resp_sums[c] += resp[c];
        for (int j = 0; j < D; ++j) acc.delta_sums(c, j) += resp[c] * deltas[c][j];
        for (int i = 0; i < D; ++i)
          for (int j = 0; j <= i; ++j)
            acc.scatter(i, j) += resp[c] * deltas[c][i] * deltas[c][j];
      }
    }
  }

  if (grad) {
    for (int c = 0; c < C; ++c) {
      Vec ds = acc.delta_sums.row(c);
      Vec lam_ds = gen.precision.precision_apply(ds);
      for (int j = 0; j < D; ++j) grad->d_means(c, j) += -lam_ds[j] * inv_n;
    }
    // d/dL of the mean NLL: (scatter/n) L with -1 on the raw diagonal from
    // the log-determinant (every sample contributes responsibility mass 1).
    Mat l = gen.precision.lower();
    for (int i = 0; i < D; ++i)
      for (int j = i + 1; j < D; ++j) acc.scatter(i, j) = acc.scatter(j, i);
    Mat sl(D, D, 0.0);
    for (int i = 0; i < D; ++i)
      for (int j = 0; j <= i; ++j) {
        double s = 0.0;
        for (int k = 0; k < D; ++k) s += acc.scatter(i, k) * l(k, j);
        sl(i, j) = s * inv_n;
      }
    add_chol_grad_from_lower(sl, gen.precision, 1.0, &grad->d_chol);
    int k = 0;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j <= i; ++j, ++k)
        if (i == j) grad->d_chol[k] -= 1.0;

    add_coupling_gradient(model, lambda, prior_n, grad);
  }

  LossBreakdown out;
  out.cross_entropy = acc.ce;
  out.generative_nll = acc.gen_nll;
  out.coupling_penalty =
      lambda == 0.0 ? 0.0 : -coupling_log_prior(disc, gen, lambda) / prior_n;
  out.total = out.cross_entropy + out.generative_nll + out.coupling_penalty;
  return out;
}

}  // namespace

LossBreakdown supervised_hybrid_loss(const Dataset& data, std::span<const int> idx,
                                     const HybridModel& model, double lambda,
                                     GradientBundle* grad) {
  return hybrid_loss_impl(data, idx, model, lambda, grad, /*require_labeled=*/true);
}

LossBreakdown semi_supervised_loss(const Dataset& data, std::span<const int> idx,
                                   const HybridModel& model, double lambda,
                                   GradientBundle* grad) {
  return hybrid_loss_impl(data, idx, model, lambda, grad, /*require_labeled=*/false);
}

}  // namespace gcsl
