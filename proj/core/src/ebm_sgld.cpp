#include "gcsl/ebm_sgld.hpp"

#include <cmath>

namespace gcsl {

SampleBuffer SampleBuffer::make(int chains, int dim) {
  require(chains >= 1 && dim >= 1, "SampleBuffer: chains and dim must be positive");
  SampleBuffer b;
  b.states = Mat(chains, dim, 0.0);
  b.live.assign(chains, false);
  return b;
}

namespace {

struct EnergyEval {
  Vec z;                   // features
  Vec omega;               // softmax(-E_c), one-hot on cls when conditional
  std::vector<Vec> delta;  // z - mu_c
  Vec energies;
  double total;
};

EnergyEval eval_energies(const Vec& z, const HybridModel& model, int cls) {
  const auto& gen = model.gen;
  const int C = gen.classes();
  EnergyEval e;
  e.z = z;
  e.delta.assign(C, Vec(gen.dim(), 0.0));
  e.energies.assign(C, 0.0);
  for (int c = 0; c < C; ++c) {
    for (int j = 0; j < gen.dim(); ++j) e.delta[c][j] = z[j] - gen.means(c, j);
    Vec u = gen.precision.lt_apply(e.delta[c]);
    e.energies[c] = 0.5 * dot(u, u);
  }
  e.omega.assign(C, 0.0);
  if (cls >= 0) {
    e.omega[cls] = 1.0;
    e.total = e.energies[cls];
  } else {
    Vec neg(C);
    for (int c = 0; c < C; ++c) neg[c] = -e.energies[c];
    double lse = log_sum_exp(neg);
    for (int c = 0; c < C; ++c) e.omega[c] = std::exp(neg[c] - lse);
    e.total = -lse;
  }
  return e;
}

Vec feature_of(const Vec& x, const HybridModel& model, ForwardTape* tape) {
  if (!model.net || model.net->identity()) {
    if (tape) {
      tape->input = Mat(1, static_cast<int>(x.size()), 0.0);
      tape->input.set_row(0, x);
    }
    return x;
  }
  Mat row(1, static_cast<int>(x.size()), 0.0);
  row.set_row(0, x);
  return mlp_forward(row, *model.net, tape).row(0);
}

void check_class(int cls, const HybridModel& model) {
  require(cls < model.classes(), "energy: class out of range");
}

}  // namespace

double class_energy(const Vec& x, int cls, const HybridModel& model) {
  require(cls >= 0, "class_energy: class must be non-negative");
  check_class(cls, model);
  Vec z = feature_of(x, model, nullptr);
  require(static_cast<int>(z.size()) == model.feature_dim(), "class_energy: dim mismatch");
  return eval_energies(z, model, cls).total;
}

double total_energy(const Vec& x, const HybridModel& model) {
  Vec z = feature_of(x, model, nullptr);
  require(static_cast<int>(z.size()) == model.feature_dim(), "total_energy: dim mismatch");
  return eval_energies(z, model, -1).total;
}

Vec energy_grad_x(const Vec& x, const HybridModel& model, int cls) {
  if (cls >= 0) check_class(cls, model);
  ForwardTape tape;
  Vec z = feature_of(x, model, &tape);
  EnergyEval e = eval_energies(z, model, cls);

  // dE/dz = sum_c omega_c Lambda delta_c = Lambda (sum_c omega_c delta_c)
  Vec mix(model.feature_dim(), 0.0);
  for (int c = 0; c < model.classes(); ++c)
    if (e.omega[c] != 0.0)
      for (int j = 0; j < model.feature_dim(); ++j) mix[j] += e.omega[c] * e.delta[c][j];
  Vec dz = model.gen.precision.precision_apply(mix);

  if (!model.net || model.net->identity()) return dz;
  Mat upstream(1, static_cast<int>(dz.size()), 0.0);
  upstream.set_row(0, dz);
  return mlp_backward(tape, *model.net, upstream, nullptr).row(0);
}

Mat sgld_chain(const Vec& x0, const HybridModel& model, const SgldConfig& cfg, Rng& rng,
               int cls) {
  require(cfg.steps >= 0, "sgld_chain: steps must be non-negative");
  require(cfg.step_size >= 0.0 && cfg.noise_std >= 0.0,
          "sgld_chain: step_size and noise_std must be non-negative");
  const int dim = static_cast<int>(x0.size());
  require(dim == model.input_dim(), "sgld_chain: dimension mismatch");

  Mat traj(cfg.steps + 1, dim, 0.0);
  traj.set_row(0, x0);
  Vec x = x0;
  for (int s = 1; s <= cfg.steps; ++s) {
    Vec g = energy_grad_x(x, model, cls);
    for (int j = 0; j < dim; ++j) {
      x[j] -= 0.5 * cfg.step_size * g[j];
      if (cfg.noise_std > 0.0) x[j] += cfg.noise_std * rng.normal();
    }
    if (!all_finite(x)) throw SamplerDivergence(s);
    traj.set_row(s, x);
  }
  return traj;
}

namespace {

// Accumulates coef * dE(x)/d(Gaussian-head and net params) into *grad.
void add_energy_param_grads(const Vec& x, int cls, const HybridModel& model, double coef,
                            GradientBundle* grad) {
  ForwardTape tape;
  Vec z = feature_of(x, model, &tape);
  EnergyEval e = eval_energies(z, model, cls);
  const auto& gen = model.gen;
  const int C = gen.classes();
  const int D = gen.dim();

  Mat scatter(D, D, 0.0);
  Vec mix(D, 0.0);
  for (int c = 0; c < C; ++c) {
    if (e.omega[c] == 0.0) continue;
    Vec lam_d = gen.precision.precision_apply(e.delta[c]);
    for (int j = 0; j < D; ++j) {
      grad->d_means(c, j) += coef * (-e.omega[c] * lam_d[j]);
      mix[j] += e.omega[c] * e.delta[c][j];
    }
    for (int i = 0; i < D; ++i)
      for (int j = 0; j <= i; ++j)
        scatter(i, j) += e.omega[c] * e.delta[c][i] * e.delta[c][j];
  }

  // dE/dL = (sum_c omega_c delta delta^T) L over the lower triangle; no
  // log-determinant piece (the energy has none).
  Mat l = gen.precision.lower();
  for (int i = 0; i < D; ++i)
    for (int j = i + 1; j < D; ++j) scatter(i, j) = scatter(j, i);
  int k = 0;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j <= i; ++j, ++k) {
      double s = 0.0;
      for (int m = 0; m < D; ++m) s += scatter(i, m) * l(m, j);
      grad->d_chol[k] += coef * (i == j ? s * l(i, i) : s);
    }

  if (model.net && !model.net->identity()) {
    Vec dz = gen.precision.precision_apply(mix);
    Mat upstream(1, D, 0.0);
    for (int j = 0; j < D; ++j) upstream(0, j) = coef * dz[j];
    mlp_backward(tape, *model.net, upstream, &grad->d_net);
  }
}

// Continues (or restarts) the chain in the given buffer slot and returns the
// new state. `stream` must be unique to this draw for reproducibility. A
// restart begins at *data_start when the config asks for data starts and the
// caller has a batch row to offer, otherwise inside the uniform box.
Vec advance_chain(SampleBuffer& buffer, int slot, const HybridModel& model,
                  const SgldConfig& cfg, Rng& stream, int cls,
                  const Vec* data_start = nullptr) {
  Vec x0(model.input_dim());
  bool restart = !buffer.live[slot] || stream.uniform() < cfg.reinit_prob;
  if (restart) {
    if (cfg.chain_init == ChainInit::data && data_start != nullptr) {
      x0 = *data_start;
    } else {
      for (int j = 0; j < model.input_dim(); ++j)
        x0[j] = stream.uniform(cfg.init_low[j], cfg.init_high[j]);
    }
  } else {
    x0 = buffer.states.row(slot);
  }
  Mat traj = sgld_chain(x0, model, cfg, stream, cls);
  Vec sample = traj.row(traj.rows - 1);
  buffer.states.set_row(slot, sample);
  buffer.live[slot] = true;
  return sample;
}

void check_sgld_bounds(const SgldConfig& cfg, const HybridModel& model, const char* who) {
  require(static_cast<int>(cfg.init_low.size()) == model.input_dim() &&
              static_cast<int>(cfg.init_high.size()) == model.input_dim(),
          std::string(who) + ": init bounds must match input dimension");
}

}  // namespace

double ebm_grad(const Dataset& data, std::span<const int> idx, const HybridModel& model,
                SampleBuffer& buffer, const SgldConfig& cfg, const Rng& rng,
                GradientBundle* grad) {
  require(model.net.has_value(), "ebm_grad: model must carry a feature net");
  require(grad != nullptr, "ebm_grad: gradient sink required");
  require(buffer.states.cols == model.input_dim(), "ebm_grad: buffer dimension mismatch");
  check_sgld_bounds(cfg, model, "ebm_grad");

  std::vector<int> all;
  if (idx.empty()) {
    all.resize(data.size());
    for (int i = 0; i < data.size(); ++i) all[i] = i;
    idx = all;
  }
  const int n = static_cast<int>(idx.size());
  require(n >= 1, "ebm_grad: empty batch");
  const double inv_n = 1.0 / n;
  const int chains = buffer.states.rows;

  double data_energy = 0.0;
  for (int t = 0; t < n; ++t) {
    const Vec x = data.features.row(idx[t]);
    data_energy += total_energy(x, model) * inv_n;
    add_energy_param_grads(x, -1, model, +inv_n, grad);

    Rng stream = rng.split(static_cast<uint64_t>(t));
    Vec sample = advance_chain(buffer, t % chains, model, cfg, stream, -1, &x);
    add_energy_param_grads(sample, -1, model, -inv_n, grad);
  }
  return data_energy;
}

Mat generate(const HybridModel& model, int n, int cls, const SgldConfig& cfg,
             const Rng& rng) {
  require(n >= 0, "generate: negative count");
  if (cls >= 0) check_class(cls, model);
  const int dim = model.input_dim();
  require(static_cast<int>(cfg.init_low.size()) == dim &&
              static_cast<int>(cfg.init_high.size()) == dim,
          "generate: init bounds must match input dimension");
  Mat out(n, dim, 0.0);
  for (int i = 0; i < n; ++i) {
    Rng stream = rng.split(static_cast<uint64_t>(i));
    Vec x0(dim);
    for (int j = 0; j < dim; ++j) x0[j] = stream.uniform(cfg.init_low[j], cfg.init_high[j]);
    Mat traj = sgld_chain(x0, model, cfg, stream, cls);
    out.set_row(i, traj.row(traj.rows - 1));
  }
  return out;
}

}  // namespace gcsl
