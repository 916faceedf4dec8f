#pragma once

#include <span>
#include <stdexcept>

#include "gcsl/data_io.hpp"
#include "gcsl/model.hpp"

namespace gcsl {

// Where a restarted chain begins. uniform_box draws from [init_low, init_high];
// data starts the chain at the batch row it contrasts against (contrastive
// divergence), which keeps the negative term anchored to the data manifold
// even when the chains cannot mix across the input space. Generation always
// draws from the box; the policy only affects training.
enum class ChainInit { uniform_box, data };

struct SgldConfig {
  int steps = 100;
  double step_size = 2.0;   // drift scale: x <- x - (step_size/2) dE/dx + noise
  double noise_std = 0.01;  // per-coordinate noise std, independent knob
  Vec init_low;             // per-dimension uniform init bounds
  Vec init_high;
  int chains = 64;          // persisted chains in a SampleBuffer
  double reinit_prob = 0.05;
  ChainInit chain_init = ChainInit::uniform_box;
};

// Persisted sampler states; each batch element continues one chain, with a
// small probability of restarting it from the uniform init distribution.
struct SampleBuffer {
  Mat states;  // chains x input_dim
  std::vector<bool> live;

  static SampleBuffer make(int chains, int dim);
};

struct SamplerDivergence : std::runtime_error {
  int step;
  explicit SamplerDivergence(int at_step)
      : std::runtime_error("sampler diverged (non-finite state) at step " +
                           std::to_string(at_step)),
        step(at_step) {}
};

// E(x; c) = (z - mu_c) . Lambda (z - mu_c) / 2 with z the model features of x.
// Mixture-weight and normalizer constants are deliberately absent.
double class_energy(const Vec& x, int cls, const HybridModel& model);

// E(x) = -log sum_c exp(-E(x; c)): low wherever any class fits.
double total_energy(const Vec& x, const HybridModel& model);

// Analytic input-space gradient of total_energy (cls < 0) or class_energy,
// routed back through the feature net when one is present.
Vec energy_grad_x(const Vec& x, const HybridModel& model, int cls = -1);

// Langevin chain: x <- x - (step_size/2) dE/dx + eps, eps ~ N(0, noise_std^2 I).
// Returns the trajectory including the start point ((steps+1) x D). Throws
// SamplerDivergence on the first non-finite state.
Mat sgld_chain(const Vec& x0, const HybridModel& model, const SgldConfig& cfg, Rng& rng,
               int cls = -1);

// Contrastive gradient of the mean marginal NLL over the batch, added into
// *grad: + dE(x_n)/d(params) at the data, - the same at one sampler draw per
// batch element (chains persisted in the buffer). Gradients reach the
// Gaussian head and the feature net; mixture logits get none (the energy
// does not involve them). Returns the mean data-term energy. Element t uses
// rng.split(t), so callers pass a distinct stream per batch. Under
// ChainInit::data a restarted chain begins at the batch row it serves, so
// reinit_prob = 1 turns the estimator into k-step contrastive divergence.
double ebm_grad(const Dataset& data, std::span<const int> idx, const HybridModel& model,
                SampleBuffer& buffer, const SgldConfig& cfg, const Rng& rng,
                GradientBundle* grad);

// n samples from fresh chains (uniform init, cfg.steps each); cls < 0 samples
// the marginal energy, otherwise the class-conditional one. Chain i draws
// from rng.split(i), so the result is order-independent.
Mat generate(const HybridModel& model, int n, int cls, const SgldConfig& cfg,
             const Rng& rng);

}  // namespace gcsl
