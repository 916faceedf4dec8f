#pragma once

#include <span>

#include "gcsl/data_io.hpp"
#include "gcsl/model.hpp"

namespace gcsl {

// Per-batch loss decomposition; total is the sum of the three parts.
struct LossBreakdown {
  double cross_entropy = 0.0;
  double generative_nll = 0.0;
  double coupling_penalty = 0.0;
  double total = 0.0;
};

// Log prior tying the softmax head to the Gaussian head:
//   -(lambda/2) * sum_c ( ||w_c - Lambda mu_c||^2
//                       + (b_c - (log pi_c - mu_c . Lambda mu_c / 2))^2 )
// Always <= 0; zero exactly when theta == associate(theta~) or lambda == 0.
double coupling_log_prior(const DiscriminativeParams& disc, const GenerativeParams& gen,
                          double lambda);

// Sum over classes of the squared residuals above (the lambda-independent part).
double coupling_residual(const DiscriminativeParams& disc, const GenerativeParams& gen);

// Adds the gradient of [-(1/n) * coupling_log_prior] into *grad.
void add_coupling_gradient(const HybridModel& model, double lambda, int n,
                           GradientBundle* grad);

// Mean cross-entropy + mean joint generative NLL over the batch, plus the
// coupling penalty spread over the dataset ((lambda/2N) * residual with N =
// data.size()), so per-batch gradients sum to the full-batch gradient across
// an epoch. Exact analytic gradients; tractable regime only (the model must
// not carry a feature net). idx empty = whole dataset.
LossBreakdown supervised_hybrid_loss(const Dataset& data, std::span<const int> idx,
                                     const HybridModel& model, double lambda,
                                     GradientBundle* grad = nullptr);

// Mixed batch: labeled samples contribute cross-entropy plus the joint
// class-conditional NLL, unlabeled samples the mixture marginal NLL (class
// responsibilities weight the generative gradient). Reduces exactly to
// supervised_hybrid_loss on a fully labeled batch.
LossBreakdown semi_supervised_loss(const Dataset& data, std::span<const int> idx,
                                   const HybridModel& model, double lambda,
                                   GradientBundle* grad = nullptr);

}  // namespace gcsl
