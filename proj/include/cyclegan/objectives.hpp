#pragma once

#include "cyclegan/tensor.hpp"

namespace cyclegan {

// Least-squares adversarial terms. Expectations are means over the batch
// and every patch of the discriminator output.

// mean((d - 1)^2) over D's patch map on generated images.
template <typename T>
Tensor<T> lsgan_generator_term(const Tensor<T>& d_on_fake);

// mean((d_real - 1)^2) + mean(d_fake^2). The trainer halves this when it
// optimizes a discriminator.
template <typename T>
Tensor<T> lsgan_discriminator_term(const Tensor<T>& d_on_real, const Tensor<T>& d_on_fake);

enum class CycleDirections { both, forward_only, backward_only };

// l1_mean(x_rec, x) + l1_mean(y_rec, y). forward_only keeps the
// x -> G -> F term, backward_only the y -> F -> G term; the dropped side's
// tensors may be undefined.
template <typename T>
Tensor<T> cycle_loss(const Tensor<T>& x, const Tensor<T>& x_reconstructed, const Tensor<T>& y,
                     const Tensor<T>& y_reconstructed, CycleDirections directions = CycleDirections::both);

// l1_mean(G(y), y) + l1_mean(F(x), x); a constant 0 when disabled.
template <typename T>
Tensor<T> identity_loss(const Tensor<T>& g_of_y, const Tensor<T>& y, const Tensor<T>& f_of_x, const Tensor<T>& x,
                        bool enabled = true);

// Per-step loss values; inactive terms stay exactly 0.
struct LossBreakdown {
  double gan_g = 0.0;  // G against D_Y
  double gan_f = 0.0;  // F against D_X
  double disc_x = 0.0;
  double disc_y = 0.0;
  double cyc = 0.0;
  double idt = 0.0;
  double total_gen = 0.0;
  double lambda = 10.0;
  double lambda_identity = 0.0;
};

// The differentiable pieces of the generator objective. An undefined tensor
// marks an inactive term.
template <typename T>
struct GeneratorTerms {
  Tensor<T> gan_g;
  Tensor<T> gan_f;
  Tensor<T> cyc;
  Tensor<T> idt;
};

// gan_g + gan_f + lambda * cyc + lambda_identity * idt as one scalar.
template <typename T>
Tensor<T> total_generator_objective(const GeneratorTerms<T>& terms, double lambda, double lambda_identity);

// Same combination on reported values.
double total_generator_objective(const LossBreakdown& parts);

}  // namespace cyclegan
