#include "cyclegan/objectives.hpp"

#include "cyclegan/errors.hpp"
#include "cyclegan/ops.hpp"

namespace cyclegan {

template <typename T>
Tensor<T> lsgan_generator_term(const Tensor<T>& d_on_fake) {
  return mean(square(add_scalar(d_on_fake, -1.0)));
}

template <typename T>
Tensor<T> lsgan_discriminator_term(const Tensor<T>& d_on_real, const Tensor<T>& d_on_fake) {
  return add(mean(square(add_scalar(d_on_real, -1.0))), mean(square(d_on_fake)));
}

template <typename T>
Tensor<T> cycle_loss(const Tensor<T>& x, const Tensor<T>& x_reconstructed, const Tensor<T>& y,
                     const Tensor<T>& y_reconstructed, CycleDirections directions) {
  switch (directions) {
    case CycleDirections::forward_only:
      return l1_mean(x_reconstructed, x);
    case CycleDirections::backward_only:
      return l1_mean(y_reconstructed, y);
    case CycleDirections::both:
      break;
  }
  return add(l1_mean(x_reconstructed, x), l1_mean(y_reconstructed, y));
}

template <typename T>
Tensor<T> identity_loss(const Tensor<T>& g_of_y, const Tensor<T>& y, const Tensor<T>& f_of_x, const Tensor<T>& x,
                        bool enabled) {
  if (!enabled) return Tensor<T>::scalar(T(0));
  return add(l1_mean(g_of_y, y), l1_mean(f_of_x, x));
}

template <typename T>
Tensor<T> total_generator_objective(const GeneratorTerms<T>& terms, double lambda, double lambda_identity) {
  if (lambda < 0 || lambda_identity < 0) throw Error("loss weights must be non-negative");
  Tensor<T> total = Tensor<T>::scalar(T(0));
  auto accumulate = [&](const Tensor<T>& term, double weight) {
    if (!term.defined() || weight == 0.0) return;
    total = add(total, weight == 1.0 ? term : scale(term, weight));
  };
  accumulate(terms.gan_g, 1.0);
  accumulate(terms.gan_f, 1.0);
  accumulate(terms.cyc, lambda);
  accumulate(terms.idt, lambda_identity);
  return total;
}

double total_generator_objective(const LossBreakdown& parts) {
  return parts.gan_g + parts.gan_f + parts.lambda * parts.cyc + parts.lambda_identity * parts.idt;
}

#define CYCLEGAN_INSTANTIATE_OBJECTIVES(T)                                                                    \
  template Tensor<T> lsgan_generator_term(const Tensor<T>&);                                                  \
  template Tensor<T> lsgan_discriminator_term(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> cycle_loss(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,        \
                                CycleDirections);                                                             \
  template Tensor<T> identity_loss(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, bool); \
  template Tensor<T> total_generator_objective(const GeneratorTerms<T>&, double, double);

CYCLEGAN_INSTANTIATE_OBJECTIVES(float)
CYCLEGAN_INSTANTIATE_OBJECTIVES(double)

}  // namespace cyclegan
