#include "cyclegan/errors.hpp"
#include "cyclegan/gradcheck.hpp"
#include "cyclegan/objectives.hpp"
#include "cyclegan/ops.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cyclegan;
using cyclegan::testing::random_tensor;

namespace {

Tensor<double> filled(Shape shape, double v) { return Tensor<double>::full(std::move(shape), v); }

}  // namespace

TEST_CASE("lsgan generator term") {
  CHECK(lsgan_generator_term(filled({1, 1, 2, 2}, 1.0)).item() == 0.0);
  CHECK(lsgan_generator_term(filled({1, 1, 2, 2}, 0.0)).item() == 1.0);
  auto d = Tensor<double>::from_values({2}, {0.5, 0.25});
  CHECK(lsgan_generator_term(d).item() == 0.40625);
}

TEST_CASE("lsgan discriminator term") {
  CHECK(lsgan_discriminator_term(filled({1, 1, 3, 3}, 1.0), filled({1, 1, 3, 3}, 0.0)).item() == 0.0);
  CHECK(lsgan_discriminator_term(filled({1, 1, 3, 3}, 0.0), filled({1, 1, 3, 3}, 1.0)).item() == 2.0);
  CHECK(lsgan_discriminator_term(filled({1, 1, 3, 3}, 0.5), filled({1, 1, 3, 3}, 0.5)).item() == 0.5);
}

TEST_CASE("lsgan discriminator term is minimized exactly at the targets") {
  auto best = lsgan_discriminator_term(filled({1, 1, 2, 2}, 1.0), filled({1, 1, 2, 2}, 0.0)).item();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto real = random_tensor<double>({1, 1, 2, 2}, seed, -2, 2);
    auto fake = random_tensor<double>({1, 1, 2, 2}, seed + 100, -2, 2);
    CHECK(lsgan_discriminator_term(real, fake).item() > best);
  }
}

TEST_CASE("cycle loss") {
  auto x = random_tensor<double>({1, 3, 4, 4}, 1);
  auto y = random_tensor<double>({1, 3, 4, 4}, 2);
  CHECK(cycle_loss(x, x, y, y).item() == 0.0);
  auto x_off = add_scalar(x, 0.3);
  auto y_off = add_scalar(y, -0.1);
  CHECK(cycle_loss(x, x_off, y, y_off).item() == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(cycle_loss(x, x_off, y, y_off, CycleDirections::forward_only).item() == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(cycle_loss(x, x_off, y, y_off, CycleDirections::backward_only).item() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(cycle_loss(x, x_off, Tensor<double>(), Tensor<double>(), CycleDirections::forward_only).item() ==
        doctest::Approx(0.3).epsilon(1e-12));
  CHECK_THROWS_AS(cycle_loss(x, random_tensor<double>({1, 3, 4, 5}, 3), y, y), ShapeError);
}

TEST_CASE("cycle loss is zero only for exact reconstructions") {
  auto x = random_tensor<double>({1, 3, 4, 4}, 5);
  auto y = random_tensor<double>({1, 3, 4, 4}, 6);
  auto nearly = Tensor<double>::from_values(x.shape(), {x.values().begin(), x.values().end()});
  nearly.mutable_values()[7] += 1e-9;
  CHECK(cycle_loss(x, nearly, y, y).item() > 0.0);
}

TEST_CASE("identity loss") {
  auto x = random_tensor<double>({1, 3, 4, 4}, 1);
  auto y = random_tensor<double>({1, 3, 4, 4}, 2);
  CHECK(identity_loss(y, y, x, x).item() == 0.0);
  CHECK(identity_loss(add_scalar(y, 0.2), y, x, x).item() == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(identity_loss(add_scalar(y, 5.0), y, add_scalar(x, -3.0), x, false).item() == 0.0);
  CHECK_THROWS_AS(identity_loss(x, random_tensor<double>({1, 3, 2, 2}, 3), x, x), ShapeError);
}

TEST_CASE("total generator objective") {
  GeneratorTerms<double> terms{Tensor<double>::scalar(0.5), Tensor<double>::scalar(0.5), Tensor<double>::scalar(0.1), {}};
  CHECK(total_generator_objective(terms, 10.0, 0.0).item() == doctest::Approx(2.0).epsilon(1e-15));

  // lambda = 0 and no identity term: the adversarial terms alone.
  CHECK(total_generator_objective(terms, 0.0, 0.0).item() == 1.0);

  // identity weight 0.5 * lambda = 5.
  const double lambda = 10.0;
  terms.idt = Tensor<double>::scalar(0.2);
  CHECK(total_generator_objective(terms, lambda, 0.5 * lambda).item() == doctest::Approx(0.5 + 0.5 + 1.0 + 5.0 * 0.2));

  LossBreakdown parts;
  parts.gan_g = 0.5;
  parts.gan_f = 0.5;
  parts.cyc = 0.1;
  parts.lambda = 10.0;
  CHECK(total_generator_objective(parts) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(total_generator_objective(terms, -1.0, 0.0), Error);
}

TEST_CASE("total generator objective is linear in each component") {
  const double lambda = 10.0, lambda_idt = 5.0;
  auto base = [&](double g, double f, double c, double i) {
    GeneratorTerms<double> t{Tensor<double>::scalar(g), Tensor<double>::scalar(f), Tensor<double>::scalar(c),
                             Tensor<double>::scalar(i)};
    return total_generator_objective(t, lambda, lambda_idt).item();
  };
  const double b = base(0.3, 0.4, 0.05, 0.02);
  const double delta = 0.125;
  CHECK(base(0.3 + delta, 0.4, 0.05, 0.02) - b == doctest::Approx(delta));
  CHECK(base(0.3, 0.4 + delta, 0.05, 0.02) - b == doctest::Approx(delta));
  CHECK(base(0.3, 0.4, 0.05 + delta, 0.02) - b == doctest::Approx(lambda * delta));
  CHECK(base(0.3, 0.4, 0.05, 0.02 + delta) - b == doctest::Approx(lambda_idt * delta));
}

TEST_CASE("loss gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto a = random_tensor<double>({1, 1, 3, 3}, seed);
    auto b = random_tensor<double>({1, 1, 3, 3}, seed + 50);
    CHECK(gradient_check([](auto& in) { return lsgan_generator_term(in[0]); }, {a}).max_relative_error < 1e-4);
    CHECK(gradient_check([](auto& in) { return lsgan_discriminator_term(in[0], in[1]); }, {a, b}).max_relative_error <
          1e-4);
    auto x = random_tensor<double>({1, 2, 3, 3}, seed + 1);
    auto xr = add_scalar(random_tensor<double>({1, 2, 3, 3}, seed + 2, 0.1, 0.5), 0.0);
    auto y = random_tensor<double>({1, 2, 3, 3}, seed + 3);
    auto yr = random_tensor<double>({1, 2, 3, 3}, seed + 4);
    // Offsets keep every |difference| well clear of the absolute-value kink.
    for (std::size_t i = 0; i < xr.numel(); ++i) xr.mutable_values()[i] += x.values()[i];
    for (std::size_t i = 0; i < yr.numel(); ++i) {
      auto& v = yr.mutable_values()[i];
      v = y.values()[i] + (v >= 0 ? 0.1 + v : v - 0.1);
    }
    CHECK(gradient_check([](auto& in) { return cycle_loss(in[0], in[1], in[2], in[3]); }, {x, xr, y, yr})
              .max_relative_error < 1e-4);
    CHECK(gradient_check([](auto& in) { return identity_loss(in[0], in[1], in[2], in[3]); }, {xr, x, yr, y})
              .max_relative_error < 1e-4);
  }
}

TEST_CASE("every reported loss is non-negative") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto a = random_tensor<double>({1, 1, 4, 4}, seed, -3, 3);
    auto b = random_tensor<double>({1, 1, 4, 4}, seed + 1, -3, 3);
    CHECK(lsgan_generator_term(a).item() >= 0.0);
    CHECK(lsgan_discriminator_term(a, b).item() >= 0.0);
    CHECK(cycle_loss(a, b, b, a).item() >= 0.0);
    CHECK(identity_loss(a, b, b, a).item() >= 0.0);
  }
}
