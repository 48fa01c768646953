#include <cmath>
#include <set>

#include "cyclegan/datasets.hpp"
#include "cyclegan/errors.hpp"
#include "cyclegan/objectives.hpp"
#include "cyclegan/ops.hpp"
#include "cyclegan/trainer.hpp"
#include "doctest.h"

using namespace cyclegan;

namespace {

TrainingConfig tiny_config(Variant variant = Variant::full) {
  TrainingConfig cfg;
  cfg.resolution = 32;
  cfg.residual_blocks = 1;
  cfg.generator_filters = 2;
  cfg.discriminator_filters = 2;
  cfg.epochs_constant = 1;
  cfg.epochs_decay = 1;
  cfg.buffer_capacity = 3;
  cfg.seed = 17;
  cfg.variant = variant;
  return cfg;
}

std::vector<float> flat(const ParameterSet<float>& ps) {
  std::vector<float> out;
  for (const auto& [name, t] : ps) out.insert(out.end(), t.values().begin(), t.values().end());
  return out;
}

bool same_losses(const LossBreakdown& a, const LossBreakdown& b) {
  return a.gan_g == b.gan_g && a.gan_f == b.gan_f && a.disc_x == b.disc_x && a.disc_y == b.disc_y &&
         a.cyc == b.cyc && a.idt == b.idt && a.total_gen == b.total_gen;
}

}  // namespace

TEST_CASE("learning-rate schedule examples") {
  TrainingConfig cfg;
  CHECK(lr_at_epoch(0, cfg) == 2e-4);
  CHECK(lr_at_epoch(99, cfg) == 2e-4);
  CHECK(lr_at_epoch(150, cfg) == 1e-4);
  CHECK(lr_at_epoch(200, cfg) == 0.0);
  CHECK(lr_at_epoch(199, cfg) > 0.0);
  CHECK_THROWS_AS(lr_at_epoch(-1, cfg), ConfigError);
  CHECK_THROWS_AS(lr_at_epoch(201, cfg), ConfigError);
}

TEST_CASE("learning-rate schedule is non-increasing and ends at zero") {
  for (auto [c, d] : {std::pair{100, 100}, {3, 7}, {0, 5}, {4, 1}}) {
    TrainingConfig cfg;
    cfg.epochs_constant = c;
    cfg.epochs_decay = d;
    double prev = lr_at_epoch(0, cfg);
    for (int e = 1; e <= cfg.total_epochs(); ++e) {
      const double lr = lr_at_epoch(e, cfg);
      CHECK(lr <= prev);
      CHECK(lr >= 0.0);
      prev = lr;
    }
    CHECK(lr_at_epoch(cfg.total_epochs(), cfg) == 0.0);
  }
}

TEST_CASE("adam first step moves by lr * |g| / (|g| + eps)") {
  for (double g : {3.0, -0.5, 1e-3, 1e-7}) {
    CAPTURE(g);
    auto p = Tensor<float>::scalar(1.0f, true);
    p.mutable_grad()[0] = static_cast<float>(g);
    AdamState state;
    adam_step({p}, state, 2e-4, 0.5, 0.999, 1e-8);
    const double gf = static_cast<float>(g);
    const double expected = 2e-4 * std::abs(gf) / (std::abs(gf) + 1e-8);
    CHECK(std::abs(1.0 - p.item()) == doctest::Approx(expected).epsilon(1e-3));
    CHECK((p.item() < 1.0f) == (g > 0));
    CHECK(state.t == 1);
  }
}

TEST_CASE("adam with a zero gradient leaves the parameter but counts the step") {
  auto p = Tensor<float>::from_values({2}, {0.25f, -4.0f}, true);
  AdamState state;
  adam_step({p}, state, 1e-3, 0.5, 0.999, 1e-8);
  adam_step({p}, state, 1e-3, 0.5, 0.999, 1e-8);
  CHECK(p.values()[0] == 0.25f);
  CHECK(p.values()[1] == -4.0f);
  CHECK(state.t == 2);
  CHECK(state.m[0].shape() == p.shape());
}

TEST_CASE("adam rejects missing gradients and mismatched state") {
  AdamState state;
  auto no_grad = Tensor<float>::scalar(1.0f);
  CHECK_THROWS_AS(adam_step({no_grad}, state, 1e-3, 0.5, 0.999, 1e-8), Error);
  auto p = Tensor<float>::scalar(1.0f, true);
  AdamState used;
  adam_step({p}, used, 1e-3, 0.5, 0.999, 1e-8);
  auto q = Tensor<float>::zeros({3}, true);
  CHECK_THROWS_AS(adam_step({q}, used, 1e-3, 0.5, 0.999, 1e-8), ShapeError);
}

TEST_CASE("adam trajectories are deterministic") {
  auto run = [] {
    auto p = Tensor<float>::from_values({3}, {0.1f, 0.2f, -0.3f}, true);
    AdamState state;
    for (int i = 0; i < 50; ++i) {
      p.zero_grad();
      sum(square(p)).backward();
      adam_step({p}, state, 1e-2, 0.5, 0.999, 1e-8);
    }
    return std::vector<float>(p.values().begin(), p.values().end());
  };
  CHECK(run() == run());
}

TEST_CASE("replay buffer warm-up and capacity") {
  ReplayBuffer buf(50, 1);
  auto first = Tensor<float>::scalar(0.0f);
  CHECK(buf.exchange(first).node() == first.node());
  CHECK(buf.size() == 1);
  for (int i = 1; i < 1000; ++i) {
    auto fresh = Tensor<float>::scalar(static_cast<float>(i));
    auto out = buf.exchange(fresh);
    CHECK(buf.size() <= 50);
    if (i < 50) CHECK(out.node() == fresh.node());
  }
  CHECK(buf.size() == 50);
}

TEST_CASE("full replay buffer returns history half of the time") {
  ReplayBuffer buf(50, 2024);
  for (int i = 0; i < 50; ++i) buf.exchange(Tensor<float>::scalar(static_cast<float>(i)));
  int from_history = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    auto fresh = Tensor<float>::scalar(-1.0f);
    if (buf.exchange(fresh).node() != fresh.node()) ++from_history;
    REQUIRE(buf.size() == 50);
  }
  CHECK(std::abs(from_history / double(trials) - 0.5) < 0.02);
}

TEST_CASE("zero-capacity buffer passes images through") {
  ReplayBuffer buf(0, 1);
  auto t = Tensor<float>::scalar(1.0f);
  CHECK(buf.exchange(t).node() == t.node());
  CHECK(buf.size() == 0);
}

TEST_CASE("variant names") {
  std::set<std::string_view> labels;
  for (auto v : kAllVariants) {
    CHECK(parse_variant(to_string(v)) == v);
    labels.insert(variant_label(v));
  }
  CHECK(labels == std::set<std::string_view>{"Cycle alone", "GAN alone", "GAN + forward cycle",
                                             "GAN + backward cycle", "CycleGAN (ours)"});
  CHECK_THROWS_AS(parse_variant("everything"), ConfigError);
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(validate(TrainingConfig{}));
  auto bad = [](auto mutate) {
    TrainingConfig cfg;
    mutate(cfg);
    CHECK_THROWS_AS(validate(cfg), ConfigError);
  };
  bad([](TrainingConfig& c) { c.lr0 = 0; });
  bad([](TrainingConfig& c) { c.lambda = -1; });
  bad([](TrainingConfig& c) { c.buffer_capacity = -1; });
  bad([](TrainingConfig& c) { c.resolution = 30; });
  bad([](TrainingConfig& c) { c.adam_beta1 = 1.0; });
  bad([](TrainingConfig& c) { c.epochs_constant = 0, c.epochs_decay = 0; });
  bad([](TrainingConfig& c) { c.crop = 300; });
}

TEST_CASE("one step: reported terms follow the variant") {
  auto data = make_synthetic_pair(OracleKind::invert, 2, 32, 3);
  const auto& x = data.x.samples[0];
  const auto& y = data.y.samples[0];

  SUBCASE("full") {
    Trainer t(tiny_config());
    auto l = t.step(x, y, 2e-4);
    CHECK(l.gan_g > 0);
    CHECK(l.gan_f > 0);
    CHECK(l.cyc > 0);
    CHECK(l.disc_x > 0);
    CHECK(l.disc_y > 0);
    CHECK(l.idt == 0.0);
    CHECK(l.total_gen == doctest::Approx(l.gan_g + l.gan_f + 10.0 * l.cyc));
  }
  SUBCASE("gan_only reports no cycle term") {
    Trainer t(tiny_config(Variant::gan_only));
    for (int i = 0; i < 3; ++i) {
      auto l = t.step(x, y, 2e-4);
      CHECK(l.cyc == 0.0);
      CHECK(l.total_gen == doctest::Approx(l.gan_g + l.gan_f));
    }
  }
  SUBCASE("cycle_only never updates the discriminators") {
    Trainer t(tiny_config(Variant::cycle_only));
    const auto dx0 = flat(t.model().d_x.params), dy0 = flat(t.model().d_y.params);
    const auto g0 = flat(t.model().g.params);
    for (int i = 0; i < 3; ++i) {
      auto l = t.step(x, y, 2e-4);
      CHECK(l.gan_g == 0.0);
      CHECK(l.gan_f == 0.0);
      CHECK(l.disc_x == 0.0);
      CHECK(l.disc_y == 0.0);
      CHECK(l.total_gen == doctest::Approx(10.0 * l.cyc));
    }
    CHECK(flat(t.model().d_x.params) == dx0);
    CHECK(flat(t.model().d_y.params) == dy0);
    CHECK(flat(t.model().g.params) != g0);
  }
  SUBCASE("one-sided cycle variants") {
    auto before = Trainer(tiny_config()).state().clone();
    double fwd, bwd;
    {
      NoGradGuard guard;
      const auto& m = before.model;
      fwd = l1_mean(m.f(m.g(x)), x).item();
      bwd = l1_mean(m.g(m.f(y)), y).item();
    }
    Trainer tf(tiny_config(Variant::gan_forward));
    Trainer tb(tiny_config(Variant::gan_backward));
    CHECK(tf.step(x, y, 2e-4).cyc == doctest::Approx(fwd).epsilon(1e-5));
    CHECK(tb.step(x, y, 2e-4).cyc == doctest::Approx(bwd).epsilon(1e-5));
  }
  SUBCASE("identity term") {
    auto cfg = tiny_config();
    cfg.lambda_identity = 5.0;
    Trainer t(cfg);
    auto l = t.step(x, y, 2e-4);
    CHECK(l.idt > 0);
    CHECK(l.lambda_identity == 5.0);
    CHECK(l.total_gen == doctest::Approx(l.gan_g + l.gan_f + 10.0 * l.cyc + 5.0 * l.idt));
  }
}

TEST_CASE("discriminator loss is reported halved") {
  auto data = make_synthetic_pair(OracleKind::invert, 1, 32, 4);
  const auto& x = data.x.samples[0];
  const auto& y = data.y.samples[0];
  Trainer t(tiny_config());
  double expected_x, expected_y;
  {
    // The first exchange returns the fresh fake, produced before the
    // generator update.
    auto s = t.state().clone();
    NoGradGuard guard;
    const auto& m = s.model;
    expected_x = 0.5 * lsgan_discriminator_term(m.d_x(x), m.d_x(m.f(y))).item();
    expected_y = 0.5 * lsgan_discriminator_term(m.d_y(y), m.d_y(m.g(x))).item();
  }
  auto l = t.step(x, y, 2e-4);
  CHECK(l.disc_x == doctest::Approx(expected_x).epsilon(1e-5));
  CHECK(l.disc_y == doctest::Approx(expected_y).epsilon(1e-5));
}

TEST_CASE("buffered fakes carry no graph") {
  auto data = make_synthetic_pair(OracleKind::invert, 2, 32, 5);
  Trainer t(tiny_config());
  t.step(data.x.samples[0], data.y.samples[0], 2e-4);
  t.step(data.x.samples[1], data.y.samples[1], 2e-4);
  for (const auto* buf : {&t.state().buffer_x, &t.state().buffer_y}) {
    CHECK(buf->size() == 2);
    for (const auto& img : buf->stored()) {
      CHECK_FALSE(img.requires_grad());
      CHECK(img.node()->inputs.empty());
    }
  }
}

TEST_CASE("non-finite losses abort the step") {
  auto data = make_synthetic_pair(OracleKind::invert, 1, 32, 6);
  auto state = initial_state(tiny_config());
  // The output layer has no normalization or ReLU that could swallow it.
  const auto last = "layer" + std::to_string(state.model.g.spec.layers.size() - 1) + ".bias";
  state.model.g.params.at(last).mutable_values()[0] = std::nanf("");
  Trainer t(std::move(state));
  CHECK_THROWS_AS(t.step(data.x.samples[0], data.y.samples[0], 2e-4), NumericError);
}

TEST_CASE("training runs epochs x min(|X|, |Y|) steps") {
  auto data = make_synthetic_pair(OracleKind::invert, 4, 32, 7);
  Trainer t(tiny_config());
  std::vector<StepRecord> seen;
  int checkpoints = 0;
  t.train(data.x, data.y, TrainHooks{[&](const StepRecord& r) { seen.push_back(r); }, [&](const Trainer&) {
                                       ++checkpoints;
                                     }});
  CHECK(t.history().size() == 8);
  CHECK(seen.size() == 8);
  CHECK(checkpoints == 1);
  CHECK(t.finished());
  CHECK(t.state().step == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(t.history()[i].step == i);
    CHECK(t.history()[i].epoch == static_cast<int>(i / 4));
  }
  CHECK(t.history()[0].lr == 2e-4);
  CHECK(t.history()[4].lr == 2e-4);  // first decay epoch starts at lr0

  DomainDataset bigger = data.y;
  bigger.samples.push_back(data.y.samples[0]);
  bigger.samples.push_back(data.y.samples[1]);
  Trainer u(tiny_config());
  u.train(data.x, bigger);
  CHECK(u.history().size() == 8);
}

TEST_CASE("training is deterministic") {
  auto data = make_synthetic_pair(OracleKind::invert, 3, 32, 8);
  Trainer a(tiny_config()), b(tiny_config());
  a.train(data.x, data.y);
  b.train(data.x, data.y);
  REQUIRE(a.history().size() == b.history().size());
  for (std::size_t i = 0; i < a.history().size(); ++i) CHECK(same_losses(a.history()[i].losses, b.history()[i].losses));
  CHECK(flat(a.model().g.params) == flat(b.model().g.params));
  CHECK(flat(a.model().d_y.params) == flat(b.model().d_y.params));
}

TEST_CASE("resuming from a snapshot reproduces the uninterrupted run") {
  auto data = make_synthetic_pair(OracleKind::invert, 3, 32, 9);
  auto cfg = tiny_config();
  cfg.epochs_constant = 2;
  cfg.epochs_decay = 2;
  cfg.buffer_capacity = 2;
  Trainer whole(cfg);
  whole.train(data.x, data.y);

  Trainer first(cfg);
  first.train(data.x, data.y, {}, 2);
  CHECK(first.state().epoch == 2);
  CHECK_FALSE(first.finished());
  Trainer resumed(first.state().clone());
  first.train(data.x, data.y);  // continuing the original must not disturb the copy
  resumed.train(data.x, data.y);
  REQUIRE(resumed.history().size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(resumed.history()[i].step == whole.history()[i + 6].step);
    CHECK(same_losses(resumed.history()[i].losses, whole.history()[i + 6].losses));
  }
  CHECK(flat(resumed.model().f.params) == flat(whole.model().f.params));
}

TEST_CASE("a failing checkpoint sink stops training with state intact") {
  auto data = make_synthetic_pair(OracleKind::invert, 2, 32, 10);
  auto cfg = tiny_config();
  cfg.checkpoint_every = 1;
  Trainer t(cfg);
  TrainHooks hooks;
  hooks.on_checkpoint = [](const Trainer&) { throw IoError("disk full"); };
  CHECK_THROWS_AS(t.train(data.x, data.y, hooks), IoError);
  CHECK(t.state().epoch == 1);
  CHECK(t.history().size() == 2);
  t.train(data.x, data.y);
  CHECK(t.finished());
  CHECK(t.history().size() == 4);
}

TEST_CASE("training rejects mismatched or empty data") {
  auto data = make_synthetic_pair(OracleKind::invert, 2, 16, 11);
  Trainer t(tiny_config());
  CHECK_THROWS_AS(t.train(data.x, data.y), ShapeError);
  CHECK_THROWS_AS(t.train(DomainDataset{}, data.y), ConfigError);
}

// Scalar "images" with one-parameter linear maps: G(x) = a x, F(y) = b y,
// D(z) = c z + e. Exercises the same objectives, buffer and optimizer as the
// image trainer.
TEST_CASE("toy scalar problem: joint training reduces the cycle loss") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(0.5, 1.0);
  auto a = Tensor<float>::scalar(0.1f, true), b = Tensor<float>::scalar(0.1f, true);
  auto cx = Tensor<float>::scalar(0.1f, true), ex = Tensor<float>::scalar(0.0f, true);
  auto cy = Tensor<float>::scalar(0.1f, true), ey = Tensor<float>::scalar(0.0f, true);
  AdamState opt_g, opt_dx, opt_dy;
  ReplayBuffer bx(50, 1), by(50, 2);
  auto cycle_at = [&](double xv, double yv) {
    NoGradGuard guard;
    auto x = Tensor<float>::scalar(static_cast<float>(xv)), y = Tensor<float>::scalar(static_cast<float>(yv));
    return cycle_loss(x, mul(b, mul(a, x)), y, mul(a, mul(b, y))).item();
  };
  auto mean_cycle = [&] {
    double total = 0;
    for (int i = 1; i <= 20; ++i) total += cycle_at(0.5 + i / 40.0, -(0.5 + i / 40.0));
    return total / 20;
  };
  const double initial = mean_cycle();

  for (int step = 0; step < 500; ++step) {
    auto x = Tensor<float>::scalar(static_cast<float>(ux(rng)));
    auto y = Tensor<float>::scalar(static_cast<float>(-ux(rng)));
    for (auto* p : {&cx, &ex, &cy, &ey}) p->set_requires_grad(false);
    a.zero_grad();
    b.zero_grad();
    auto gx = mul(a, x), fy = mul(b, y);
    GeneratorTerms<float> terms;
    terms.gan_g = lsgan_generator_term(add(mul(cy, gx), ey));
    terms.gan_f = lsgan_generator_term(add(mul(cx, fy), ex));
    terms.cyc = cycle_loss(x, mul(b, gx), y, mul(a, fy));
    total_generator_objective(terms, 10.0, 0.0).backward();
    adam_step({a, b}, opt_g, 1e-2, 0.5, 0.999, 1e-8);

    for (auto* p : {&cx, &ex, &cy, &ey}) p->set_requires_grad(true);
    for (auto* p : {&cx, &ex, &cy, &ey}) p->zero_grad();
    auto fake_x = bx.exchange(fy.detach()), fake_y = by.exchange(gx.detach());
    scale(lsgan_discriminator_term(add(mul(cx, x), ex), add(mul(cx, fake_x), ex)), 0.5).backward();
    adam_step({cx, ex}, opt_dx, 1e-2, 0.5, 0.999, 1e-8);
    scale(lsgan_discriminator_term(add(mul(cy, y), ey), add(mul(cy, fake_y), ey)), 0.5).backward();
    adam_step({cy, ey}, opt_dy, 1e-2, 0.5, 0.999, 1e-8);
  }
  CHECK(mean_cycle() < initial);
}
