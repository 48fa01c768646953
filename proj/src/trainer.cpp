#include "cyclegan/trainer.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <sstream>

#include "cyclegan/errors.hpp"
#include "cyclegan/ops.hpp"

namespace cyclegan {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::gan_only: return "gan_only";
    case Variant::cycle_only: return "cycle_only";
    case Variant::gan_forward: return "gan_forward";
    case Variant::gan_backward: return "gan_backward";
  }
  return "unknown";
}

Variant parse_variant(std::string_view text) {
  for (auto v : kAllVariants) {
    if (text == to_string(v)) return v;
  }
  throw ConfigError("unknown variant '" + std::string(text) +
                    "' (expected full, gan_only, cycle_only, gan_forward or gan_backward)");
}

std::string_view variant_label(Variant v) {
  switch (v) {
    case Variant::full: return "CycleGAN (ours)";
    case Variant::gan_only: return "GAN alone";
    case Variant::cycle_only: return "Cycle alone";
    case Variant::gan_forward: return "GAN + forward cycle";
    case Variant::gan_backward: return "GAN + backward cycle";
  }
  return "unknown";
}

void validate(const TrainingConfig& cfg) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(cfg.lambda >= 0 && std::isfinite(cfg.lambda), "lambda must be finite and >= 0");
  require(cfg.lambda_identity >= 0 && std::isfinite(cfg.lambda_identity), "lambda_identity must be finite and >= 0");
  require(cfg.lr0 > 0 && std::isfinite(cfg.lr0), "lr0 must be > 0");
  require(cfg.epochs_constant >= 0, "epochs_constant must be >= 0");
  require(cfg.epochs_decay >= 0, "epochs_decay must be >= 0");
  require(cfg.total_epochs() >= 1, "at least one epoch is required");
  require(cfg.buffer_capacity >= 0, "buffer_capacity must be >= 0");
  require(cfg.adam_beta1 >= 0 && cfg.adam_beta1 < 1, "adam_beta1 must be in [0, 1)");
  require(cfg.adam_beta2 >= 0 && cfg.adam_beta2 < 1, "adam_beta2 must be in [0, 1)");
  require(cfg.adam_eps > 0, "adam_eps must be > 0");
  require(cfg.resolution >= 4 && cfg.resolution % 4 == 0, "resolution must be a positive multiple of 4");
  require(!cfg.residual_blocks || *cfg.residual_blocks >= 0, "residual_blocks must be >= 0");
  require(cfg.generator_filters >= 1, "generator_filters must be >= 1");
  require(cfg.discriminator_filters >= 1, "discriminator_filters must be >= 1");
  require(cfg.crop >= 0 && cfg.crop <= cfg.resolution && cfg.crop % 4 == 0,
          "crop must be 0 or a multiple of 4 no larger than resolution");
  require(cfg.checkpoint_every >= 0, "checkpoint_every must be >= 0");
}

NetworkSpec generator_spec(const TrainingConfig& cfg) {
  return build_generator(cfg.resolution, GeneratorOptions{cfg.generator_filters, cfg.residual_blocks, 3});
}

NetworkSpec discriminator_spec(const TrainingConfig& cfg) { return build_discriminator(cfg.discriminator_filters, 3); }

double lr_at_epoch(int epoch, const TrainingConfig& cfg) {
  if (epoch < 0 || epoch > cfg.total_epochs()) {
    throw ConfigError("epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(cfg.total_epochs()) + "]");
  }
  if (epoch < cfg.epochs_constant) return cfg.lr0;
  const double progress = static_cast<double>(epoch - cfg.epochs_constant) / cfg.epochs_decay;
  return cfg.lr0 * (1.0 - progress);
}

AdamState AdamState::clone() const {
  AdamState out;
  out.t = t;
  for (const auto& x : m) out.m.push_back(x.detach());
  for (const auto& x : v) out.v.push_back(x.detach());
  return out;
}

void adam_step(const std::vector<Tensor<float>>& params, AdamState& state, double lr, double beta1, double beta2,
               double eps) {
  if (state.m.empty() && state.t == 0) {
    for (const auto& p : params) {
      state.m.push_back(Tensor<float>::zeros(p.shape()));
      state.v.push_back(Tensor<float>::zeros(p.shape()));
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("optimizer state holds " + std::to_string(state.m.size()) + " moments for " +
                     std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].shape() != params[i].shape() || state.v[i].shape() != params[i].shape()) {
      throw ShapeError("optimizer moment " + std::to_string(i) + " has shape " + shape_string(state.m[i].shape()) +
                       ", parameter has " + shape_string(params[i].shape()));
    }
    if (!params[i].requires_grad() || params[i].grad().size() != params[i].numel()) {
      throw Error("parameter " + std::to_string(i) + " has no gradient");
    }
  }

  ++state.t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i];
    auto value = p.mutable_values();
    auto grad = p.grad();
    auto m = state.m[i].mutable_values();
    auto v = state.v[i].mutable_values();
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      const double mk = beta1 * m[k] + (1.0 - beta1) * g;
      const double vk = beta2 * v[k] + (1.0 - beta2) * g * g;
      m[k] = static_cast<float>(mk);
      v[k] = static_cast<float>(vk);
      value[k] = static_cast<float>(value[k] - lr * (mk / c1) / (std::sqrt(vk / c2) + eps));
    }
  }
}

ReplayBuffer::ReplayBuffer(int capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
  if (capacity < 0) throw ConfigError("buffer capacity must be >= 0");
  stored_.reserve(static_cast<std::size_t>(capacity));
}

Tensor<float> ReplayBuffer::exchange(const Tensor<float>& fresh) {
  if (capacity_ == 0) return fresh;
  if (stored_.size() < static_cast<std::size_t>(capacity_)) {
    stored_.push_back(fresh);
    return fresh;
  }
  if (std::bernoulli_distribution(0.5)(rng_)) {
    const auto slot = std::uniform_int_distribution<std::size_t>(0, stored_.size() - 1)(rng_);
    Tensor<float> old = stored_[slot];
    stored_[slot] = fresh;
    return old;
  }
  return fresh;
}

ReplayBuffer ReplayBuffer::restore(int capacity, std::vector<Tensor<float>> stored, std::mt19937_64 rng) {
  if (capacity < 0 || stored.size() > static_cast<std::size_t>(capacity)) {
    throw CorruptionError("replay buffer holds " + std::to_string(stored.size()) + " images for capacity " +
                          std::to_string(capacity));
  }
  ReplayBuffer out;
  out.capacity_ = capacity;
  out.stored_ = std::move(stored);
  out.rng_ = rng;
  return out;
}

namespace {

Network clone_network(const Network& n) { return Network{n.spec, n.params.cast<float>()}; }

std::vector<Tensor<float>> tensors_of(std::initializer_list<const ParameterSet<float>*> sets) {
  std::vector<Tensor<float>> out;
  for (const auto* s : sets)
    for (const auto& [name, t] : *s) out.push_back(t);
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{seed, stream};
  std::uint64_t out[1];
  seq.generate(reinterpret_cast<std::uint32_t*>(out), reinterpret_cast<std::uint32_t*>(out) + 2);
  return out[0];
}

void check_finite(double value, const char* term, std::uint64_t step) {
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << "non-finite " << term << " loss (" << value << ") at step " << step;
    throw NumericError(msg.str());
  }
}

CycleDirections directions_for(Variant v) {
  switch (v) {
    case Variant::gan_forward: return CycleDirections::forward_only;
    case Variant::gan_backward: return CycleDirections::backward_only;
    default: return CycleDirections::both;
  }
}

}  // namespace

TrainerState TrainerState::clone() const {
  TrainerState out;
  out.config = config;
  out.model = ModelState{clone_network(model.g), clone_network(model.f), clone_network(model.d_x),
                         clone_network(model.d_y), model.seed};
  out.opt_generators = opt_generators.clone();
  out.opt_d_x = opt_d_x.clone();
  out.opt_d_y = opt_d_y.clone();
  out.buffer_x = buffer_x;
  out.buffer_y = buffer_y;
  out.data_rng = data_rng;
  out.epoch = epoch;
  out.step = step;
  return out;
}

TrainerState initial_state(const TrainingConfig& cfg) {
  validate(cfg);
  TrainerState s;
  s.config = cfg;
  s.model = make_model(generator_spec(cfg), discriminator_spec(cfg), cfg.seed);
  s.buffer_x = ReplayBuffer(cfg.buffer_capacity, derive_seed(cfg.seed, 'X'));
  s.buffer_y = ReplayBuffer(cfg.buffer_capacity, derive_seed(cfg.seed, 'Y'));
  s.data_rng.seed(derive_seed(cfg.seed, 'D'));
  return s;
}

Trainer::Trainer(const TrainingConfig& cfg) : state_(initial_state(cfg)) {}

Trainer::Trainer(TrainerState state) : state_(std::move(state)) { validate(state_.config); }

LossBreakdown Trainer::step(const Tensor<float>& x, const Tensor<float>& y, double lr) {
  const auto& cfg = state_.config;
  auto& m = state_.model;
  const bool adversarial = cfg.variant != Variant::cycle_only;
  const bool cyclic = cfg.variant != Variant::gan_only;
  const bool identity = cfg.lambda_identity > 0;
  const std::uint64_t step_no = state_.step;

  LossBreakdown out;
  out.lambda = cfg.lambda;
  out.lambda_identity = cfg.lambda_identity;

  // Generators, against frozen discriminators.
  m.g.params.set_requires_grad(true);
  m.f.params.set_requires_grad(true);
  m.g.params.zero_grad();
  m.f.params.zero_grad();
  m.d_x.params.set_requires_grad(false);
  m.d_y.params.set_requires_grad(false);

  const auto fake_y = m.g(x);
  const auto fake_x = m.f(y);
  GeneratorTerms<float> terms;
  if (adversarial) {
    terms.gan_g = lsgan_generator_term(m.d_y(fake_y));
    terms.gan_f = lsgan_generator_term(m.d_x(fake_x));
    out.gan_g = terms.gan_g.item();
    out.gan_f = terms.gan_f.item();
  }
  if (cyclic) {
    const auto dirs = directions_for(cfg.variant);
    Tensor<float> rec_x, rec_y;
    if (dirs != CycleDirections::backward_only) rec_x = m.f(fake_y);
    if (dirs != CycleDirections::forward_only) rec_y = m.g(fake_x);
    terms.cyc = cycle_loss(x, rec_x, y, rec_y, dirs);
    out.cyc = terms.cyc.item();
  }
  if (identity) {
    terms.idt = identity_loss(m.g(y), y, m.f(x), x);
    out.idt = terms.idt.item();
  }
  const auto total = total_generator_objective(terms, cfg.lambda, cfg.lambda_identity);
  out.total_gen = total.item();
  check_finite(out.gan_g, "gan_g", step_no);
  check_finite(out.gan_f, "gan_f", step_no);
  check_finite(out.cyc, "cyc", step_no);
  check_finite(out.idt, "idt", step_no);
  check_finite(out.total_gen, "total_gen", step_no);
  if (total.requires_grad()) {
    total.backward();
    adam_step(tensors_of({&m.g.params, &m.f.params}), state_.opt_generators, lr, cfg.adam_beta1, cfg.adam_beta2,
              cfg.adam_eps);
  }
  m.g.params.set_requires_grad(false);
  m.f.params.set_requires_grad(false);

  if (adversarial) {
    auto update = [&](Network& d, ReplayBuffer& buffer, AdamState& opt, const Tensor<float>& real,
                      const Tensor<float>& fake, const char* name) {
      const auto shown = buffer.exchange(fake.detach());
      d.params.set_requires_grad(true);
      d.params.zero_grad();
      const auto loss = scale(lsgan_discriminator_term(d(real), d(shown)), 0.5);
      const double value = loss.item();
      check_finite(value, name, step_no);
      loss.backward();
      adam_step(tensors_of({&d.params}), opt, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
      d.params.set_requires_grad(false);
      return value;
    };
    out.disc_x = update(m.d_x, state_.buffer_x, state_.opt_d_x, x, fake_x, "disc_x");
    out.disc_y = update(m.d_y, state_.buffer_y, state_.opt_d_y, y, fake_y, "disc_y");
  }
  ++state_.step;
  return out;
}

void Trainer::train(const DomainDataset& dx, const DomainDataset& dy, const TrainHooks& hooks,
                    std::optional<int> max_epochs) {
  if (dx.empty() || dy.empty()) throw ConfigError("both training domains must be non-empty");
  const auto& cfg = state_.config;
  const Shape expected{1, 3, cfg.resolution, cfg.resolution};
  for (const auto* set : {&dx, &dy})
    for (const auto& s : set->samples)
      if (s.shape() != expected) {
        throw ShapeError("training sample " + shape_string(s.shape()) + " does not match configured " +
                         shape_string(expected));
      }

  int budget = max_epochs.value_or(cfg.total_epochs());
  while (!finished() && budget-- > 0) {
    const int epoch = state_.epoch;
    const double lr = lr_at_epoch(epoch, cfg);
    const auto pairs = epoch_pairs(dx.size(), dy.size(), state_.data_rng);
    for (const auto& [i, j] : pairs) {
      Tensor<float> x = dx.samples[i], y = dy.samples[j];
      if (cfg.crop > 0 && cfg.crop < cfg.resolution) {
        x = random_square_crop(x, cfg.crop, state_.data_rng);
        y = random_square_crop(y, cfg.crop, state_.data_rng);
      }
      StepRecord record{state_.step, epoch, lr, step(x, y, lr)};
      history_.push_back(record);
      if (hooks.on_step) hooks.on_step(record);
    }
    ++state_.epoch;
    const auto& last = history_.back().losses;
    spdlog::info("epoch {}/{} lr {:.3g} total_gen {:.4f} cyc {:.4f} disc_x {:.4f} disc_y {:.4f}", state_.epoch,
                 cfg.total_epochs(), lr, last.total_gen, last.cyc, last.disc_x, last.disc_y);
    const bool due = cfg.checkpoint_every > 0 && state_.epoch % cfg.checkpoint_every == 0;
    if (hooks.on_checkpoint && (due || finished())) hooks.on_checkpoint(*this);
  }
}

TrainingResult train(const TrainingConfig& cfg, const DomainDataset& dx, const DomainDataset& dy,
                     const TrainHooks& hooks) {
  Trainer trainer(cfg);
  trainer.train(dx, dy, hooks);
  return TrainingResult{trainer.state().clone().model, trainer.history()};
}

}  // namespace cyclegan
