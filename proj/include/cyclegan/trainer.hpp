#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cyclegan/datasets.hpp"
#include "cyclegan/networks.hpp"
#include "cyclegan/objectives.hpp"
#include "cyclegan/tensor.hpp"

namespace cyclegan {

// Which loss terms are active. cycle_only never trains the discriminators.
enum class Variant { full, gan_only, cycle_only, gan_forward, gan_backward };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);
// Row label used in ablation tables, e.g. "GAN + forward cycle".
std::string_view variant_label(Variant v);
inline constexpr Variant kAllVariants[] = {Variant::cycle_only, Variant::gan_only, Variant::gan_forward,
                                           Variant::gan_backward, Variant::full};

struct TrainingConfig {
  double lambda = 10.0;
  double lambda_identity = 0.0;
  double lr0 = 2e-4;
  int epochs_constant = 100;
  int epochs_decay = 100;
  int buffer_capacity = 50;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  Variant variant = Variant::full;
  int resolution = 256;
  std::optional<int> residual_blocks;  // default follows the resolution
  int generator_filters = 64;
  int discriminator_filters = 64;
  int crop = 0;              // random square crop per step; 0 disables
  int checkpoint_every = 0;  // epochs between checkpoints; 0 = only at the end

  int total_epochs() const { return epochs_constant + epochs_decay; }
  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

// Throws ConfigError on out-of-range fields.
void validate(const TrainingConfig& cfg);

NetworkSpec generator_spec(const TrainingConfig& cfg);
NetworkSpec discriminator_spec(const TrainingConfig& cfg);

// lr0 for the first epochs_constant epochs, then a linear ramp that reaches
// 0 at epoch total_epochs(). Accepts 0 <= epoch <= total_epochs().
double lr_at_epoch(int epoch, const TrainingConfig& cfg);

struct AdamState {
  std::vector<Tensor<float>> m;
  std::vector<Tensor<float>> v;
  std::int64_t t = 0;

  AdamState clone() const;
};

// One bias-corrected Adam update of every tensor in `params` from its
// accumulated gradient. Moments are created on the first call.
void adam_step(const std::vector<Tensor<float>>& params, AdamState& state, double lr, double beta1, double beta2,
               double eps);

// History of generated images shown to a discriminator. Until it is full,
// every fake is stored and returned. Afterwards each exchange, with
// probability 1/2, returns a uniformly chosen stored image and keeps the
// fresh one in its slot; otherwise the fresh image is returned unstored.
class ReplayBuffer {
 public:
  ReplayBuffer() = default;
  ReplayBuffer(int capacity, std::uint64_t seed);

  Tensor<float> exchange(const Tensor<float>& fresh);

  int capacity() const { return capacity_; }
  std::size_t size() const { return stored_.size(); }
  const std::vector<Tensor<float>>& stored() const { return stored_; }
  const std::mt19937_64& rng() const { return rng_; }

  // Rebuilds a buffer from persisted contents.
  static ReplayBuffer restore(int capacity, std::vector<Tensor<float>> stored, std::mt19937_64 rng);

 private:
  int capacity_ = 0;
  std::vector<Tensor<float>> stored_;
  std::mt19937_64 rng_;
};

struct StepRecord {
  std::uint64_t step = 0;
  int epoch = 0;
  double lr = 0.0;
  LossBreakdown losses;
};

// Everything needed to continue a run bit-for-bit.
struct TrainerState {
  TrainingConfig config;
  ModelState model;
  AdamState opt_generators;
  AdamState opt_d_x;
  AdamState opt_d_y;
  ReplayBuffer buffer_x;
  ReplayBuffer buffer_y;
  std::mt19937_64 data_rng;
  int epoch = 0;  // completed epochs
  std::uint64_t step = 0;

  // Deep copy; training the copy leaves this one untouched.
  TrainerState clone() const;
};

TrainerState initial_state(const TrainingConfig& cfg);

class Trainer;

struct TrainHooks {
  std::function<void(const StepRecord&)> on_step;
  // Called every checkpoint_every epochs and after the final epoch. An
  // exception thrown here stops training; the trainer keeps its state.
  std::function<void(const Trainer&)> on_checkpoint;
};

class Trainer {
 public:
  explicit Trainer(const TrainingConfig& cfg);
  explicit Trainer(TrainerState state);

  // One optimization step on a single (x, y) pair.
  LossBreakdown step(const Tensor<float>& x, const Tensor<float>& y, double lr);

  // Runs the remaining epochs (or at most `max_epochs` of them). Each epoch
  // draws epoch_pairs from the data generator and performs one step per pair.
  void train(const DomainDataset& dx, const DomainDataset& dy, const TrainHooks& hooks = {},
             std::optional<int> max_epochs = std::nullopt);

  bool finished() const { return state_.epoch >= state_.config.total_epochs(); }
  const TrainerState& state() const { return state_; }
  const ModelState& model() const { return state_.model; }
  const std::vector<StepRecord>& history() const { return history_; }

 private:
  TrainerState state_;
  std::vector<StepRecord> history_;
};

struct TrainingResult {
  ModelState model;
  std::vector<StepRecord> history;
};

TrainingResult train(const TrainingConfig& cfg, const DomainDataset& dx, const DomainDataset& dy,
                     const TrainHooks& hooks = {});

}  // namespace cyclegan
