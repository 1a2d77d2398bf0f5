#pragma once

#include <deque>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vgan/checkpoint.hpp"
#include "vgan/data.hpp"
#include "vgan/losses.hpp"

namespace vgan {

struct TrainConfig {
  float lr_g = 1e-4f;
  float lr_d = 1e-5f;
  float lambda = 50.0f;
  int epoch_size = 6000;
  int epochs = 2;
  int batch = 1;
  int history_capacity = 50;
  int patch_size = 128;
  unsigned seed = 0;
  NetConfig net;
  std::string out_dir;
  int checkpoint_interval = 0;  // extra checkpoints every N iterations, 0 = off

  void validate() const {
    if (lr_g < 0 || lr_d < 0 || lambda < 0)
      throw ValidityError("negative rate or lambda");
    if (epoch_size < 1 || epochs < 1 || history_capacity < 1)
      throw ValidityError("non-positive size in train config");
    if (patch_size % 16 != 0)
      throw DimensionError("patch size must be divisible by 16");
  }
};

// FIFO image cache; sampling never evicts.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(std::size_t capacity) : capacity_(capacity) {}

  void push(TensorF img) {
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(img));
  }

  const TensorF& sample(std::mt19937& rng) const {
    if (items_.empty()) throw ValidityError("sampling from empty history buffer");
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    return items_[pick(rng)];
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<TensorF>& items() const { return items_; }
  void restore(std::vector<TensorF> items) {
    items_.assign(std::make_move_iterator(items.begin()),
                  std::make_move_iterator(items.end()));
  }

 private:
  std::size_t capacity_;
  std::deque<TensorF> items_;
};

struct TrainState {
  TrainConfig config;
  ModelParams<float> params;
  AdamState<float> adam_g, adam_d;
  HistoryBuffer fake_c, real_c, fake_b, real_b;
  std::mt19937 rng;
  long iteration = 0;

  explicit TrainState(const TrainConfig& cfg);

  Checkpoint to_checkpoint(const std::string& sampler_a,
                           const std::string& sampler_c) const;
  static TrainState from_checkpoint(const TrainConfig& cfg, const Checkpoint&);
};

// One iteration: forward generators, feed the history queues,
// discriminator Adam step on buffered samples, generator Adam step on the
// current pair.
LossReport<float> train_step(TrainState& state, const TensorF& x,
                             const TensorF& y);

struct TrainResult {
  std::vector<LossReport<float>> reports;
  std::string final_checkpoint;
};

TrainResult train_loop(const TrainConfig& config, PatchSampler& spectral,
                       PatchSampler& rgb,
                       const std::optional<std::string>& resume_path = {});

void write_report_csv(const std::vector<LossReport<float>>& reports,
                      const std::string& path);

}  // namespace vgan
