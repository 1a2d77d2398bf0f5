#pragma once

#include <string>
#include <vector>

#include "vgan/adam.hpp"
#include "vgan/networks.hpp"

namespace vgan {

// Everything needed to continue training bit-for-bit: parameters,
// optimizer moments, the four discriminator history queues, and the RNG
// streams (training RNG plus the two patch samplers).
struct Checkpoint {
  NetConfig config;
  ModelParams<float> params;
  AdamState<float> adam_g, adam_d;
  long iteration = 0;
  std::vector<std::vector<TensorF>> queues;  // fake_c, real_c, fake_b, real_b
  std::string rng_state;
  std::string sampler_a_state, sampler_c_state;
};

// Binary, little-endian: magic "VGANCKPT", u32 format version, then
// named (length-prefixed) parameter entries of rank/extents/f32 values.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace vgan
