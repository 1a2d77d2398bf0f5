#include "vgan/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "vgan/errors.hpp"

namespace vgan {

namespace {

constexpr char kMagic[8] = {'V', 'G', 'A', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  std::uint8_t b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_f32(std::ostream& out, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  put_u32(out, u);
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_tensor(std::ostream& out, const TensorF& t) {
  put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
  for (int e : t.shape) put_u32(out, static_cast<std::uint32_t>(e));
  out.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
}

std::uint32_t get_u32(std::istream& in) {
  std::uint8_t b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw FormatError("truncated checkpoint");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  const std::uint64_t lo = get_u32(in);
  return lo | (static_cast<std::uint64_t>(get_u32(in)) << 32);
}

float get_f32(std::istream& in) {
  const std::uint32_t u = get_u32(in);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

std::string get_string(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  if (n > (1u << 20)) throw FormatError("implausible string length");
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw FormatError("truncated checkpoint");
  return s;
}

TensorF get_tensor(std::istream& in) {
  const std::uint32_t rank = get_u32(in);
  if (rank > 8) throw FormatError("implausible tensor rank");
  Shape shape;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint32_t e = get_u32(in);
    if (e == 0 || e > (1u << 24)) throw FormatError("implausible extent");
    shape.push_back(static_cast<int>(e));
  }
  TensorF t(shape);
  if (!in.read(reinterpret_cast<char*>(t.data.data()),
               static_cast<std::streamsize>(t.data.size() * sizeof(float))))
    throw FormatError("truncated checkpoint tensor");
  return t;
}

void put_adam(std::ostream& out, const AdamState<float>& s) {
  put_u64(out, static_cast<std::uint64_t>(s.step));
  put_f32(out, s.learning_rate);
  put_u32(out, static_cast<std::uint32_t>(s.m.size()));
  for (const auto& t : s.m) put_tensor(out, t);
  for (const auto& t : s.v) put_tensor(out, t);
}

AdamState<float> get_adam(std::istream& in) {
  AdamState<float> s;
  s.step = static_cast<long>(get_u64(in));
  s.learning_rate = get_f32(in);
  const std::uint32_t n = get_u32(in);
  for (std::uint32_t i = 0; i < n; ++i) s.m.push_back(get_tensor(in));
  for (std::uint32_t i = 0; i < n; ++i) s.v.push_back(get_tensor(in));
  return s;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + tmp);
    out.write(kMagic, 8);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(ckpt.config.bands));
    put_u32(out, static_cast<std::uint32_t>(ckpt.config.gen_width));
    for (int w : ckpt.config.disc_widths)
      put_u32(out, static_cast<std::uint32_t>(w));
    put_u64(out, static_cast<std::uint64_t>(ckpt.iteration));

    std::uint32_t count = 0;
    const_cast<Checkpoint&>(ckpt).params.visit_all(
        [&](const std::string&, TensorF&) { ++count; });
    put_u32(out, count);
    const_cast<Checkpoint&>(ckpt).params.visit_all(
        [&](const std::string& name, TensorF& t) {
          put_string(out, name);
          put_tensor(out, t);
        });

    put_adam(out, ckpt.adam_g);
    put_adam(out, ckpt.adam_d);

    put_u32(out, static_cast<std::uint32_t>(ckpt.queues.size()));
    for (const auto& q : ckpt.queues) {
      put_u32(out, static_cast<std::uint32_t>(q.size()));
      for (const auto& t : q) put_tensor(out, t);
    }
    put_string(out, ckpt.rng_state);
    put_string(out, ckpt.sampler_a_state);
    put_string(out, ckpt.sampler_c_state);
    if (!out) throw IoError("checkpoint write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError("cannot move checkpoint into place: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw FormatError("bad checkpoint magic in " + path);
  const std::uint32_t version = get_u32(in);
  if (version != kVersion)
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version));
  Checkpoint ckpt;
  ckpt.config.bands = static_cast<int>(get_u32(in));
  ckpt.config.gen_width = static_cast<int>(get_u32(in));
  for (int& w : ckpt.config.disc_widths) w = static_cast<int>(get_u32(in));
  ckpt.iteration = static_cast<long>(get_u64(in));

  ckpt.params = init_params<float>(ckpt.config, 0);
  const std::uint32_t count = get_u32(in);
  std::uint32_t seen = 0;
  ckpt.params.visit_all([&](const std::string& name, TensorF& t) {
    if (seen++ >= count) throw FormatError("missing parameter " + name);
    const std::string stored = get_string(in);
    if (stored != name)
      throw FormatError("unknown parameter name '" + stored + "', expected '" +
                        name + "'");
    TensorF loaded = get_tensor(in);
    if (loaded.shape != t.shape)
      throw FormatError("shape mismatch for " + name);
    t = std::move(loaded);
  });
  if (seen != count) throw FormatError("extra parameters in checkpoint");

  ckpt.adam_g = get_adam(in);
  ckpt.adam_d = get_adam(in);

  const std::uint32_t nq = get_u32(in);
  for (std::uint32_t i = 0; i < nq; ++i) {
    std::vector<TensorF> q;
    const std::uint32_t n = get_u32(in);
    for (std::uint32_t j = 0; j < n; ++j) q.push_back(get_tensor(in));
    ckpt.queues.push_back(std::move(q));
  }
  ckpt.rng_state = get_string(in);
  ckpt.sampler_a_state = get_string(in);
  ckpt.sampler_c_state = get_string(in);
  return ckpt;
}

}  // namespace vgan
