#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "vgan/training.hpp"

using namespace vgan;
namespace fs = std::filesystem;

namespace {

TensorF random_image(Shape s, unsigned seed, float lim = 0.9f) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> dist(-lim, lim);
  TensorF t(std::move(s));
  for (auto& v : t.data) v = dist(rng);
  return t;
}

TrainConfig desk_config(unsigned seed) {
  TrainConfig cfg;
  cfg.net = NetConfig::tiny(5);
  cfg.patch_size = 32;
  cfg.epoch_size = 6;
  cfg.epochs = 1;
  cfg.history_capacity = 4;
  cfg.seed = seed;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

bool same_reports(const std::vector<LossReport<float>>& a,
                  const std::vector<LossReport<float>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].total_g != b[i].total_g) return false;
    if (a[i].total_d != b[i].total_d) return false;
    if (a[i].cycle_loss != b[i].cycle_loss) return false;
    if (a[i].d_real_confidence != b[i].d_real_confidence) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("train config validation") {
  TrainConfig cfg = desk_config(0);
  CHECK_NOTHROW(cfg.validate());
  cfg.patch_size = 20;
  CHECK_THROWS_AS(cfg.validate(), DimensionError);
  cfg = desk_config(0);
  cfg.lambda = -1.0f;
  CHECK_THROWS_AS(cfg.validate(), ValidityError);
  cfg = desk_config(0);
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidityError);
}

TEST_CASE("history buffer below capacity keeps everything in order") {
  HistoryBuffer buf(50);
  for (int i = 0; i < 7; ++i) buf.push(TensorF::full({1}, static_cast<float>(i)));
  CHECK(buf.size() == 7);
  for (int i = 0; i < 7; ++i)
    CHECK(buf.items()[static_cast<std::size_t>(i)].data[0] == static_cast<float>(i));
}

TEST_CASE("history buffer caps at 50 and evicts oldest first") {
  HistoryBuffer buf(50);
  for (int i = 0; i < 80; ++i) buf.push(TensorF::full({1}, static_cast<float>(i)));
  CHECK(buf.size() == 50);
  CHECK(buf.items().front().data[0] == 30.0f);
  CHECK(buf.items().back().data[0] == 79.0f);
}

TEST_CASE("sampling does not evict and is uniform") {
  HistoryBuffer buf(50);
  for (int i = 0; i < 10; ++i) buf.push(TensorF::full({1}, static_cast<float>(i)));
  std::mt19937 rng(1234);
  long counts[10] = {};
  const long draws = 10000;
  for (long d = 0; d < draws; ++d) {
    const float v = buf.sample(rng).data[0];
    ++counts[static_cast<int>(v)];
  }
  CHECK(buf.size() == 10);
  // Chi-square against uniform: 9 dof, critical value 21.67 at alpha=0.01.
  const double expected = static_cast<double>(draws) / 10.0;
  double chi2 = 0.0;
  for (long c : counts) {
    const double d = static_cast<double>(c) - expected;
    chi2 += d * d / expected;
  }
  CHECK(chi2 < 21.67);
}

TEST_CASE("sampling an empty buffer raises") {
  HistoryBuffer buf(50);
  std::mt19937 rng(0);
  CHECK_THROWS_AS(buf.sample(rng), ValidityError);
}

TEST_CASE("zero learning rates freeze parameters while queues still grow") {
  TrainConfig cfg = desk_config(3);
  cfg.lr_g = 0.0f;
  cfg.lr_d = 0.0f;
  TrainState state(cfg);
  std::vector<TensorF> before;
  state.params.visit_all(
      [&](const std::string&, TensorF& t) { before.push_back(t); });
  for (int i = 0; i < 3; ++i)
    train_step(state, random_image({32, 32, 5}, 10 + static_cast<unsigned>(i)),
               random_image({32, 32, 3}, 20 + static_cast<unsigned>(i)));
  std::size_t idx = 0;
  state.params.visit_all([&](const std::string&, TensorF& t) {
    CHECK(t.data == before[idx++].data);
  });
  CHECK(state.fake_c.size() == 3);
  CHECK(state.real_c.size() == 3);
  CHECK(state.fake_b.size() == 3);
  CHECK(state.real_b.size() == 3);
  CHECK(state.iteration == 3);
}

TEST_CASE("discriminator step touches only discriminator parameters") {
  TrainConfig cfg = desk_config(5);
  cfg.lr_g = 0.0f;  // isolate the D update
  TrainState state(cfg);
  std::vector<TensorF> gen_before, disc_before;
  state.params.visit_generators(
      [&](const std::string&, TensorF& t) { gen_before.push_back(t); });
  state.params.visit_discriminators(
      [&](const std::string&, TensorF& t) { disc_before.push_back(t); });
  train_step(state, random_image({32, 32, 5}, 1), random_image({32, 32, 3}, 2));
  std::size_t gi = 0;
  state.params.visit_generators([&](const std::string&, TensorF& t) {
    CHECK(t.data == gen_before[gi++].data);
  });
  std::size_t di = 0;
  bool disc_changed = false;
  state.params.visit_discriminators([&](const std::string&, TensorF& t) {
    if (t.data != disc_before[di++].data) disc_changed = true;
  });
  CHECK(disc_changed);
}

TEST_CASE("generator step touches only generator parameters") {
  TrainConfig cfg = desk_config(6);
  cfg.lr_d = 0.0f;
  TrainState state(cfg);
  std::vector<TensorF> disc_before;
  state.params.visit_discriminators(
      [&](const std::string&, TensorF& t) { disc_before.push_back(t); });
  train_step(state, random_image({32, 32, 5}, 3), random_image({32, 32, 3}, 4));
  std::size_t di = 0;
  state.params.visit_discriminators([&](const std::string&, TensorF& t) {
    CHECK(t.data == disc_before[di++].data);
  });
  bool gen_changed = false;
  std::vector<TensorF> fresh;
  auto ref = init_params<float>(cfg.net, cfg.seed);
  ref.visit_generators([&](const std::string&, TensorF& t) { fresh.push_back(t); });
  std::size_t gi = 0;
  state.params.visit_generators([&](const std::string&, TensorF& t) {
    if (t.data != fresh[gi++].data) gen_changed = true;
  });
  CHECK(gen_changed);
}

TEST_CASE("training is deterministic in the seed") {
  auto run = [](unsigned seed) {
    TrainConfig cfg = desk_config(seed);
    std::vector<TensorF> cube = {random_image({32, 32, 5}, 100)};
    std::vector<TensorF> rgb = {random_image({32, 32, 3}, 101)};
    PatchSampler sa(cube, cfg.patch_size, seed + 2);
    PatchSampler sc(rgb, cfg.patch_size, seed + 3);
    return train_loop(cfg, sa, sc).reports;
  };
  const auto a = run(11);
  const auto b = run(11);
  const auto c = run(12);
  CHECK(same_reports(a, b));
  CHECK_FALSE(same_reports(a, c));
  CHECK(a.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a[i].iteration == static_cast<long>(i) + 1);
}

TEST_CASE("checkpoint resume reproduces the uninterrupted run bit for bit") {
  const fs::path dir_a = fs::temp_directory_path() / "vgan_resume_a";
  const fs::path dir_b = fs::temp_directory_path() / "vgan_resume_b";
  fs::create_directories(dir_a);
  fs::create_directories(dir_b);

  std::vector<TensorF> cube = {random_image({32, 32, 5}, 200)};
  std::vector<TensorF> rgb = {random_image({32, 32, 3}, 201)};

  TrainConfig cfg = desk_config(7);
  cfg.checkpoint_interval = 3;

  cfg.out_dir = dir_a.string();
  {
    PatchSampler sa(cube, cfg.patch_size, 8);
    PatchSampler sc(rgb, cfg.patch_size, 9);
    train_loop(cfg, sa, sc);
  }

  cfg.out_dir = dir_b.string();
  {
    PatchSampler sa(cube, cfg.patch_size, 8);
    PatchSampler sc(rgb, cfg.patch_size, 9);
    train_loop(cfg, sa, sc, (dir_a / "ckpt_iter3").string());
  }

  CHECK(slurp((dir_a / "ckpt_epoch1").string()) ==
        slurp((dir_b / "ckpt_epoch1").string()));
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("report csv has one row per iteration plus a header") {
  const fs::path dir = fs::temp_directory_path() / "vgan_report";
  fs::create_directories(dir);
  TrainConfig cfg = desk_config(13);
  cfg.out_dir = dir.string();
  std::vector<TensorF> cube = {random_image({32, 32, 5}, 300)};
  std::vector<TensorF> rgb = {random_image({32, 32, 3}, 301)};
  PatchSampler sa(cube, cfg.patch_size, 1);
  PatchSampler sc(rgb, cfg.patch_size, 2);
  train_loop(cfg, sa, sc);

  std::ifstream in((dir / "report.csv").string());
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line.substr(0, 9) == "iteration");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == cfg.epoch_size * cfg.epochs);
  fs::remove_all(dir);
}
