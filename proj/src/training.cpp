#include "vgan/training.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace vgan {

namespace {

std::string rng_to_string(const std::mt19937& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void rng_from_string(std::mt19937& rng, const std::string& s) {
  std::istringstream is(s);
  is >> rng;
  if (is.fail()) throw FormatError("bad RNG state in checkpoint");
}

}  // namespace

TrainState::TrainState(const TrainConfig& cfg)
    : config(cfg),
      params(init_params<float>(cfg.net, cfg.seed)),
      fake_c(static_cast<std::size_t>(cfg.history_capacity)),
      real_c(static_cast<std::size_t>(cfg.history_capacity)),
      fake_b(static_cast<std::size_t>(cfg.history_capacity)),
      real_b(static_cast<std::size_t>(cfg.history_capacity)),
      rng(cfg.seed + 1) {
  cfg.validate();
  auto gen = [this](auto&& f) { params.visit_generators(f); };
  auto disc = [this](auto&& f) { params.visit_discriminators(f); };
  adam_g = AdamState<float>::init(gen, cfg.lr_g);
  adam_d = AdamState<float>::init(disc, cfg.lr_d);
}

Checkpoint TrainState::to_checkpoint(const std::string& sampler_a,
                                     const std::string& sampler_c) const {
  Checkpoint ckpt;
  ckpt.config = config.net;
  ckpt.params = params;
  ckpt.adam_g = adam_g;
  ckpt.adam_d = adam_d;
  ckpt.iteration = iteration;
  for (const HistoryBuffer* buf : {&fake_c, &real_c, &fake_b, &real_b})
    ckpt.queues.emplace_back(buf->items().begin(), buf->items().end());
  ckpt.rng_state = rng_to_string(rng);
  ckpt.sampler_a_state = sampler_a;
  ckpt.sampler_c_state = sampler_c;
  return ckpt;
}

TrainState TrainState::from_checkpoint(const TrainConfig& cfg,
                                       const Checkpoint& ckpt) {
  TrainState state(cfg);
  state.params = ckpt.params;
  state.adam_g = ckpt.adam_g;
  state.adam_d = ckpt.adam_d;
  state.iteration = ckpt.iteration;
  if (ckpt.queues.size() != 4) throw FormatError("checkpoint needs 4 queues");
  HistoryBuffer* bufs[4] = {&state.fake_c, &state.real_c, &state.fake_b,
                            &state.real_b};
  for (int i = 0; i < 4; ++i) bufs[i]->restore(ckpt.queues[static_cast<std::size_t>(i)]);
  rng_from_string(state.rng, ckpt.rng_state);
  return state;
}

LossReport<float> train_step(TrainState& state, const TensorF& x,
                             const TensorF& y) {
  ModelParams<float>& params = state.params;
  LossReport<float> report;
  report.iteration = state.iteration + 1;

  // (1) Forward generators without gradients.
  TensorF z, fake_c_img, fake_b_img;
  {
    Tape<float> tape;
    Binder<float> bind(tape, false);
    const auto zid = compressor_forward(bind, tape.leaf(x), params.cpr);
    const auto fc = mapper_forward(bind, zid, params.m1);
    const auto fb = mapper_forward(bind, tape.leaf(y), params.m2);
    z = tape.value(zid);
    fake_c_img = tape.value(fc);
    fake_b_img = tape.value(fb);
  }

  // (2) Feed the queues; D_B's real queue holds compressor outputs.
  state.fake_c.push(fake_c_img);
  state.real_c.push(y);
  state.fake_b.push(fake_b_img);
  state.real_b.push(z);

  // (3) Discriminator step on buffered samples.
  {
    const TensorF real_c_s = state.real_c.sample(state.rng);
    const TensorF fake_c_s = state.fake_c.sample(state.rng);
    const TensorF real_b_s = state.real_b.sample(state.rng);
    const TensorF fake_b_s = state.fake_b.sample(state.rng);
    DiscriminatorObjective<float> obj(params, real_c_s, fake_c_s, real_b_s,
                                      fake_b_s);
    obj.backward();
    auto disc = [&](auto&& f) { params.visit_discriminators(f); };
    adam_step(disc, [&](const TensorF& t) { return obj.grad_of(t); },
              state.adam_d);
    obj.fill(report);
  }

  // (4) Generator step on the current pair.
  {
    GeneratorObjective<float> obj(params, x, y, state.config.lambda);
    obj.backward();
    auto gen = [&](auto&& f) { params.visit_generators(f); };
    adam_step(gen, [&](const TensorF& t) { return obj.grad_of(t); },
              state.adam_g);
    obj.fill(report);
  }

  ++state.iteration;
  if (!report.finite()) throw ValidityError("non-finite loss at iteration " +
                                            std::to_string(state.iteration));
  return report;
}

TrainResult train_loop(const TrainConfig& config, PatchSampler& spectral,
                       PatchSampler& rgb,
                       const std::optional<std::string>& resume_path) {
  config.validate();
  std::optional<TrainState> state;
  if (resume_path) {
    const Checkpoint ckpt = load_checkpoint(*resume_path);
    state.emplace(TrainState::from_checkpoint(config, ckpt));
    spectral.set_rng_state(ckpt.sampler_a_state);
    rgb.set_rng_state(ckpt.sampler_c_state);
    std::cerr << "resumed from " << *resume_path << " at iteration "
              << state->iteration << "\n";
  } else {
    state.emplace(config);
  }

  const long total = static_cast<long>(config.epochs) * config.epoch_size;
  TrainResult result;
  auto save = [&](const std::string& name) {
    if (config.out_dir.empty()) return std::string();
    const std::string path = config.out_dir + "/" + name;
    save_checkpoint(state->to_checkpoint(spectral.rng_state(), rgb.rng_state()),
                    path);
    return path;
  };

  LossReport<float> last;
  while (state->iteration < total) {
    const TensorF x = spectral.next();
    const TensorF y = rgb.next();
    try {
      last = train_step(*state, x, y);
    } catch (const ValidityError&) {
      std::cerr << "divergence at iteration " << state->iteration
                << "; last report: total_g=" << last.total_g
                << " total_d=" << last.total_d << "\n";
      throw;
    }
    result.reports.push_back(last);
    if (state->iteration % 100 == 0)
      std::cerr << "iter " << state->iteration << "/" << total
                << " g=" << last.total_g << " d=" << last.total_d
                << " cyc=" << last.cycle_loss << "\n";
    if (config.checkpoint_interval > 0 &&
        state->iteration % config.checkpoint_interval == 0 &&
        state->iteration < total)
      save("ckpt_iter" + std::to_string(state->iteration));
    if (state->iteration % config.epoch_size == 0)
      result.final_checkpoint =
          save("ckpt_epoch" + std::to_string(state->iteration / config.epoch_size));
  }
  if (!config.out_dir.empty())
    write_report_csv(result.reports, config.out_dir + "/report.csv");
  return result;
}

void write_report_csv(const std::vector<LossReport<float>>& reports,
                      const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot create " + path);
    out << "iteration,d_loss_c,d_loss_b,g_adv_ac,g_adv_cb,cycle_loss,"
           "total_g,total_d,d_real_confidence,d_fake_confidence\n";
    char line[256];
    for (const auto& r : reports) {
      std::snprintf(line, sizeof(line),
                    "%ld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                    r.iteration, static_cast<double>(r.d_loss_c),
                    static_cast<double>(r.d_loss_b),
                    static_cast<double>(r.g_adv_ac),
                    static_cast<double>(r.g_adv_cb),
                    static_cast<double>(r.cycle_loss),
                    static_cast<double>(r.total_g),
                    static_cast<double>(r.total_d),
                    static_cast<double>(r.d_real_confidence),
                    static_cast<double>(r.d_fake_confidence));
      out << line;
    }
    if (!out) throw IoError("report write failed: " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError("cannot move report into place: " + path);
}

}  // namespace vgan
