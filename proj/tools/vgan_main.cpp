// vgan: train, visualize, evaluate, baseline, synth.
//
// Exit codes: 0 ok, 1 usage, 2 I/O or file format, 3 numeric divergence,
// 4 shape mismatch. No subcommand leaves partial outputs behind: files are
// written to a temporary sibling and renamed on success.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vgan/baselines.hpp"
#include "vgan/metrics.hpp"
#include "vgan/training.hpp"

using namespace vgan;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitShape = 4;

std::string fnv1a_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::uint64_t h = 1469598103934665603ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

void rename_into_place(const std::string& tmp, const std::string& path) {
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place: " + path);
  }
}

void write_png_atomic(const RgbImage& img, const std::string& path) {
  const std::string tmp = path + ".tmp";
  write_png(img, tmp);
  rename_into_place(tmp, path);
}

void write_json_atomic(const json& j, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot create " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
  }
  rename_into_place(tmp, path);
}

void write_cube_atomic(const SpectralCube& cube, const std::string& path) {
  const std::string tmp = path + ".tmp";
  save_cube(cube, tmp);
  rename_into_place(tmp, path);
}

// Effective flag values for provenance sidecars.
json effective_config(const CLI::App* cmd) {
  json j;
  for (const CLI::Option* opt : cmd->get_options()) {
    const std::string name = opt->get_lnames().empty() ? opt->get_name()
                                                       : opt->get_lnames()[0];
    if (name == "help" || name == "config") continue;
    const auto& results = opt->results();
    if (results.empty()) continue;
    if (results.size() == 1)
      j[name] = results[0];
    else
      j[name] = results;
  }
  return j;
}

std::vector<std::string> list_pngs(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png")
      out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw IoError("no .png files in " + dir);
  return out;
}

struct TrainArgs {
  std::vector<std::string> cubes;
  std::string rgb_dir, out_dir, resume;
  unsigned seed = 0;
  std::string preset;
  float lr_g = 1e-4f, lr_d = 1e-5f, lambda = 50.0f;
  int epochs = 2, epoch_size = 6000, patch = 0, checkpoint_interval = 0;
};

int cmd_train(const CLI::App* cmd, const TrainArgs& a) {
  TrainConfig cfg;
  cfg.lr_g = a.lr_g;
  cfg.lr_d = a.lr_d;
  cfg.lambda = a.lambda;
  cfg.epochs = a.epochs;
  cfg.epoch_size = a.epoch_size;
  cfg.seed = a.seed;
  cfg.out_dir = a.out_dir;
  cfg.checkpoint_interval = a.checkpoint_interval;

  std::vector<TensorF> cubes;
  int bands = 0;
  for (const auto& path : a.cubes) {
    const SpectralCube cube = load_cube(path);
    if (bands == 0) bands = cube.bands;
    if (cube.bands != bands)
      throw DimensionError("cube band counts differ across inputs");
    cubes.push_back(normalize_cube(cube, compute_stats(cube)));
  }
  cfg.net.bands = bands;
  if (a.preset == "desk") {
    cfg.net = NetConfig::tiny(bands);
    cfg.patch_size = 32;
    cfg.epoch_size = std::min(cfg.epoch_size, 1500);
    cfg.epochs = 1;
  }
  if (a.patch > 0) cfg.patch_size = a.patch;
  cfg.validate();

  std::vector<TensorF> rgb;
  for (const auto& path : list_pngs(a.rgb_dir))
    rgb.push_back(rgb_to_tensor(read_png(path)));

  fs::create_directories(cfg.out_dir);
  PatchSampler spectral(cubes, cfg.patch_size, cfg.seed + 10);
  PatchSampler references(rgb, cfg.patch_size, cfg.seed + 20);
  std::optional<std::string> resume;
  if (!a.resume.empty()) resume = a.resume;

  const TrainResult result = train_loop(cfg, spectral, references, resume);

  json meta;
  meta["command"] = "train";
  meta["flags"] = effective_config(cmd);
  meta["iterations"] = result.reports.size();
  meta["final_checkpoint"] = result.final_checkpoint;
  json digests;
  for (const auto& path : a.cubes) digests[path] = fnv1a_digest(path);
  meta["input_digests"] = digests;
  write_json_atomic(meta, cfg.out_dir + "/run_meta.json");
  std::cout << "final checkpoint: " << result.final_checkpoint << "\n";
  return 0;
}

int cmd_visualize(const CLI::App* cmd, const std::string& ckpt_path,
                  const std::string& cube_path, const std::string& out_path,
                  int tile) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const SpectralCube cube = load_cube(cube_path);
  if (cube.bands != ckpt.config.bands)
    throw DimensionError("checkpoint expects " +
                         std::to_string(ckpt.config.bands) + " bands, cube has " +
                         std::to_string(cube.bands));
  ModelParams<float> params = ckpt.params;
  const TensorF norm = normalize_cube(cube, compute_stats(cube));
  const TensorF vis = stitch_tiles(
      norm, [&](const TensorF& p) { return eval_visualize(params, p); }, tile);
  write_png_atomic(tensor_to_rgb(vis), out_path);

  json meta;
  meta["command"] = "visualize";
  meta["flags"] = effective_config(cmd);
  meta["input_digests"] = {{cube_path, fnv1a_digest(cube_path)},
                           {ckpt_path, fnv1a_digest(ckpt_path)}};
  write_json_atomic(meta, out_path + ".meta.json");
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_evaluate(const CLI::App* cmd, const std::vector<std::string>& images,
                 const std::string& truth_path, const std::string& out_path,
                 bool exact, long samples, unsigned seed) {
  std::optional<RgbImage> truth;
  if (!truth_path.empty()) truth = read_png(truth_path);

  json reports = json::array();
  for (const auto& path : images) {
    const RgbImage img = read_png(path);
    if (truth && (truth->height != img.height || truth->width != img.width))
      throw DimensionError("size mismatch: " + path + " vs truth");
    const std::size_t npix = static_cast<std::size_t>(img.height) * img.width;
    const bool use_exact = exact && npix <= 65536;
    const MetricReport r =
        evaluate(img, truth ? &*truth : nullptr, use_exact, samples, seed);
    json e;
    e["image"] = path;
    e["digest"] = fnv1a_digest(path);
    e["entropy"] = r.entropy;
    if (r.rmse) e["rmse"] = *r.rmse;
    e["corr"] = r.corr;
    e["separability"] = r.separability;
    e["separability_exact"] = r.separability_exact;
    if (!r.separability_exact) {
      e["separability_samples"] = r.separability_samples;
      e["separability_seed"] = r.separability_seed;
    }
    reports.push_back(e);
  }

  json out;
  out["command"] = "evaluate";
  out["flags"] = effective_config(cmd);
  // The printed forms of the RMSE and correlation formulas omit the square
  // and square root; both corrections are applied here.
  out["notes"] = {"rmse uses squared differences under the root",
                  "corr uses the square-rooted variance product"};
  if (truth) out["truth_digest"] = fnv1a_digest(truth_path);
  out["reports"] = reports;
  if (out_path.empty())
    std::cout << out.dump(2) << "\n";
  else
    write_json_atomic(out, out_path);
  return 0;
}

int cmd_baseline(const CLI::App* cmd, const std::string& cube_path,
                 const std::vector<std::string>& methods,
                 const std::string& out_dir, int k) {
  const SpectralCube cube = load_cube(cube_path);
  fs::create_directories(out_dir);
  json meta;
  meta["command"] = "baseline";
  meta["flags"] = effective_config(cmd);
  meta["input_digests"] = {{cube_path, fnv1a_digest(cube_path)}};
  for (const auto& method : methods) {
    RgbImage img;
    if (method == "lp") {
      const BandSelection sel = lp_band_select(cube, k);
      std::cout << "lp selected bands:";
      for (int idx : sel.indices) std::cout << " " << idx;
      std::cout << "\n";
      json jsel = json::array();
      for (int idx : sel.indices) jsel.push_back(idx);
      meta["lp_selection"] = jsel;
      img = render_band_selection(cube, sel);
    } else if (method == "cmf") {
      img = stretched_cmf(cube);
    } else {
      img = pca_false_color(cube);
    }
    write_png_atomic(img, out_dir + "/" + method + ".png");
  }
  write_json_atomic(meta, out_dir + "/baseline_meta.json");
  return 0;
}

int cmd_synth(const CLI::App* cmd, const std::string& source_path,
              const std::string& out_path, int bands, float sigma,
              unsigned seed) {
  const RgbImage src = read_png(source_path);
  const SyntheticLift lift = make_lift(bands, sigma, seed);
  const SpectralCube cube = synthesize_cube(src, lift);
  write_cube_atomic(cube, out_path);
  save_lift_sidecar(lift, out_path + ".lift.json");

  json meta;
  meta["command"] = "synth";
  meta["flags"] = effective_config(cmd);
  meta["input_digests"] = {{source_path, fnv1a_digest(source_path)}};
  write_json_atomic(meta, out_path + ".meta.json");
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cycle-consistent spectral-to-RGB visualization toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "optional key=value configuration file; "
                                 "command-line flags take precedence");

  TrainArgs ta;
  CLI::App* train = app.add_subcommand("train", "train the networks");
  train->add_option("--cube", ta.cubes, "SPC1 spectral cube(s)")->required();
  train->add_option("--rgb", ta.rgb_dir, "directory of reference RGB PNGs")
      ->required();
  train->add_option("--out", ta.out_dir, "output directory")->required();
  train->add_option("--seed", ta.seed, "RNG seed");
  train->add_option("--preset", ta.preset, "configuration preset")
      ->check(CLI::IsMember({"desk"}));
  train->add_option("--resume", ta.resume, "checkpoint to resume from");
  train->add_option("--lr-g", ta.lr_g, "generator learning rate");
  train->add_option("--lr-d", ta.lr_d, "discriminator learning rate");
  train->add_option("--lambda", ta.lambda, "cycle loss weight");
  train->add_option("--epochs", ta.epochs, "epoch count");
  train->add_option("--epoch-size", ta.epoch_size, "iterations per epoch");
  train->add_option("--patch", ta.patch, "training patch size");
  train->add_option("--checkpoint-interval", ta.checkpoint_interval,
                    "extra checkpoint every N iterations");

  std::string vis_ckpt, vis_cube, vis_out;
  int vis_tile = 128;
  CLI::App* visualize =
      app.add_subcommand("visualize", "render a cube with a trained model");
  visualize->add_option("--ckpt", vis_ckpt, "checkpoint file")->required();
  visualize->add_option("--cube", vis_cube, "SPC1 spectral cube")->required();
  visualize->add_option("--out", vis_out, "output PNG")->required();
  visualize->add_option("--tile", vis_tile, "stitching tile size")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> eval_images;
  std::string eval_truth, eval_out;
  bool eval_exact = false;
  long eval_samples = 100000;
  unsigned eval_seed = 0;
  CLI::App* evaluate_cmd =
      app.add_subcommand("evaluate", "compute the four metrics");
  evaluate_cmd->add_option("--image", eval_images, "visualization PNG(s)")
      ->required();
  evaluate_cmd->add_option("--truth", eval_truth, "reference PNG for RMSE");
  evaluate_cmd->add_option("--out", eval_out, "output JSON (stdout if omitted)");
  evaluate_cmd->add_flag("--exact", eval_exact,
                         "exact separability (capped at 65536 pixels)");
  evaluate_cmd->add_option("--samples", eval_samples,
                           "separability sample count");
  evaluate_cmd->add_option("--seed", eval_seed, "separability sampling seed");

  std::string base_cube, base_out = ".";
  std::vector<std::string> base_methods;
  int base_k = 3;
  CLI::App* baseline = app.add_subcommand("baseline", "classic renderings");
  baseline->add_option("--cube", base_cube, "SPC1 spectral cube")->required();
  baseline->add_option("--method", base_methods, "one or more of lp, cmf, pca")
      ->required()
      ->check(CLI::IsMember({"lp", "cmf", "pca"}));
  baseline->add_option("--out", base_out, "output directory");
  baseline->add_option("--k", base_k, "bands to select for lp");

  std::string synth_src, synth_out;
  int synth_bands = 8;
  float synth_sigma = 0.02f;
  unsigned synth_seed = 0;
  CLI::App* synth = app.add_subcommand("synth", "synthesize a spectral cube");
  synth->add_option("--source", synth_src, "source RGB PNG")->required();
  synth->add_option("--out", synth_out, "output SPC1 path")->required();
  synth->add_option("--bands", synth_bands, "band count (>= 4)");
  synth->add_option("--sigma", synth_sigma, "per-band Gaussian noise stddev");
  synth->add_option("--seed", synth_seed, "lift RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(train, ta);
    if (visualize->parsed())
      return cmd_visualize(visualize, vis_ckpt, vis_cube, vis_out, vis_tile);
    if (evaluate_cmd->parsed())
      return cmd_evaluate(evaluate_cmd, eval_images, eval_truth, eval_out,
                          eval_exact, eval_samples, eval_seed);
    if (baseline->parsed())
      return cmd_baseline(baseline, base_cube, base_methods, base_out, base_k);
    if (synth->parsed()) {
      if (synth_bands < 4) {
        std::cerr << "error: --bands must be at least 4\n";
        return kExitUsage;
      }
      return cmd_synth(synth, synth_src, synth_out, synth_bands, synth_sigma,
                       synth_seed);
    }
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitShape;
  } catch (const ValidityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const DegenerateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
