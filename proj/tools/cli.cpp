#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sgrt/bench.hpp"
#include "sgrt/config.hpp"
#include "sgrt/dataset.hpp"
#include "sgrt/eval.hpp"
#include "sgrt/model.hpp"
#include "sgrt/train.hpp"

namespace sgrt::cli {
namespace {

namespace fs = std::filesystem;

std::vector<Resolution> parse_sizes(const std::string& list) {
  std::vector<Resolution> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(parse_resolution(item));
  return out;
}

std::string default_ladder() {
  std::string s;
  for (const auto& rung : kResolutionLadder) s += (s.empty() ? "" : ",") + rung.resolution.str();
  return s;
}

// masks/<name> next to images/<name>, the gen-toy layout.
fs::path sibling_mask(const fs::path& image) {
  return image.parent_path().parent_path() / "masks" / image.filename();
}

struct GenToyArgs {
  int count = 100;
  std::string out;
  std::uint64_t seed = 0;
  int height = 64;
  int width = 80;
};

struct ReplaceBgArgs {
  std::string manifest, backgrounds, out;
  std::uint64_t seed = 0;
};

struct AugmentPreviewArgs {
  std::string sample, mask, config, out, mask_out;
  std::uint64_t index = 0;
};

struct TrainArgs {
  std::string manifest, config, out, history, checkpoint_dir, backgrounds;
  std::string train_split = "train", val_split;
  std::optional<int> epochs, batch_size, height, width;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
  bool no_augment = false;
  bool quiet = false;
};

struct InferArgs {
  std::string weights, input, output, prob_dir;
};

struct EvalArgs {
  std::string weights, manifest, split = "test", out, name = "sgrt";
  bool json = false;
};

struct BenchArgs {
  std::string sizes = default_ladder();
  int iters = 200;
  int warmup = 20;
  std::string out;
};

struct ParamsArgs {
  std::string weights;
  int height = 240;
  int width = 320;
  bool json = false;
};

int gen_toy(const GenToyArgs& a, std::ostream& out) {
  const auto m = write_toy_dataset(a.out, a.count, a.seed, a.height, a.width);
  out << "wrote " << m.entries.size() << " scenes to " << a.out << " (train " << m.split("train").size()
      << ", test " << m.split("test").size() << ")\n";
  return kExitOk;
}

int replace_bg(const ReplaceBgArgs& a, std::ostream& out) {
  const DatasetManifest in = load_manifest(a.manifest);
  const auto pool = load_backgrounds(a.backgrounds);
  const fs::path dir = a.out;
  DatasetManifest m = in;
  m.root = dir;
  for (std::size_t i = 0; i < in.entries.size(); ++i) {
    const SegmentationSample s = load_sample(in.image_path(i), in.mask_path(i));
    Rng rng(derive_seed(a.seed, i));
    const auto& bg = pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
    fs::create_directories((dir / m.entries[i].image).parent_path());
    fs::create_directories((dir / m.entries[i].mask).parent_path());
    save_sample(replace_background(s, bg), dir / m.entries[i].image, dir / m.entries[i].mask);
  }
  save_manifest(m, dir / "manifest.json");
  out << "replaced backgrounds of " << m.entries.size() << " samples into " << a.out << '\n';
  return kExitOk;
}

int augment_preview(const AugmentPreviewArgs& a, std::ostream& out) {
  const fs::path mask = a.mask.empty() ? sibling_mask(a.sample) : fs::path(a.mask);
  const SegmentationSample s = load_sample(a.sample, mask);
  const ResolvedConfig cfg = a.config.empty() ? ResolvedConfig{} : load_config(a.config);
  const SegmentationSample aug = apply_pipeline(s, cfg.augment, a.index);
  write_png_tensor(a.out, aug.image);
  if (!a.mask_out.empty()) write_png(a.mask_out, encode_mask(aug.mask));
  out << "wrote " << a.out << '\n';
  return kExitOk;
}

int train(const TrainArgs& a, std::ostream& out) {
  ResolvedConfig cfg = a.config.empty() ? ResolvedConfig{} : load_config(a.config);
  if (a.epochs) cfg.train.max_epochs = *a.epochs;
  if (a.batch_size) cfg.train.batch_size = *a.batch_size;
  if (a.lr) cfg.train.initial_lr = *a.lr;
  if (a.seed) cfg.train.seed = *a.seed;
  if (a.height) cfg.model.input_height = *a.height;
  if (a.width) cfg.model.input_width = *a.width;
  cfg.model.validate();
  cfg.train.input_height = cfg.model.input_height;
  cfg.train.input_width = cfg.model.input_width;
  cfg.train.validate();

  const DatasetManifest m = load_manifest(a.manifest);
  const auto& train_idx = m.split(a.train_split);
  std::string val_split = a.val_split;
  if (val_split.empty()) val_split = m.splits.count("val") ? "val" : "test";
  const auto& val_idx = m.split(val_split);
  const ManifestSource source(m);

  ModelOptions mo;
  mo.leaky_slope = cfg.model.leaky_slope;
  SegModel model = SegModel::build(cfg.model.input_height, cfg.model.input_width, cfg.model.seed, mo);
  FitOptions fo;
  if (!a.no_augment) fo.augmentation = cfg.augment;
  if (!a.backgrounds.empty()) fo.backgrounds = load_backgrounds(a.backgrounds);
  if (!a.history.empty()) fo.history_csv = a.history;
  if (!a.checkpoint_dir.empty()) fo.checkpoint_dir = a.checkpoint_dir;
  if (!a.quiet)
    fo.on_epoch = [&out](const EpochRecord& r) {
      char line[160];
      std::snprintf(line, sizeof line, "epoch %4d  train %.5f  val %.5f  lr %.3g  %.1fs\n", r.epoch, r.train_loss,
                    r.val_loss, r.lr, r.seconds);
      out << line << std::flush;
    };
  const FitResult r = fit(model, source, train_idx, val_idx, cfg.train, fo);
  save_weights(model, a.out);
  out << "best epoch " << r.best_epoch << ", val loss " << r.best_val_loss << (r.stopped_early ? " (early stop)" : "")
      << "; weights written to " << a.out << '\n';
  return kExitOk;
}

int infer(const InferArgs& a, std::ostream& out) {
  const SegModel model = prepare_inference(load_model(a.weights));
  const Shape in = model.input_shape();
  const Tensor image = subsample_image(read_png_tensor(a.input), in.height, in.width);
  const Tensor probs = sigmoid(model.predict(image));
  write_png(a.output, encode_mask(probabilities_to_mask(probs)));
  if (!a.prob_dir.empty()) {
    fs::create_directories(a.prob_dir);
    for (int c = 0; c < kClassCount; ++c) {
      RgbImage gray{in.height, in.width, std::vector<std::uint8_t>(in.pixels() * 3)};
      for (std::size_t p = 0; p < in.pixels(); ++p) {
        const auto v = static_cast<std::uint8_t>(std::lround(std::clamp(probs[p * kClassCount + c], 0.0f, 1.0f) * 255));
        gray.bytes[3 * p] = gray.bytes[3 * p + 1] = gray.bytes[3 * p + 2] = v;
      }
      write_png(fs::path(a.prob_dir) / ("prob_" + std::string(kClassNames[c]) + ".png"), gray);
    }
  }
  out << "wrote " << a.output << " (" << in.width << "x" << in.height << ")\n";
  return kExitOk;
}

int eval(const EvalArgs& a, std::ostream& out) {
  const SegModel model = prepare_inference(load_model(a.weights));
  const DatasetManifest m = load_manifest(a.manifest);
  const ManifestSource source(m, false);
  EvalReport report = evaluate_model(model, source, m.split(a.split));
  report.configuration = a.name;
  if (!a.out.empty()) export_report(report, a.out);
  if (a.json) {
    out << summary_json(report) << '\n';
  } else {
    for (const auto& [label, index] : kSummaryRows) {
      const ClassResult& c = index < 0 ? report.all : report.classes[index];
      char line[96];
      if (c.defined)
        std::snprintf(line, sizeof line, "%-6s %.4f  (%zu positive pixels)\n", std::string(label).c_str(), c.ap,
                      c.positives);
      else
        std::snprintf(line, sizeof line, "%-6s n/a     (no positive pixels)\n", std::string(label).c_str());
      out << line;
    }
  }
  return kExitOk;
}

int bench(const BenchArgs& a, std::ostream& out) {
  const auto sizes = parse_sizes(a.sizes);
  const ScalingReport rep = scaling_report(sizes, a.iters, a.warmup);
  if (!a.out.empty()) write_bench_csv(rep, a.out);
  out << "# host: " << rep.results.front().host << '\n';
  for (const auto& b : rep.results) {
    char line[128];
    const auto ref = reference_ms(b.resolution);
    std::snprintf(line, sizeof line, "%-8s median %8.3f ms  mean %8.3f  p95 %8.3f", b.resolution.str().c_str(),
                  b.median_ms, b.mean_ms, b.p95_ms);
    out << line;
    if (ref) out << "  (NAO v6: " << *ref << " ms)";
    out << '\n';
  }
  char line[128];
  std::snprintf(line, sizeof line, "fit: %.4f ms/kpx + %.3f ms, r2 %.4f, %s\n", rep.ms_per_kilopixel,
                rep.intercept_ms, rep.r_squared, rep.monotone ? "monotone" : "not monotone");
  out << line;
  return kExitOk;
}

int params(const ParamsArgs& a, std::ostream& out) {
  const SegModel model = a.weights.empty() ? SegModel::build(a.height, a.width, 1) : load_model(a.weights);
  const ParameterCount pc = count_parameters(model);
  if (a.json) {
    nlohmann::ordered_json j;
    j["trainable"] = pc.trainable;
    j["running_stats"] = pc.running_stats;
    j["layers"] = nlohmann::ordered_json::array();
    for (const auto& l : pc.layers)
      j["layers"].push_back({{"node", l.node},
                             {"in", l.in_channels},
                             {"out", l.out_channels},
                             {"stride", l.stride},
                             {"depthwise", l.depthwise},
                             {"pointwise", l.pointwise},
                             {"bias", l.bias},
                             {"bn_affine", l.bn_affine},
                             {"running_stats", l.running_stats},
                             {"trainable", l.trainable()}});
    out << j.dump(2) << '\n';
    return kExitOk;
  }
  out << "node   in  out  s  depthwise  pointwise  bias  bn  trainable\n";
  for (const auto& l : pc.layers) {
    char line[128];
    std::snprintf(line, sizeof line, "%4d %4d %4d %2d %10zu %10zu %5zu %3zu %10zu\n", l.node, l.in_channels,
                  l.out_channels, l.stride, l.depthwise, l.pointwise, l.bias, l.bn_affine, l.trainable());
    out << line;
  }
  out << "trainable parameters: " << pc.trainable << '\n';
  out << "batch-norm running statistics: " << pc.running_stats << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tiny real-time segmentation toolkit", "sgrt"};
  app.require_subcommand(1, 1);

  GenToyArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-toy", "Generate procedural toy scenes, masks and a manifest");
  gen_cmd->add_option("--count", gen.count, "Number of scenes")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--height", gen.height, "Scene height")->check(CLI::Range(32, 4096));
  gen_cmd->add_option("--width", gen.width, "Scene width")->check(CLI::Range(32, 4096));

  ReplaceBgArgs rbg;
  auto* rbg_cmd = app.add_subcommand("replace-bg", "Replace the background class with images from a directory");
  rbg_cmd->add_option("--manifest", rbg.manifest)->required();
  rbg_cmd->add_option("--backgrounds", rbg.backgrounds, "Directory of PNG backgrounds")->required();
  rbg_cmd->add_option("--out", rbg.out, "Output dataset directory")->required();
  rbg_cmd->add_option("--seed", rbg.seed);

  AugmentPreviewArgs ap;
  auto* ap_cmd = app.add_subcommand("augment-preview", "Apply the augmentation pipeline to one sample");
  ap_cmd->add_option("--sample", ap.sample, "Image PNG")->required();
  ap_cmd->add_option("--mask", ap.mask, "Mask PNG (default: ../masks/<name>)");
  ap_cmd->add_option("--config", ap.config, "JSON config");
  ap_cmd->add_option("--index", ap.index, "Sample index for the random stream");
  ap_cmd->add_option("--out", ap.out, "Output image PNG")->required();
  ap_cmd->add_option("--mask-out", ap.mask_out, "Output mask PNG");

  TrainArgs tr;
  auto* tr_cmd = app.add_subcommand("train", "Train a model on a manifest");
  tr_cmd->add_option("--manifest", tr.manifest)->required();
  tr_cmd->add_option("--config", tr.config, "JSON config");
  tr_cmd->add_option("--out", tr.out, "Output weight file")->required();
  tr_cmd->add_option("--history", tr.history, "CSV history path");
  tr_cmd->add_option("--checkpoint-dir", tr.checkpoint_dir);
  tr_cmd->add_option("--backgrounds", tr.backgrounds, "Background pool directory");
  tr_cmd->add_option("--train-split", tr.train_split);
  tr_cmd->add_option("--val-split", tr.val_split, "Default: val if present, else test");
  tr_cmd->add_option("--epochs", tr.epochs);
  tr_cmd->add_option("--batch-size", tr.batch_size);
  tr_cmd->add_option("--lr", tr.lr);
  tr_cmd->add_option("--seed", tr.seed);
  tr_cmd->add_option("--height", tr.height, "Model input height");
  tr_cmd->add_option("--width", tr.width, "Model input width");
  tr_cmd->add_flag("--no-augment", tr.no_augment);
  tr_cmd->add_flag("--quiet", tr.quiet);

  InferArgs inf;
  auto* inf_cmd = app.add_subcommand("infer", "Segment one image");
  inf_cmd->add_option("--weights", inf.weights)->required();
  inf_cmd->add_option("--input", inf.input)->required();
  inf_cmd->add_option("--output", inf.output, "Palette mask PNG")->required();
  inf_cmd->add_option("--prob-dir", inf.prob_dir, "Directory for per-class probability maps");

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "Per-pixel PR curves and AP on a split");
  ev_cmd->add_option("--weights", ev.weights)->required();
  ev_cmd->add_option("--manifest", ev.manifest)->required();
  ev_cmd->add_option("--split", ev.split);
  ev_cmd->add_option("--out", ev.out, "Directory for curves and summary");
  ev_cmd->add_option("--name", ev.name, "Configuration label in the summary");
  ev_cmd->add_flag("--json", ev.json, "Print the summary as JSON");

  BenchArgs bn;
  auto* bn_cmd = app.add_subcommand("bench", "Inference latency across resolutions");
  bn_cmd->add_option("--sizes", bn.sizes, "Comma-separated WxH list");
  bn_cmd->add_option("--iters", bn.iters)->check(CLI::PositiveNumber);
  bn_cmd->add_option("--warmup", bn.warmup)->check(CLI::NonNegativeNumber);
  bn_cmd->add_option("--out", bn.out, "CSV path");

  ParamsArgs pa;
  auto* pa_cmd = app.add_subcommand("params", "Parameter count and per-layer breakdown");
  pa_cmd->add_option("--weights", pa.weights);
  pa_cmd->add_option("--height", pa.height, "Input height without --weights");
  pa_cmd->add_option("--width", pa.width, "Input width without --weights");
  pa_cmd->add_flag("--json", pa.json);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto selected = app.get_subcommands();
    err << (selected.empty() ? app.help() : selected.front()->help());
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return gen_toy(gen, out);
    if (*rbg_cmd) return replace_bg(rbg, out);
    if (*ap_cmd) return augment_preview(ap, out);
    if (*tr_cmd) return train(tr, out);
    if (*inf_cmd) return infer(inf, out);
    if (*ev_cmd) return eval(ev, out);
    if (*bn_cmd) return bench(bn, out);
    if (*pa_cmd) return params(pa, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace sgrt::cli
