// emofuse command-line front end: synthetic data generation, spectrogram
// export, training, leave-one-actor-out evaluation, and inference.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "emofuse/dataset.hpp"
#include "emofuse/error.hpp"
#include "emofuse/evaluation.hpp"
#include "emofuse/image.hpp"
#include "emofuse/model.hpp"
#include "emofuse/spectrogram.hpp"
#include "emofuse/synthetic.hpp"
#include "emofuse/training.hpp"
#include "emofuse/vision.hpp"

namespace {

namespace fs = std::filesystem;
using namespace emofuse;

struct SpectrogramFlags {
  std::int64_t window = 384;
  std::int64_t hop = 256;
  std::string window_fn = "hann";
  bool raw_magnitude = false;
  int rate = 16000;
  std::int64_t bins = 192;
  std::int64_t frames = 120;

  SpectrogramOptions to_options() const {
    SpectrogramOptions opts;
    opts.window_length = window;
    opts.hop_length = hop;
    opts.window = window_kind_from_name(window_fn);
    opts.log_compress = !raw_magnitude;
    opts.target_rate_hz = rate;
    opts.out_bins = bins;
    opts.out_frames = frames;
    return opts;
  }
};

void add_spectrogram_flags(CLI::App* cmd, SpectrogramFlags& flags) {
  cmd->add_option("--window", flags.window, "STFT window length in samples");
  cmd->add_option("--hop", flags.hop, "STFT hop length in samples");
  cmd->add_option("--window-fn", flags.window_fn, "Window function: hann|rect");
  cmd->add_flag("--raw-magnitude", flags.raw_magnitude,
                "Skip log(1+|z|) compression");
  cmd->add_option("--rate", flags.rate, "Resample audio to this rate (Hz)");
  cmd->add_option("--spec-bins", flags.bins, "Frequency rows kept");
  cmd->add_option("--spec-frames", flags.frames,
                  "Time columns after resize");
}

struct TrainFlags {
  double lr = 1e-4;
  double weight_decay = 5e-5;
  bool decoupled_decay = false;
  std::int64_t batch_size = 32;
  std::int64_t epochs = 10;
  std::int64_t patience = 1;
  std::int64_t augment = 0;
  AugmentOptions aug;

  TrainConfig to_config(std::uint64_t seed) const {
    TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.weight_decay = weight_decay;
    cfg.decoupled_weight_decay = decoupled_decay;
    cfg.batch_size = batch_size;
    cfg.max_epochs = epochs;
    cfg.patience = patience;
    cfg.shuffle_seed = seed;
    return cfg;
  }
};

void add_train_flags(CLI::App* cmd, TrainFlags& flags) {
  cmd->add_option("--lr", flags.lr, "Adam learning rate");
  cmd->add_option("--weight-decay", flags.weight_decay, "L2 weight decay");
  cmd->add_flag("--decoupled-decay", flags.decoupled_decay,
                "Apply weight decay decoupled from the gradient");
  cmd->add_option("--batch-size", flags.batch_size, "Mini-batch size");
  cmd->add_option("--epochs", flags.epochs, "Epoch cap");
  cmd->add_option("--patience", flags.patience,
                  "Epochs without validation improvement before stopping");
  cmd->add_option("--augment", flags.augment,
                  "Augmented copies per training clip (0 = off)");
  cmd->add_option("--aug-rotation", flags.aug.max_rotation_deg,
                  "Max augmentation rotation (degrees)");
  cmd->add_option("--aug-crop-area", flags.aug.crop_area,
                  "Kept area of the augmentation crop");
  cmd->add_option("--aug-brightness-lo", flags.aug.brightness_lo,
                  "Brightness scale lower bound");
  cmd->add_option("--aug-brightness-hi", flags.aug.brightness_hi,
                  "Brightness scale upper bound");
  cmd->add_option("--aug-flip-prob", flags.aug.flip_probability,
                  "Horizontal flip probability");
}

void echo_config(const CLI::App& app, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / "config.resolved", std::ios::trunc);
  if (!out) throw IoError("cannot write resolved config under " + dir.string());
  out << app.config_to_str(true, false);
}

ModelConfig model_config_for(std::uint64_t seed, std::int64_t audio_features,
                             const SpectrogramFlags& spec_flags) {
  ModelConfig cfg;
  cfg.init_seed = seed;
  cfg.audio_feature_len = audio_features;
  cfg.visual_feature_len = 4 * audio_features;
  cfg.audio_bins = spec_flags.bins;
  cfg.audio_frames = spec_flags.frames;
  return cfg;
}

int run(int argc, char** argv) {
  CLI::App app{"Audio-visual emotion classifier"};
  app.require_subcommand(1);

  // --- synth ---------------------------------------------------------
  auto* synth = app.add_subcommand(
      "synth", "Generate the synthetic audio-visual dataset");
  std::string synth_out;
  SyntheticSpec synth_spec;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_spec.seed, "Generator seed");
  synth->add_option("--actors", synth_spec.n_actors, "Number of actors");
  synth->add_option("--clips-per-class", synth_spec.clips_per_class,
                    "Clips per class per actor");
  synth->add_option("--frames", synth_spec.frames_per_clip, "Frames per clip");
  synth->add_option("--seconds", synth_spec.clip_seconds, "Clip duration");
  synth->add_option("--noise", synth_spec.noise_level, "Noise level");
  synth->add_option("--sample-rate", synth_spec.sample_rate_hz,
                    "Audio sample rate (Hz)");

  // --- spectrogram ---------------------------------------------------
  auto* spect = app.add_subcommand(
      "spectrogram", "Render a WAV file as a spectrogram image");
  std::string spect_audio, spect_out;
  SpectrogramFlags spect_flags;
  spect->add_option("--audio", spect_audio, "Input WAV file")->required();
  spect->add_option("--out", spect_out, "Output PGM image")->required();
  add_spectrogram_flags(spect, spect_flags);

  // --- train ---------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "Train on a manifest");
  std::string train_manifest, train_checkpoint, train_log, train_out_dir;
  std::string train_mode = "av", train_val_actor;
  std::uint64_t train_seed = 0;
  std::int64_t train_audio_features = 64;
  TrainFlags train_flags;
  SpectrogramFlags train_spec_flags;
  train_cmd->add_option("--manifest", train_manifest, "Dataset manifest")
      ->required();
  train_cmd->add_option("--checkpoint", train_checkpoint,
                        "Best-model checkpoint output")->required();
  train_cmd->add_option("--log", train_log,
                        "Epoch log CSV (default: alongside the checkpoint)");
  train_cmd->add_option("--out-dir", train_out_dir,
                        "Directory for the resolved config echo");
  train_cmd->add_option("--mode", train_mode, "av or video");
  train_cmd->add_option("--val-actor", train_val_actor,
                        "Actor held out for validation");
  train_cmd->add_option("--seed", train_seed, "Global seed");
  train_cmd->add_option("--audio-features", train_audio_features,
                        "Audio feature length (visual is fixed at 4x)");
  add_train_flags(train_cmd, train_flags);
  add_spectrogram_flags(train_cmd, train_spec_flags);

  // --- eval-loo ------------------------------------------------------
  auto* loo = app.add_subcommand(
      "eval-loo", "Leave-one-actor-out evaluation over a manifest");
  std::string loo_manifest, loo_out;
  std::string loo_mode = "av";
  std::uint64_t loo_seed = 0;
  std::int64_t loo_audio_features = 64;
  TrainFlags loo_flags;
  SpectrogramFlags loo_spec_flags;
  loo->add_option("--manifest", loo_manifest, "Dataset manifest")->required();
  loo->add_option("--out", loo_out, "Output directory (fold files, summary)")
      ->required();
  loo->add_option("--mode", loo_mode, "av or video");
  loo->add_option("--seed", loo_seed, "Global seed");
  loo->add_option("--audio-features", loo_audio_features,
                  "Audio feature length (visual is fixed at 4x)");
  add_train_flags(loo, loo_flags);
  add_spectrogram_flags(loo, loo_spec_flags);

  // --- infer ---------------------------------------------------------
  auto* infer = app.add_subcommand(
      "infer", "Classify one clip with a trained checkpoint");
  std::string infer_checkpoint, infer_frames, infer_audio, infer_boxes;
  infer->add_option("--checkpoint", infer_checkpoint, "Model checkpoint")
      ->required();
  infer->add_option("--frames", infer_frames, "Directory of frame images")
      ->required();
  infer->add_option("--audio", infer_audio, "WAV file (audio+video mode)");
  infer->add_option("--boxes", infer_boxes, "Face-box sidecar file");
  SpectrogramFlags infer_spec_flags;
  add_spectrogram_flags(infer, infer_spec_flags);

  // Every subcommand accepts a key=value config file; flags take precedence.
  for (CLI::App* sub : {synth, spect, train_cmd, loo, infer}) {
    sub->set_config("--config", "", "Key=value config file (flags win)");
  }

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed()) {
    const DatasetManifest manifest =
        generate_synthetic_dataset(synth_spec, synth_out);
    echo_config(app, synth_out);
    std::cout << "wrote " << manifest.records.size() << " clips under "
              << synth_out << "\n";
    return 0;
  }

  if (spect->parsed()) {
    const AudioClip clip = load_wav(spect_audio);
    const Spectrogram spec =
        compute_spectrogram(clip, spect_flags.to_options());
    export_pgm(spec, spect_out);
    std::cout << "wrote " << spect_out << " (" << spec.frames() << "x"
              << spec.bins() << ")\n";
    return 0;
  }

  if (train_cmd->parsed()) {
    const FusionMode mode = fusion_mode_from_name(train_mode);
    const DatasetManifest manifest = load_manifest(train_manifest);

    LoaderOptions loader_opts;
    loader_opts.spectrogram = train_spec_flags.to_options();
    ClipLoader loader(manifest.base_dir, loader_opts);

    const bool with_audio = mode == FusionMode::AudioVideo;
    std::vector<ClipSample> train_set, val_set;
    for (const ClipRecord& r : manifest.records) {
      ClipSample s = loader.load(r, with_audio);
      if (!train_val_actor.empty() && r.actor_id == train_val_actor) {
        val_set.push_back(std::move(s));
        continue;
      }
      train_set.push_back(s);
      if (train_flags.augment > 0) {
        const auto expanded =
            expand_dataset(VisualSample{s.visual},
                           train_seed ^ std::hash<std::string>{}(r.clip_id),
                           train_flags.augment, train_flags.aug);
        for (std::size_t i = 1; i < expanded.size(); ++i) {
          ClipSample aug = s;
          aug.clip_id = s.clip_id + "#aug" + std::to_string(i);
          aug.visual = expanded[i].stack;
          train_set.push_back(std::move(aug));
        }
      }
    }
    if (!train_val_actor.empty() && val_set.empty()) {
      throw ConfigError("validation actor '" + train_val_actor +
                        "' has no clips in the manifest");
    }

    ModelConfig model_cfg =
        model_config_for(train_seed, train_audio_features, train_spec_flags);
    model_cfg.mode = mode;
    const FusionModel model = init_model(model_cfg);
    const TrainResult result =
        train(model, train_set, val_set, train_flags.to_config(train_seed));

    save_checkpoint(result.model, train_checkpoint);
    const fs::path log_path = train_log.empty()
                                  ? fs::path(train_checkpoint + ".epochs.csv")
                                  : fs::path(train_log);
    write_epoch_log(log_path, result.reports);
    const fs::path echo_dir = train_out_dir.empty()
                                  ? fs::path(train_checkpoint).parent_path()
                                  : fs::path(train_out_dir);
    if (!echo_dir.empty()) echo_config(app, echo_dir);

    const EpochReport& last = result.reports.back();
    std::cout << "trained " << result.reports.size() << " epochs; final train "
              << "loss " << last.train_loss << ", accuracy "
              << last.train_accuracy << "\n";
    std::cout << "checkpoint: " << train_checkpoint << "\n";
    return 0;
  }

  if (loo->parsed()) {
    const FusionMode mode = fusion_mode_from_name(loo_mode);
    const DatasetManifest manifest = load_manifest(loo_manifest);

    LoaderOptions loader_opts;
    loader_opts.spectrogram = loo_spec_flags.to_options();
    ClipLoader loader(manifest.base_dir, loader_opts);

    LooOptions options;
    options.model = model_config_for(loo_seed, loo_audio_features, loo_spec_flags);
    options.train = loo_flags.to_config(loo_seed);
    options.mode = mode;
    options.fold_dir = loo_out;
    options.seed = loo_seed;
    options.augment_copies = loo_flags.augment;
    options.augment = loo_flags.aug;

    const LooSummary summary = run_loo(manifest, options, loader);
    write_summary_csv(summary, fs::path(loo_out) / "summary.csv");
    echo_config(app, loo_out);
    std::cout << format_summary_table(summary);
    return 0;
  }

  if (infer->parsed()) {
    const FusionModel model = load_checkpoint(infer_checkpoint);
    const bool wants_audio = model.config.mode == FusionMode::AudioVideo;
    if (!wants_audio && !infer_audio.empty()) {
      throw ConfigError(
          "mode mismatch: checkpoint is video-only but --audio was given; "
          "drop the flag or use an audio+video checkpoint");
    }
    if (wants_audio && infer_audio.empty()) {
      throw ConfigError(
          "mode mismatch: checkpoint expects audio+video input; pass --audio");
    }

    ClipRecord record;
    record.clip_id = infer_frames;
    record.frames_path = infer_frames;
    record.audio_path = infer_audio;
    record.boxes_path = infer_boxes;

    LoaderOptions loader_opts;
    loader_opts.spectrogram = infer_spec_flags.to_options();
    loader_opts.n_frames = model.config.n_frames;
    loader_opts.face_height = model.config.visual_height;
    loader_opts.face_width = model.config.visual_width;
    ClipLoader loader(fs::current_path(), loader_opts);

    const ClipSample input = loader.load(record, wants_audio);
    const Prediction pred = predict(
        model, input.visual, input.audio.defined() ? &input.audio : nullptr);

    const auto probs = pred.probabilities.data();
    for (std::size_t i = 0; i < probs.size(); ++i) {
      std::printf("%-8s %.12f\n", emotion_name(std::int64_t(i)).c_str(),
                  probs[i]);
    }
    std::printf("label: %s\n", emotion_name(pred.label).c_str());
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const emofuse::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
