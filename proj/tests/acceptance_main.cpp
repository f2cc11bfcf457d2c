// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Usage:
//   acceptance [--cli <path-to-emofuse>] [--scratch <dir>] [--only <name>]

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "emofuse/adam.hpp"
#include "emofuse/audio.hpp"
#include "emofuse/autodiff.hpp"
#include "emofuse/dataset.hpp"
#include "emofuse/error.hpp"
#include "emofuse/evaluation.hpp"
#include "emofuse/model.hpp"
#include "emofuse/ops.hpp"
#include "emofuse/spectrogram.hpp"
#include "emofuse/synthetic.hpp"
#include "emofuse/training.hpp"
#include "emofuse/vision.hpp"
#include "oracles.hpp"

namespace {

namespace fs = std::filesystem;
using namespace emofuse;
using clock_type = std::chrono::steady_clock;

std::string g_cli_path = "emofuse";
fs::path g_scratch = "/tmp/emofuse_acceptance";

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<void()> body;  // throws on failure
};

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& message) {
  if (!condition) throw Failure(message);
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

// ---------------------------------------------------------------- gradients

// Max relative error between tape gradients and central finite differences
// (step 1e-5) over the listed parameter entries.
double gradient_check(std::vector<Tensor*> params,
                      const std::function<Tensor(Tape*)>& forward,
                      std::int64_t samples_per_tensor = -1,
                      std::uint64_t pick_seed = 0) {
  for (Tensor* p : params) p->zero_grad();
  Tape tape;
  const Tensor loss = forward(&tape);
  tape.backward(loss);
  const auto loss_value = [&]() { return forward(nullptr).at(0); };

  double worst = 0.0;
  std::mt19937_64 rng(pick_seed);
  for (Tensor* p : params) {
    std::vector<std::size_t> picks;
    if (samples_per_tensor < 0 ||
        std::size_t(samples_per_tensor) >= p->size()) {
      picks.resize(p->size());
      for (std::size_t i = 0; i < p->size(); ++i) picks[i] = i;
    } else {
      picks.push_back(0);
      picks.push_back(p->size() - 1);
      for (std::int64_t k = 2; k < samples_per_tensor; ++k) {
        picks.push_back(std::size_t(rng() % p->size()));
      }
    }
    for (const std::size_t i : picks) {
      const double numeric = oracles::finite_difference(*p, i, loss_value);
      worst = std::max(worst, relative_error(p->grad()[i], numeric));
    }
  }
  return worst;
}

void criterion_gradients() {
  double worst = 0.0;
  {
    Tensor signal = oracles::random_tensor({9}, 1, true);
    Tensor kernel = oracles::random_tensor({5}, 2, true);
    worst = std::max(worst, gradient_check({&signal, &kernel}, [&](Tape* t) {
      return cross_entropy(softmax(conv1d(signal, kernel, 2, t), t), 1, t);
    }));
  }
  {
    Tensor input = oracles::random_tensor({2, 6, 5}, 3, true);
    Tensor kernels = oracles::random_tensor({3, 2, 3, 3}, 4, true);
    Tensor bias = oracles::random_tensor({3}, 5, true);
    worst = std::max(worst,
                     gradient_check({&input, &kernels, &bias}, [&](Tape* t) {
                       Tensor out = conv2d(input, kernels, bias, 1, 1, t);
                       return sum(mul(out, out, t), t);
                     }));
  }
  {
    Tensor input = oracles::random_tensor({2, 6, 6}, 6, true);
    worst = std::max(worst, gradient_check({&input}, [&](Tape* t) {
      Tensor out = maxpool2d(input, t);
      return sum(mul(out, out, t), t);
    }));
  }
  {
    Tensor input = oracles::random_tensor({7}, 7, true);
    Tensor weights = oracles::random_tensor({4, 7}, 8, true);
    Tensor bias = oracles::random_tensor({4}, 9, true);
    worst = std::max(worst,
                     gradient_check({&input, &weights, &bias}, [&](Tape* t) {
                       return cross_entropy(
                           softmax(linear(input, weights, bias, t), t), 2, t);
                     }));
  }
  {
    Tensor input = oracles::random_tensor({11}, 10, true);
    worst = std::max(worst, gradient_check({&input}, [&](Tape* t) {
      Tensor out = relu(input, t);
      return sum(mul(out, out, t), t);
    }));
  }
  {
    Tensor scores = oracles::random_tensor({6}, 11, true);
    worst = std::max(worst, gradient_check({&scores}, [&](Tape* t) {
      return cross_entropy(softmax(scores, t), 4, t);
    }));
    Tensor a = oracles::random_tensor({5}, 12, true);
    Tensor b = oracles::random_tensor({3}, 13, true);
    worst = std::max(worst, gradient_check({&a, &b}, [&](Tape* t) {
      Tensor joined = concat(a, b, t);
      return scale(sum(mul(joined, joined, t), t), 0.5, t);
    }));
  }

  // Full fusion model at the real input shapes; a seeded sample of entries
  // per parameter tensor keeps two forward passes per probed entry.
  {
    ModelConfig config;
    config.init_seed = 99;
    FusionModel model = init_model(config);
    const Tensor stack =
        oracles::random_tensor({20, 98, 80}, 14, false, -1.0, 1.0);
    const Tensor spec =
        oracles::random_tensor({1, 192, 120}, 15, false, -1.0, 1.0);
    std::vector<Tensor*> params;
    for (Tensor& p : model.params) params.push_back(&p);
    worst = std::max(
        worst, gradient_check(
                   params,
                   [&](Tape* t) {
                     Tensor scores = forward_fused(model, stack, spec, t);
                     return cross_entropy(softmax(scores, t), 3, t);
                   },
                   3, 1234));
  }

  std::printf("      max relative error %.3g (tolerance 1e-4)\n", worst);
  require(worst <= 1e-4, "gradient mismatch: max relative error " +
                             std::to_string(worst));
}

// --------------------------------------------------------------------- stft

void criterion_stft_oracle() {
  std::mt19937_64 rng(2024);
  const std::array<std::int64_t, 4> windows = {64, 128, 256, 384};
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::int64_t window = windows[std::size_t(i % 4)];
    const std::int64_t hop = (i % 3 == 0) ? window : window / 2;
    const std::size_t length = 600 + rng() % 3000;
    AudioClip clip;
    clip.sample_rate_hz = 16000;
    clip.samples.resize(length);
    for (double& s : clip.samples) {
      s = double(rng() >> 11) * 0x1.0p-52 - 1.0;
    }
    const WindowKind kind =
        (i % 2 == 0) ? WindowKind::Hann : WindowKind::Rectangular;
    const ComplexGrid grid = stft(clip, window, hop, kind);

    std::vector<double> window_values(std::size_t(window), 1.0);
    if (kind == WindowKind::Hann) {
      for (std::int64_t n = 0; n < window; ++n) {
        window_values[std::size_t(n)] =
            0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(n) /
                                 double(window));
      }
    }
    for (std::int64_t t = 0; t < grid.cols; ++t) {
      const auto want = oracles::dft_frame_direct(clip.samples, t * hop,
                                                  window_values, grid.rows);
      for (std::int64_t k = 0; k < grid.rows; ++k) {
        worst = std::max(worst,
                         std::abs(grid.at(k, t) - want[std::size_t(k)]));
      }
    }
  }
  std::printf("      max |stft - naive DFT| = %.3g (tolerance 1e-9)\n", worst);
  require(worst <= 1e-9, "stft deviates from the naive DFT oracle by " +
                             std::to_string(worst));
}

// ------------------------------------------------------------- convolutions

void criterion_conv_oracle() {
  double worst = 0.0;
  std::uint64_t seed = 10;

  for (std::int64_t n = 1; n <= 10; ++n) {
    for (const std::int64_t k : {1, 3, 5}) {
      for (std::int64_t pad = 0; pad <= 3; ++pad) {
        if (n + 2 * pad - k + 1 < 1) continue;
        const Tensor signal = oracles::random_tensor({n}, ++seed);
        const Tensor kernel = oracles::random_tensor({k}, ++seed);
        const Tensor got = conv1d(signal, kernel, pad);
        const auto want = oracles::conv1d_direct(
            {signal.data().begin(), signal.data().end()},
            {kernel.data().begin(), kernel.data().end()}, pad);
        for (std::size_t i = 0; i < want.size(); ++i) {
          worst = std::max(worst, std::abs(got.at(i) - want[i]));
        }
      }
    }
  }

  for (std::int64_t h = 1; h <= 8; ++h) {
    for (std::int64_t w = 1; w <= 8; ++w) {
      for (std::int64_t c = 1; c <= 3; ++c) {
        for (std::int64_t f = 1; f <= 3; ++f) {
          for (const std::int64_t kh : {1, 3}) {
            for (const std::int64_t kw : {1, 3}) {
              for (const std::int64_t pad : {0, 1}) {
                for (const std::int64_t stride : {1, 2}) {
                  if (h + 2 * pad < kh || w + 2 * pad < kw) continue;
                  const Tensor input = oracles::random_tensor({c, h, w}, ++seed);
                  const Tensor kernels =
                      oracles::random_tensor({f, c, kh, kw}, ++seed);
                  const Tensor bias = oracles::random_tensor({f}, ++seed);
                  const Tensor got = conv2d(input, kernels, bias, stride, pad);
                  const Tensor want = oracles::conv2d_direct(input, kernels,
                                                             bias, stride, pad);
                  for (std::size_t i = 0; i < got.size(); ++i) {
                    worst = std::max(worst, std::abs(got.at(i) - want.at(i)));
                  }
                }
              }
            }
          }
        }
      }
    }
  }
  std::printf("      max |conv - direct summation| = %.3g (tolerance 1e-12)\n",
              worst);
  require(worst <= 1e-12, "convolution deviates from the direct-summation "
                          "oracle by " + std::to_string(worst));
}

// ---------------------------------------------------------------- softmax

void criterion_softmax_xent() {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Tensor scores({6});
    for (double& v : scores.data()) {
      v = (double(rng() >> 11) * 0x1.0p-53 - 0.5) * 20.0;
    }
    const Tensor p = softmax(scores);
    double total = 0.0;
    for (std::size_t i = 0; i < 6; ++i) total += p.at(i);
    require(std::abs(total - 1.0) <= 1e-12,
            "softmax sum deviates from 1 by " + std::to_string(total - 1.0));

    Tensor shifted = scores.clone();
    const double shift = (double(rng() >> 11) * 0x1.0p-53 - 0.5) * 200.0;
    for (double& v : shifted.data()) v += shift;
    const Tensor q = softmax(shifted);
    for (std::size_t i = 0; i < 6; ++i) {
      require(std::abs(p.at(i) - q.at(i)) <= 1e-12,
              "softmax is not shift invariant");
    }
  }
  const Tensor uniform = Tensor::full({6}, 1.0 / 6.0);
  for (std::int64_t cls = 0; cls < 6; ++cls) {
    const double loss = cross_entropy(uniform, cls).at(0);
    require(std::abs(loss - std::log(6.0)) <= 1e-12,
            "uniform cross-entropy is not ln 6");
  }
  std::printf("      softmax/cross-entropy identities hold at 1e-12\n");
}

// ------------------------------------------------------------ shape contract

void criterion_shape_contract() {
  const fs::path base = g_scratch / "shapes";
  fs::remove_all(base);
  const std::array<double, 4> durations = {0.5, 1.1, 3.7, 10.0};
  const std::array<std::int64_t, 4> frame_counts = {5, 20, 57, 200};
  for (std::size_t i = 0; i < durations.size(); ++i) {
    SyntheticSpec spec;
    spec.n_actors = 1;
    spec.clips_per_class = 1;
    spec.clip_seconds = durations[i];
    spec.frames_per_clip = frame_counts[i];
    spec.sample_rate_hz = (i == 1) ? 22050 : 16000;  // one foreign rate
    spec.seed = 100 + i;
    const fs::path dir = base / ("case" + std::to_string(i));
    const DatasetManifest manifest = generate_synthetic_dataset(spec, dir);
    ClipLoader loader(dir);
    for (const ClipRecord& record : manifest.records) {
      const ClipSample sample = loader.load(record, true);
      require(sample.visual.shape() ==
                  (std::vector<std::int64_t>{20, 98, 80}),
              "visual stack shape is " + sample.visual.shape_string());
      require(sample.audio.shape() ==
                  (std::vector<std::int64_t>{1, 192, 120}),
              "spectrogram shape is " + sample.audio.shape_string());
      for (const double v : sample.audio.data()) {
        require(v >= 0.0 && v <= 1.0, "spectrogram value out of [0,1]");
      }
    }
    std::printf("      %.1f s / %ld frames -> 1x192x120 and 20x98x80\n",
                durations[i], long(frame_counts[i]));
  }
}

// ------------------------------------------------------------- augmentation

void criterion_augmentation() {
  FrameSequence seq;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    Tensor frame({98, 80});
    for (double& v : frame.data()) v = double(rng() >> 11) * 0x1.0p-53;
    seq.frames.push_back(frame);
  }
  const VisualSample sample{stack_frames(seq)};

  const auto a = expand_dataset(sample, 77);
  const auto b = expand_dataset(sample, 77);
  require(a.size() == 31, "expand_dataset emitted " +
                              std::to_string(a.size()) + " clips, wanted 31");
  require(b.size() == 31, "second expansion emitted a different count");
  for (std::size_t i = 0; i < 31; ++i) {
    require(a[i].stack.shape() == sample.stack.shape(),
            "augmented stack changed shape");
    for (std::size_t j = 0; j < a[i].stack.size(); ++j) {
      require(a[i].stack.at(j) == b[i].stack.at(j),
              "expansion is not deterministic at element " + std::to_string(i));
    }
  }
  for (std::size_t j = 0; j < sample.stack.size(); ++j) {
    require(a[0].stack.at(j) == sample.stack.at(j),
            "element 0 is not the untouched original");
  }
  const auto c = expand_dataset(sample, 78);
  bool any_difference = false;
  for (std::size_t j = 0; j < c[1].stack.size() && !any_difference; ++j) {
    any_difference = c[1].stack.at(j) != a[1].stack.at(j);
  }
  require(any_difference, "different base seeds produced identical variants");
  std::printf("      31 deterministic clips per expansion\n");
}

// ------------------------------------------------------------ overfit sanity

void criterion_overfit() {
  const fs::path dir = g_scratch / "overfit";
  fs::remove_all(dir);
  SyntheticSpec spec;
  spec.n_actors = 1;
  spec.clips_per_class = 1;
  spec.seed = 11;
  const DatasetManifest manifest = generate_synthetic_dataset(spec, dir);
  ClipLoader loader(dir);
  std::vector<ClipSample> clips;
  for (const ClipRecord& record : manifest.records) {
    clips.push_back(loader.load(record, true));
  }
  require(clips.size() == 6, "expected one clip per class");

  ModelConfig config;
  config.init_seed = 5;
  FusionModel model = init_model(config);
  for (Tensor& p : model.params) p.zero_grad();
  AdamConfig adam_cfg;
  adam_cfg.learning_rate = 1e-4;
  adam_cfg.weight_decay = 5e-5;
  AdamState adam(model.params, adam_cfg);

  double loss = 0.0;
  double accuracy = 0.0;
  int steps = 0;
  for (; steps < 200; ++steps) {
    loss = 0.0;
    int correct = 0;
    for (const ClipSample& clip : clips) {
      Tape tape;
      const Tensor scores =
          forward_fused(model, clip.visual, clip.audio, &tape);
      const Tensor probs = softmax(scores, &tape);
      const Tensor sample_loss = cross_entropy(probs, clip.label, &tape);
      tape.backward(scale(sample_loss, 1.0 / 6.0, &tape));
      loss += sample_loss.at(0) / 6.0;
      std::int64_t arg = 0;
      for (std::int64_t i = 1; i < 6; ++i) {
        if (probs.at(std::size_t(i)) > probs.at(std::size_t(arg))) arg = i;
      }
      if (arg == clip.label) ++correct;
    }
    accuracy = double(correct) / 6.0;
    if (accuracy == 1.0 && loss < 0.01) break;
    adam_step(model.params, adam);
    for (Tensor& p : model.params) p.zero_grad();
  }
  std::printf("      loss %.4g, accuracy %.0f%% after %d Adam steps\n", loss,
              accuracy * 100.0, steps);
  require(accuracy == 1.0 && loss < 0.01,
          "failed to memorize 6 clips within 200 steps (loss " +
              std::to_string(loss) + ", accuracy " + std::to_string(accuracy) +
              ")");
}

// ---------------------------------------------------------- fusion advantage

void criterion_fusion_advantage() {
  const fs::path dir = g_scratch / "fusion";
  SyntheticSpec spec;  // defaults: 6 actors, 10 clips/class, confusable pairs
  spec.seed = 21;
  if (!fs::exists(dir / "manifest.tsv")) {
    fs::remove_all(dir);
    generate_synthetic_dataset(spec, dir);
  }
  const DatasetManifest manifest = load_manifest(dir / "manifest.tsv");
  ClipLoader loader(manifest.base_dir);

  LooOptions options;
  options.model.init_seed = 303;
  options.train.learning_rate = 1e-3;
  options.train.weight_decay = 5e-5;
  options.train.batch_size = 16;
  options.train.max_epochs = 2;
  options.train.patience = 2;  // epoch cap dominates
  options.train.shuffle_seed = 303;
  options.seed = 303;

  options.mode = FusionMode::AudioVideo;
  const LooSummary fused = run_loo(manifest, options, loader);
  std::printf("      audio+video mean accuracy %.4f (std %.4f)\n",
              fused.mean_accuracy, fused.std_accuracy);

  options.mode = FusionMode::VideoOnly;
  const LooSummary video = run_loo(manifest, options, loader);
  std::printf("      video-only  mean accuracy %.4f (std %.4f)\n",
              video.mean_accuracy, video.std_accuracy);

  const double gap = fused.mean_accuracy - video.mean_accuracy;
  std::printf("      fusion advantage %.2f accuracy points\n", gap * 100.0);
  require(gap >= 0.05, "audio+video beats video-only by only " +
                           std::to_string(gap * 100.0) + " points (needed 5)");
}

// -------------------------------------------------------------- loo protocol

void criterion_loo_protocol() {
  DatasetManifest manifest;
  for (int a = 0; a < 4; ++a) {
    for (int c = 0; c < 5; ++c) {
      ClipRecord r;
      r.clip_id = "a" + std::to_string(a) + "c" + std::to_string(c);
      r.actor_id = "actor" + std::to_string(a);
      r.label = c % 6;
      r.frames_path = "frames/" + r.clip_id;
      r.audio_path = "audio/" + r.clip_id + ".wav";
      manifest.records.push_back(r);
    }
  }
  const auto actors = manifest.actor_ids();
  require(actors.size() == 4, "distinct actor count");

  std::map<std::string, int> tested;
  for (const std::string& actor : actors) {
    const auto [train, test] = split_loo(manifest, actor);
    require(train.size() + test.size() == manifest.records.size(),
            "fold does not partition the manifest");
    for (const ClipRecord& r : train) {
      require(r.actor_id != actor, "actor leaked into its own training fold");
    }
    for (const ClipRecord& r : test) {
      require(r.actor_id == actor, "foreign actor in the test fold");
      tested[r.clip_id] += 1;
    }
  }
  require(tested.size() == manifest.records.size(),
          "some clip was never tested");
  for (const auto& [clip, count] : tested) {
    require(count == 1, "clip " + clip + " tested " + std::to_string(count) +
                            " times");
  }

  FoldResult f1, f2;
  f1.held_out_actor = "a";
  f1.accuracy = 0.5;
  f1.n_test = 2;
  f1.confusion.assign(6, std::vector<std::int64_t>(6, 0));
  f2 = f1;
  f2.held_out_actor = "b";
  f2.accuracy = 1.0;
  const LooSummary summary = summarize({f1, f2});
  require(summary.mean_accuracy == 0.75, "mean of {0.5, 1.0} is not 0.75");
  require(summary.std_accuracy == 0.25, "population std of {0.5, 1.0} is not 0.25");
  std::printf("      4 actor-disjoint folds, every clip tested once, "
              "mean/std check exact\n");
}

// ------------------------------------------------------------ reproducibility

int run_cli(const std::string& args, std::string* output = nullptr) {
  const std::string command = g_cli_path + " " + args + " 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) return -1;
  std::array<char, 4096> chunk{};
  std::size_t n = 0;
  std::string text;
  while ((n = fread(chunk.data(), 1, chunk.size(), pipe)) > 0) {
    text.append(chunk.data(), n);
  }
  const int status = pclose(pipe);
  if (output != nullptr) *output = text;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), "missing file " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void criterion_reproducibility() {
  const fs::path dir = g_scratch / "repro";
  fs::remove_all(dir);
  fs::create_directories(dir);

  std::string output;
  int rc = run_cli("synth --out " + (dir / "data").string() +
                       " --seed 5 --actors 3 --clips-per-class 1 --frames 6" +
                       " --seconds 0.7",
                   &output);
  require(rc == 0, "synth failed: " + output);

  const std::string train_args =
      "train --manifest " + (dir / "data" / "manifest.tsv").string() +
      " --epochs 1 --batch-size 32 --val-actor actor02 --seed 9 --checkpoint ";
  rc = run_cli(train_args + (dir / "first.ckpt").string(), &output);
  require(rc == 0, "first training run failed: " + output);
  rc = run_cli(train_args + (dir / "second.ckpt").string(), &output);
  require(rc == 0, "second training run failed: " + output);

  const std::string first = file_bytes(dir / "first.ckpt");
  const std::string second = file_bytes(dir / "second.ckpt");
  require(!first.empty(), "empty checkpoint");
  require(first == second, "identical seeds produced different checkpoints");

  const FusionModel loaded = load_checkpoint(dir / "first.ckpt");
  save_checkpoint(loaded, dir / "resaved.ckpt");
  require(file_bytes(dir / "resaved.ckpt") == first,
          "save -> load -> save is not byte-identical");
  std::printf("      checkpoints byte-identical across runs and round-trips\n");
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc) g_cli_path = argv[++i];
    else if (arg == "--scratch" && i + 1 < argc) g_scratch = argv[++i];
    else if (arg == "--only" && i + 1 < argc) only = argv[++i];
    else {
      std::cerr << "unknown argument " << arg << "\n";
      return 2;
    }
  }
  fs::create_directories(g_scratch);

  const std::vector<Criterion> criteria = {
      {"gradient-correctness", 60.0, criterion_gradients},
      {"stft-oracle-equivalence", 60.0, criterion_stft_oracle},
      {"convolution-oracle-equivalence", 60.0, criterion_conv_oracle},
      {"softmax-cross-entropy-analytics", 1800.0, criterion_softmax_xent},
      {"shape-contract", 1800.0, criterion_shape_contract},
      {"augmentation-contract", 1800.0, criterion_augmentation},
      {"overfit-sanity", 300.0, criterion_overfit},
      {"fusion-advantage", 1800.0, criterion_fusion_advantage},
      {"loo-protocol", 1800.0, criterion_loo_protocol},
      {"reproducibility", 1800.0, criterion_reproducibility},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    if (!only.empty() && criterion.name != only) continue;
    const auto start = clock_type::now();
    std::string failure;
    try {
      criterion.body();
    } catch (const std::exception& e) {
      failure = e.what();
    }
    const double seconds =
        std::chrono::duration<double>(clock_type::now() - start).count();
    if (failure.empty() && seconds > criterion.budget_seconds) {
      failure = "runtime " + std::to_string(seconds) + " s exceeds budget " +
                std::to_string(criterion.budget_seconds) + " s";
    }
    if (failure.empty()) {
      std::printf("[PASS] %-34s (%.1f s)\n", criterion.name.c_str(), seconds);
    } else {
      std::printf("[FAIL] %-34s (%.1f s): %s\n", criterion.name.c_str(),
                  seconds, failure.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
