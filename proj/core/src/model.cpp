#include "emofuse/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "emofuse/error.hpp"
#include "emofuse/ops.hpp"

namespace emofuse {

namespace {

using std::int64_t;

struct BranchDims {
  int64_t flat_len = 0;  // flattened extent after the conv stages
  int64_t height = 0;
  int64_t width = 0;
  int64_t channels = 0;
};

BranchDims branch_dims(int64_t in_channels, int64_t h, int64_t w,
                       const std::vector<ConvStage>& stages) {
  int64_t c = in_channels;
  for (const ConvStage& s : stages) {
    c = s.out_channels;
    h = h / 2;  // conv keeps the extent (stride 1, pad k/2), pooling halves
    w = w / 2;
  }
  if (h < 1 || w < 1) {
    throw ConfigError("conv stack pools the input below 1x1");
  }
  return {c * h * w, h, w, c};
}

Tensor he_normal(std::vector<int64_t> shape, int64_t fan_in,
                 std::mt19937_64& rng) {
  Tensor t(std::move(shape), true);
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / double(fan_in)));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

void add_conv_params(FusionModel& model, const std::string& prefix,
                     int64_t in_channels, const std::vector<ConvStage>& stages,
                     std::mt19937_64& rng) {
  int64_t c = in_channels;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const ConvStage& s = stages[i];
    const std::string base = prefix + ".conv" + std::to_string(i);
    const int64_t fan_in = c * s.kernel * s.kernel;
    model.param_names.push_back(base + ".weight");
    model.params.push_back(
        he_normal({s.out_channels, c, s.kernel, s.kernel}, fan_in, rng));
    model.param_names.push_back(base + ".bias");
    model.params.push_back(Tensor({s.out_channels}, true));
    c = s.out_channels;
  }
}

void add_linear_params(FusionModel& model, const std::string& base,
                       int64_t out_len, int64_t in_len, std::mt19937_64& rng) {
  model.param_names.push_back(base + ".weight");
  model.params.push_back(he_normal({out_len, in_len}, in_len, rng));
  model.param_names.push_back(base + ".bias");
  model.params.push_back(Tensor({out_len}, true));
}

Tensor forward_branch(const FusionModel& model, const std::string& prefix,
                      const Tensor& input, const std::vector<ConvStage>& stages,
                      int64_t feature_len, Tape* tape) {
  Tensor x = input;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const std::string base = prefix + ".conv" + std::to_string(i);
    const int64_t pad = stages[i].kernel / 2;
    x = conv2d(x, model.param(base + ".weight"), model.param(base + ".bias"),
               1, pad, tape);
    x = relu(x, tape);
    x = maxpool2d(x, tape);
  }
  x = x.reshape({x.extent(0) * x.extent(1) * x.extent(2)});
  x = linear(x, model.param(prefix + ".fc.weight"),
             model.param(prefix + ".fc.bias"), tape);
  x = relu(x, tape);
  if (x.extent(0) != feature_len) {
    throw ShapeError(prefix + " branch produced " +
                     std::to_string(x.extent(0)) + " features, expected " +
                     std::to_string(feature_len));
  }
  return x;
}

}  // namespace

std::string fusion_mode_name(FusionMode mode) {
  return mode == FusionMode::AudioVideo ? "av" : "video";
}

FusionMode fusion_mode_from_name(const std::string& name) {
  if (name == "av" || name == "audio+video") return FusionMode::AudioVideo;
  if (name == "video" || name == "video-only") return FusionMode::VideoOnly;
  throw ConfigError("unknown fusion mode '" + name + "' (use av or video)");
}

void ModelConfig::validate() const {
  if (visual_feature_len != 4 * audio_feature_len) {
    throw ConfigError("visual feature length must be 4x the audio length, got " +
                      std::to_string(visual_feature_len) + " vs " +
                      std::to_string(audio_feature_len));
  }
  if (n_classes < 2) throw ConfigError("need at least 2 classes");
  if (n_frames < 1 || visual_height < 1 || visual_width < 1 ||
      audio_bins < 1 || audio_frames < 1 || classifier_hidden < 1) {
    throw ConfigError("model dimensions must be positive");
  }
  if (visual_convs.empty() || audio_convs.empty()) {
    throw ConfigError("each branch needs at least one conv stage");
  }
  for (const auto* stages : {&visual_convs, &audio_convs}) {
    for (const ConvStage& s : *stages) {
      if (s.out_channels < 1) throw ConfigError("conv channels must be positive");
      if (s.kernel < 1 || s.kernel % 2 == 0) {
        throw ConfigError("conv kernels must be odd and positive");
      }
    }
  }
}

Tensor& FusionModel::param(const std::string& name) {
  for (std::size_t i = 0; i < param_names.size(); ++i) {
    if (param_names[i] == name) return params[i];
  }
  throw StateError("model has no parameter '" + name + "'");
}

const Tensor& FusionModel::param(const std::string& name) const {
  for (std::size_t i = 0; i < param_names.size(); ++i) {
    if (param_names[i] == name) return params[i];
  }
  throw StateError("model has no parameter '" + name + "'");
}

bool FusionModel::has_param(const std::string& name) const {
  return std::find(param_names.begin(), param_names.end(), name) !=
         param_names.end();
}

std::size_t FusionModel::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor& t : params) n += t.size();
  return n;
}

FusionModel FusionModel::clone() const {
  FusionModel copy;
  copy.config = config;
  copy.param_names = param_names;
  copy.params.reserve(params.size());
  for (const Tensor& t : params) {
    Tensor c = t.clone();
    c.set_requires_grad(t.requires_grad());
    copy.params.push_back(c);
  }
  return copy;
}

FusionModel init_model(const ModelConfig& config) {
  config.validate();
  FusionModel model;
  model.config = config;
  std::mt19937_64 rng(config.init_seed);

  const BranchDims vis = branch_dims(config.n_frames, config.visual_height,
                                     config.visual_width, config.visual_convs);
  add_conv_params(model, "visual", config.n_frames, config.visual_convs, rng);
  add_linear_params(model, "visual.fc", config.visual_feature_len,
                    vis.flat_len, rng);

  if (config.mode == FusionMode::AudioVideo) {
    const BranchDims aud = branch_dims(1, config.audio_bins,
                                       config.audio_frames, config.audio_convs);
    add_conv_params(model, "audio", 1, config.audio_convs, rng);
    add_linear_params(model, "audio.fc", config.audio_feature_len,
                      aud.flat_len, rng);
  }

  add_linear_params(model, "classifier.fc0", config.classifier_hidden,
                    config.classifier_input_len(), rng);
  add_linear_params(model, "classifier.fc1", config.n_classes,
                    config.classifier_hidden, rng);
  return model;
}

FusionModel visual_only_variant(ModelConfig config) {
  config.mode = FusionMode::VideoOnly;
  return init_model(config);
}

Tensor forward_visual(const FusionModel& model, const Tensor& stack,
                      Tape* tape) {
  const ModelConfig& cfg = model.config;
  if (stack.rank() != 3 || stack.extent(0) != cfg.n_frames ||
      stack.extent(1) != cfg.visual_height ||
      stack.extent(2) != cfg.visual_width) {
    throw ShapeError("visual input must be " + std::to_string(cfg.n_frames) +
                     "x" + std::to_string(cfg.visual_height) + "x" +
                     std::to_string(cfg.visual_width) + ", got " +
                     stack.shape_string());
  }
  return forward_branch(model, "visual", stack, cfg.visual_convs,
                        cfg.visual_feature_len, tape);
}

Tensor forward_audio(const FusionModel& model, const Tensor& spec,
                     Tape* tape) {
  const ModelConfig& cfg = model.config;
  if (cfg.mode != FusionMode::AudioVideo) {
    throw ConfigError("this model has no audio branch (video-only mode)");
  }
  if (spec.rank() != 3 || spec.extent(0) != 1 ||
      spec.extent(1) != cfg.audio_bins || spec.extent(2) != cfg.audio_frames) {
    throw ShapeError("audio input must be 1x" + std::to_string(cfg.audio_bins) +
                     "x" + std::to_string(cfg.audio_frames) + ", got " +
                     spec.shape_string());
  }
  return forward_branch(model, "audio", spec, cfg.audio_convs,
                        cfg.audio_feature_len, tape);
}

Tensor forward_fused(const FusionModel& model, const Tensor& stack,
                     const Tensor& spec, Tape* tape) {
  if (model.config.mode != FusionMode::AudioVideo) {
    throw ConfigError("forward_fused requires an audio+video model");
  }
  const Tensor visual = forward_visual(model, stack, tape);
  const Tensor audio = forward_audio(model, spec, tape);
  Tensor features = concat(visual, audio, tape);
  Tensor hidden = relu(
      linear(features, model.param("classifier.fc0.weight"),
             model.param("classifier.fc0.bias"), tape),
      tape);
  return linear(hidden, model.param("classifier.fc1.weight"),
                model.param("classifier.fc1.bias"), tape);
}

Tensor forward_scores(const FusionModel& model, const Tensor& stack,
                      const Tensor* spec, Tape* tape) {
  if (model.config.mode == FusionMode::AudioVideo) {
    if (spec == nullptr || !spec->defined()) {
      throw ConfigError("audio+video model needs a spectrogram input");
    }
    return forward_fused(model, stack, *spec, tape);
  }
  const Tensor features = forward_visual(model, stack, tape);
  Tensor hidden = relu(
      linear(features, model.param("classifier.fc0.weight"),
             model.param("classifier.fc0.bias"), tape),
      tape);
  return linear(hidden, model.param("classifier.fc1.weight"),
                model.param("classifier.fc1.bias"), tape);
}

Prediction predict(const FusionModel& model, const Tensor& stack,
                   const Tensor* spec) {
  const Tensor scores = forward_scores(model, stack, spec, nullptr);
  Prediction pred;
  pred.probabilities = softmax(scores);
  const auto p = pred.probabilities.data();
  pred.label = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[std::size_t(pred.label)]) pred.label = int64_t(i);
  }
  return pred;
}

std::size_t branch_parameter_count(const FusionModel& model,
                                   const std::string& prefix) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < model.param_names.size(); ++i) {
    if (model.param_names[i].rfind(prefix, 0) == 0) n += model.params[i].size();
  }
  return n;
}

namespace {

std::string conv_stages_string(const std::vector<ConvStage>& stages) {
  std::ostringstream out;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (i) out << ",";
    out << stages[i].out_channels << ":" << stages[i].kernel;
  }
  return out.str();
}

std::vector<ConvStage> conv_stages_from_string(const std::string& text) {
  std::vector<ConvStage> stages;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw FormatError("bad conv stage '" + item + "' in checkpoint header");
    }
    stages.push_back(ConvStage{std::stoll(item.substr(0, colon)),
                               std::stoll(item.substr(colon + 1))});
  }
  return stages;
}

}  // namespace

void save_checkpoint(const FusionModel& model,
                     const std::filesystem::path& path) {
  const ModelConfig& cfg = model.config;
  std::ostringstream header;
  header << "mode=" << fusion_mode_name(cfg.mode) << "\n";
  header << "n_frames=" << cfg.n_frames << "\n";
  header << "visual_height=" << cfg.visual_height << "\n";
  header << "visual_width=" << cfg.visual_width << "\n";
  header << "audio_bins=" << cfg.audio_bins << "\n";
  header << "audio_frames=" << cfg.audio_frames << "\n";
  header << "visual_feature_len=" << cfg.visual_feature_len << "\n";
  header << "audio_feature_len=" << cfg.audio_feature_len << "\n";
  header << "n_classes=" << cfg.n_classes << "\n";
  header << "classifier_hidden=" << cfg.classifier_hidden << "\n";
  header << "visual_convs=" << conv_stages_string(cfg.visual_convs) << "\n";
  header << "audio_convs=" << conv_stages_string(cfg.audio_convs) << "\n";
  header << "init_seed=" << cfg.init_seed << "\n";
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const Tensor& t = model.params[i];
    header << "tensor " << model.param_names[i] << " ";
    for (int a = 0; a < t.rank(); ++a) {
      if (a) header << "x";
      header << t.extent(a);
    }
    header << " " << t.size() << "\n";
  }
  header << "\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const std::string head = header.str();
  out.write(head.data(), std::streamsize(head.size()));
  for (const Tensor& t : model.params) {
    static_assert(sizeof(double) == 8);
    const auto d = t.data();
    out.write(reinterpret_cast<const char*>(d.data()),
              std::streamsize(d.size() * 8));
  }
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

FusionModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());

  ModelConfig cfg;
  struct TensorSpec {
    std::string name;
    std::vector<int64_t> shape;
    std::size_t count = 0;
  };
  std::vector<TensorSpec> specs;

  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) break;  // end of header
    if (line.rfind("tensor ", 0) == 0) {
      std::istringstream fields(line);
      std::string tag, name, shape_text;
      std::size_t count = 0;
      fields >> tag >> name >> shape_text >> count;
      if (fields.fail() || name.empty()) {
        throw FormatError(path.string() + ": bad tensor line '" + line + "'");
      }
      TensorSpec spec;
      spec.name = name;
      spec.count = count;
      std::istringstream dims(shape_text);
      std::string d;
      while (std::getline(dims, d, 'x')) spec.shape.push_back(std::stoll(d));
      if (shape_size(spec.shape) != count) {
        throw FormatError(path.string() + ": tensor '" + name +
                          "' count disagrees with its shape");
      }
      specs.push_back(std::move(spec));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(path.string() + ": bad header line '" + line + "'");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "mode") cfg.mode = fusion_mode_from_name(value);
      else if (key == "n_frames") cfg.n_frames = std::stoll(value);
      else if (key == "visual_height") cfg.visual_height = std::stoll(value);
      else if (key == "visual_width") cfg.visual_width = std::stoll(value);
      else if (key == "audio_bins") cfg.audio_bins = std::stoll(value);
      else if (key == "audio_frames") cfg.audio_frames = std::stoll(value);
      else if (key == "visual_feature_len") cfg.visual_feature_len = std::stoll(value);
      else if (key == "audio_feature_len") cfg.audio_feature_len = std::stoll(value);
      else if (key == "n_classes") cfg.n_classes = std::stoll(value);
      else if (key == "classifier_hidden") cfg.classifier_hidden = std::stoll(value);
      else if (key == "visual_convs") cfg.visual_convs = conv_stages_from_string(value);
      else if (key == "audio_convs") cfg.audio_convs = conv_stages_from_string(value);
      else if (key == "init_seed") cfg.init_seed = std::stoull(value);
      else throw FormatError(path.string() + ": unknown header key '" + key + "'");
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception&) {
      throw FormatError(path.string() + ": bad value for '" + key + "'");
    }
  }
  if (specs.empty()) {
    throw FormatError(path.string() + ": checkpoint header lists no tensors");
  }

  FusionModel model;
  model.config = cfg;
  for (const TensorSpec& spec : specs) {
    std::vector<double> data(spec.count);
    in.read(reinterpret_cast<char*>(data.data()),
            std::streamsize(spec.count * 8));
    if (std::size_t(in.gcount()) != spec.count * 8) {
      throw IoError(path.string() + ": truncated payload for tensor '" +
                    spec.name + "'");
    }
    model.param_names.push_back(spec.name);
    model.params.push_back(
        Tensor::from_data(spec.shape, std::move(data), true));
  }
  return model;
}

}  // namespace emofuse
