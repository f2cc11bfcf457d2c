#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emofuse/spectrogram.hpp"
#include "emofuse/training.hpp"

namespace emofuse {

/// The six emotion labels, in class-index order.
inline constexpr std::array<std::string_view, 6> kEmotionNames = {
    "neutral", "happy", "anger", "disgust", "fear", "sad"};

std::int64_t emotion_index(const std::string& name);
std::string emotion_name(std::int64_t index);

/// One dataset sample: frame directory plus audio file, with an optional
/// face-box sidecar ("frame_index,x,y,width,height" lines).
struct ClipRecord {
  std::string clip_id;
  std::string actor_id;
  std::int64_t label = 0;
  std::string frames_path;
  std::string audio_path;
  std::string boxes_path;  // empty when frames arrive pre-cropped
};

struct DatasetManifest {
  std::vector<ClipRecord> records;
  /// Directory against which relative record paths resolve (the manifest's
  /// own directory after load_manifest).
  std::filesystem::path base_dir;

  std::vector<std::string> actor_ids() const;  // distinct, sorted
};

/// Tab-separated manifest: clip_id, actor_id, label, frames_path,
/// audio_path, optional boxes_path. Labels are the six emotion names.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path);

struct LoaderOptions {
  SpectrogramOptions spectrogram;
  std::int64_t n_frames = 20;
  std::int64_t face_height = 98;
  std::int64_t face_width = 80;
};

/// Loads and preprocesses clips into network-ready tensors, caching by
/// clip id so repeated folds reuse the work. The audio-read counter backs
/// the video-only-never-touches-audio check.
class ClipLoader {
 public:
  ClipLoader(std::filesystem::path base_dir, LoaderOptions options = {});

  /// Visual stack (and spectrogram when with_audio) for one record.
  ClipSample load(const ClipRecord& record, bool with_audio);

  std::int64_t audio_reads() const { return audio_reads_; }
  const LoaderOptions& options() const { return options_; }

 private:
  std::filesystem::path resolve(const std::string& relative) const;
  Tensor load_visual(const ClipRecord& record);
  Tensor load_audio(const ClipRecord& record);

  std::filesystem::path base_dir_;
  LoaderOptions options_;
  std::unordered_map<std::string, Tensor> visual_cache_;
  std::unordered_map<std::string, Tensor> audio_cache_;
  std::int64_t audio_reads_ = 0;
};

}  // namespace emofuse
