#include "emofuse/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "emofuse/error.hpp"
#include "emofuse/image.hpp"
#include "emofuse/vision.hpp"

namespace emofuse {

std::int64_t emotion_index(const std::string& name) {
  for (std::size_t i = 0; i < kEmotionNames.size(); ++i) {
    if (kEmotionNames[i] == name) return std::int64_t(i);
  }
  throw ConfigError("unknown emotion label '" + name + "'");
}

std::string emotion_name(std::int64_t index) {
  if (index < 0 || std::size_t(index) >= kEmotionNames.size()) {
    throw ConfigError("emotion index " + std::to_string(index) +
                      " out of range");
  }
  return std::string(kEmotionNames[std::size_t(index)]);
}

std::vector<std::string> DatasetManifest::actor_ids() const {
  std::vector<std::string> ids;
  for (const ClipRecord& r : records) ids.push_back(r.actor_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());

  DatasetManifest manifest;
  manifest.base_dir = path.parent_path();

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::istringstream split(line);
    std::string field;
    while (std::getline(split, field, '\t')) fields.push_back(field);
    if (fields.size() < 5 || fields.size() > 6) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 5 or 6 tab-separated fields, got " +
                        std::to_string(fields.size()));
    }
    ClipRecord record;
    record.clip_id = fields[0];
    record.actor_id = fields[1];
    record.label = emotion_index(fields[2]);
    record.frames_path = fields[3];
    record.audio_path = fields[4];
    if (fields.size() == 6) record.boxes_path = fields[5];
    manifest.records.push_back(std::move(record));
    seen_ids.push_back(fields[0]);
  }

  std::sort(seen_ids.begin(), seen_ids.end());
  const auto dup = std::adjacent_find(seen_ids.begin(), seen_ids.end());
  if (dup != seen_ids.end()) {
    throw FormatError(path.string() + ": duplicate clip id '" + *dup + "'");
  }
  return manifest;
}

void save_manifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const ClipRecord& r : manifest.records) {
    out << r.clip_id << "\t" << r.actor_id << "\t" << emotion_name(r.label)
        << "\t" << r.frames_path << "\t" << r.audio_path;
    if (!r.boxes_path.empty()) out << "\t" << r.boxes_path;
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

ClipLoader::ClipLoader(std::filesystem::path base_dir, LoaderOptions options)
    : base_dir_(std::move(base_dir)), options_(options) {}

std::filesystem::path ClipLoader::resolve(const std::string& relative) const {
  const std::filesystem::path p(relative);
  return p.is_absolute() ? p : base_dir_ / p;
}

ClipSample ClipLoader::load(const ClipRecord& record, bool with_audio) {
  ClipSample sample;
  sample.clip_id = record.clip_id;
  sample.actor_id = record.actor_id;
  sample.label = record.label;

  if (auto it = visual_cache_.find(record.clip_id); it != visual_cache_.end()) {
    sample.visual = it->second;
  } else {
    sample.visual = load_visual(record);
    visual_cache_.emplace(record.clip_id, sample.visual);
  }

  if (with_audio) {
    if (auto it = audio_cache_.find(record.clip_id); it != audio_cache_.end()) {
      sample.audio = it->second;
    } else {
      sample.audio = load_audio(record);
      audio_cache_.emplace(record.clip_id, sample.audio);
    }
  }
  return sample;
}

Tensor ClipLoader::load_visual(const ClipRecord& record) {
  const std::filesystem::path dir = resolve(record.frames_path);
  std::vector<std::filesystem::path> files;
  {
    std::error_code ec;
    std::filesystem::directory_iterator it(dir, ec);
    if (ec) {
      throw IoError("cannot list frame directory " + dir.string() + ": " +
                    ec.message());
    }
    for (const auto& entry : it) {
      const auto ext = entry.path().extension();
      if (ext == ".pgm" || ext == ".ppm") files.push_back(entry.path());
    }
  }
  if (files.empty()) {
    throw FormatError("no .pgm/.ppm frames in " + dir.string() +
                      " for clip '" + record.clip_id + "'");
  }
  std::sort(files.begin(), files.end());

  std::map<std::int64_t, FaceBox> boxes;
  if (!record.boxes_path.empty()) {
    const std::filesystem::path bp = resolve(record.boxes_path);
    std::ifstream in(bp);
    if (!in) throw IoError("cannot open face-box sidecar " + bp.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      FaceBox box;
      char c1, c2, c3, c4;
      std::istringstream fields(line);
      fields >> box.frame_index >> c1 >> box.x >> c2 >> box.y >> c3 >>
          box.width >> c4 >> box.height;
      if (fields.fail() || c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',') {
        throw FormatError(bp.string() + ":" + std::to_string(line_no) +
                          ": expected frame_index,x,y,width,height");
      }
      boxes[box.frame_index] = box;
    }
  }

  // Pick the equally-distanced frame indices first; only those get decoded.
  FrameSequence cropped;
  cropped.frames.reserve(std::size_t(options_.n_frames));
  for (const std::int64_t idx :
       sample_frame_indices(std::int64_t(files.size()), options_.n_frames)) {
    const Tensor frame = load_image(files[std::size_t(idx)]);
    FaceBox box;
    if (!boxes.empty()) {
      const auto it = boxes.find(idx);
      if (it == boxes.end()) {
        throw FormatError("clip '" + record.clip_id + "': no face box for frame " +
                          std::to_string(idx));
      }
      box = it->second;
    } else {
      box = FaceBox{idx, 0, 0, frame.extent(1), frame.extent(0)};
    }
    cropped.frames.push_back(
        crop_and_resize(frame, box, options_.face_height, options_.face_width));
  }
  return stack_frames(cropped);
}

Tensor ClipLoader::load_audio(const ClipRecord& record) {
  ++audio_reads_;
  const AudioClip clip = load_wav(resolve(record.audio_path));
  return spectrogram_pipeline(clip, options_.spectrogram);
}

}  // namespace emofuse
